#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/source_scan.hpp"

namespace forge {

// One include directive, before target resolution.
struct ParsedInclude {
  std::string target;
  bool angled = false;
  int line = 0;
};

// A syntactic entity found by a frontend. Qualified-name assembly, kind
// refinement (function vs out-of-line method) and contain-edge wiring happen
// later, once all files are parsed.
struct ParsedEntity {
  EntityKind kind = EntityKind::Function;
  std::string name;       // base name
  std::string qualifier;  // "Widget" for `Widget::resize`, "" otherwise
  std::string ns_prefix;  // enclosing namespace chain, "ns1::ns2::"
  int parent = -1;        // index of enclosing parsed entity, -1 = file
  Span span;
  size_t body_begin = 0;  // offsets into the original source
  size_t body_end = 0;
  std::optional<Signature> signature;
  // token index range of the body, for call-site extraction
  size_t tok_begin = 0;
  size_t tok_end = 0;
};

struct ParsedImport {           // Python only
  std::string module;          // dotted, relative dots preserved ("..pkg.m")
  std::string symbol;          // from-import symbol, "" for plain import
  std::string alias;           // bound name
  int line = 0;
};

struct FileParse {
  std::string path;
  std::string source;
  std::vector<SrcToken> tokens;
  std::vector<ParsedInclude> includes;
  std::vector<ParsedImport> imports;
  std::vector<ParsedEntity> entities;
  std::vector<Diagnostic> diagnostics;
  bool degraded = false;  // parse failure: file node only
};

namespace detail {

inline Signature parse_cpp_params(const std::vector<SrcToken>& toks,
                                  size_t open, size_t close) {
  Signature sig;
  if (close <= open + 1) return sig;
  // split on top-level commas
  std::vector<std::pair<size_t, size_t>> params;
  size_t start = open + 1;
  int depth = 0;
  for (size_t i = open + 1; i < close; ++i) {
    const std::string& t = toks[i].text;
    if (t == "(" || t == "[" || t == "{" || t == "<") ++depth;
    else if (t == ")" || t == "]" || t == "}" || t == ">") --depth;
    else if (t == "," && depth == 0) {
      params.emplace_back(start, i);
      start = i + 1;
    }
  }
  params.emplace_back(start, close);

  for (auto [b, e] : params) {
    if (e <= b) continue;
    if (e - b == 1 && toks[b].text == "void") continue;
    bool variadic = false;
    for (size_t i = b; i + 2 < e + 1 && i + 2 <= e; ++i) {
      if (i + 2 < e && toks[i].text == "." && toks[i + 1].text == "." &&
          toks[i + 2].text == ".") {
        variadic = true;
        break;
      }
    }
    if (!variadic && e - b >= 3) {
      // also catch trailing "..." at the very end
      if (toks[e - 1].text == "." && toks[e - 2].text == "." &&
          toks[e - 3].text == ".")
        variadic = true;
    }
    if (variadic && e - b <= 3) {
      sig.params.push_back("...");
      sig.max_args = -1;
      continue;
    }
    size_t eq = e;
    int depth2 = 0;
    for (size_t i = b; i < e; ++i) {
      const std::string& t = toks[i].text;
      if (t == "(" || t == "[" || t == "{" || t == "<") ++depth2;
      else if (t == ")" || t == "]" || t == "}" || t == ">") --depth2;
      else if (t == "=" && depth2 == 0) {
        eq = i;
        break;
      }
    }
    std::string name;
    int depth3 = 0;
    for (size_t i = b; i < eq; ++i) {
      const std::string& t = toks[i].text;
      if (t == "(" || t == "[" || t == "{" || t == "<") { ++depth3; continue; }
      if (t == ")" || t == "]" || t == "}" || t == ">") { --depth3; continue; }
      if (depth3 == 0 && toks[i].kind == SrcToken::Ident &&
          !cpp_keywords().count(t))
        name = t;
    }
    if (name.empty()) name = "arg" + std::to_string(sig.params.size());
    bool has_default = eq < e;
    if (variadic) {
      sig.params.push_back(name);
      sig.params.push_back("...");
      sig.max_args = -1;
      if (!has_default) ++sig.min_args;
      continue;
    }
    sig.params.push_back(has_default ? name + "=" : name);
    if (!has_default) ++sig.min_args;
  }
  if (sig.max_args != -1) sig.max_args = 0;
  if (sig.max_args != -1) {
    for (const auto& p : sig.params)
      if (p != "...") ++sig.max_args;
  }
  return sig;
}

}  // namespace detail

// Hand-rolled syntactic extractor for C++. It recovers the entity structure
// (classes, functions, methods, namespace-scope variables), include
// directives and call sites. It is deliberately tolerant: anything it cannot
// classify is skipped, and a hard failure degrades the whole file to a bare
// file node (recorded as a diagnostic), so corpus coverage never depends on
// the parser winning against heavy macros.
class CppFileParser {
 public:
  FileParse parse(const std::string& path, std::string source) {
    FileParse fp;
    fp.path = path;
    fp.source = std::move(source);
    try {
      const std::string comment_masked = mask_cpp_comments(fp.source);
      scan_includes(comment_masked, fp);
      masked_ = mask_cpp(fp.source);
      fp.tokens = tokenize_masked(masked_, /*skip_pp_lines=*/true);
      toks_ = &fp.tokens;
      out_ = &fp;
      parse_range(0, fp.tokens.size(), -1, "");
    } catch (const std::exception& ex) {
      fp.entities.clear();
      fp.degraded = true;
      fp.diagnostics.push_back(
          {"parse-failure", path, 0, std::string("degraded to file node: ") +
                                         ex.what()});
    }
    return fp;
  }

 private:
  const std::vector<SrcToken>* toks_ = nullptr;
  FileParse* out_ = nullptr;
  std::string masked_;

  static void scan_includes(const std::string& comment_masked, FileParse& fp) {
    int line = 1;
    size_t pos = 0;
    while (pos < comment_masked.size()) {
      size_t eol = comment_masked.find('\n', pos);
      if (eol == std::string::npos) eol = comment_masked.size();
      std::string_view lv(comment_masked.data() + pos, eol - pos);
      std::string l = trim(lv);
      if (starts_with(l, "#")) {
        std::string rest = trim(l.substr(1));
        if (starts_with(rest, "include")) {
          std::string arg = trim(rest.substr(7));
          if (!arg.empty() && (arg[0] == '"' || arg[0] == '<')) {
            char closer = arg[0] == '"' ? '"' : '>';
            size_t endq = arg.find(closer, 1);
            if (endq != std::string::npos)
              fp.includes.push_back(
                  {arg.substr(1, endq - 1), arg[0] == '<', line});
          }
        }
      }
      pos = eol + 1;
      ++line;
    }
  }

  const SrcToken& tok(size_t i) const { return (*toks_)[i]; }

  size_t skip_to_semi(size_t i, size_t end) {
    while (i < end) {
      const std::string& t = tok(i).text;
      if (t == ";") return i + 1;
      if (t == "(" || t == "[" || t == "{") {
        size_t m = match_forward(*toks_, i);
        if (m >= end) return end;
        i = m + 1;
        continue;
      }
      ++i;
    }
    return end;
  }

  // expects tok(i).text == "<"; returns index just past the matching ">"
  size_t skip_angles(size_t i, size_t end) {
    int depth = 0;
    while (i < end) {
      const std::string& t = tok(i).text;
      if (t == "<") ++depth;
      else if (t == ">") {
        if (--depth == 0) return i + 1;
      } else if (t == ">>") {
        depth -= 2;
        if (depth <= 0) return i + 1;
      } else if (t == "(" || t == "[" || t == "{") {
        size_t m = match_forward(*toks_, i);
        if (m >= end) return end;
        i = m;
      } else if (t == ";") {
        return i;  // malformed, bail
      }
      ++i;
    }
    return end;
  }

  void add_entity(ParsedEntity e) { out_->entities.push_back(std::move(e)); }

  void parse_range(size_t begin, size_t end, int parent,
                   const std::string& ns_prefix) {
    size_t i = begin;
    while (i < end) {
      const SrcToken& t = tok(i);
      const std::string& tx = t.text;

      if (tx == ";" || tx == "}") { ++i; continue; }

      if (tx == "template") {
        if (i + 1 < end && tok(i + 1).text == "<")
          i = skip_angles(i + 1, end);
        else
          ++i;
        continue;
      }
      if (tx == "namespace") {
        size_t j = i + 1;
        std::string name;
        while (j < end && (tok(j).kind == SrcToken::Ident ||
                           tok(j).text == "::")) {
          if (tok(j).kind == SrcToken::Ident) {
            if (!name.empty()) name += "::";
            name += tok(j).text;
          }
          ++j;
        }
        if (j < end && tok(j).text == "{") {
          size_t close = match_forward(*toks_, j);
          if (close >= end && close >= toks_->size())
            throw std::runtime_error("unbalanced namespace at line " +
                                     std::to_string(t.line));
          std::string inner =
              name.empty() ? ns_prefix : ns_prefix + name + "::";
          parse_range(j + 1, std::min(close, end), parent, inner);
          i = std::min(close, end) + 1;
        } else {
          i = skip_to_semi(j, end);  // namespace alias / using-directive
        }
        continue;
      }
      if (tx == "extern" && i + 1 < end && tok(i + 1).kind == SrcToken::Str &&
          i + 2 < end && tok(i + 2).text == "{") {
        size_t close = match_forward(*toks_, i + 2);
        parse_range(i + 3, std::min(close, end), parent, ns_prefix);
        i = std::min(close, end) + 1;
        continue;
      }
      if (tx == "class" || tx == "struct") {
        i = parse_class(i, end, parent, ns_prefix);
        continue;
      }
      if (tx == "enum" || tx == "union") {
        i = skip_to_semi(i + 1, end);
        continue;
      }
      if (tx == "using" || tx == "typedef" || tx == "static_assert" ||
          tx == "friend" || tx == "asm") {
        i = skip_to_semi(i + 1, end);
        continue;
      }
      if ((tx == "public" || tx == "private" || tx == "protected") &&
          i + 1 < end && tok(i + 1).text == ":") {
        i += 2;
        continue;
      }
      i = parse_declaration(i, end, parent, ns_prefix);
    }
  }

  // `class`/`struct` keyword at index i.
  size_t parse_class(size_t i, size_t end, int parent,
                     const std::string& ns_prefix) {
    const int start_line = tok(i).line;
    const size_t decl_begin = tok(i).begin;
    size_t j = i + 1;
    std::string name;
    size_t open = end;
    int depth = 0;
    bool saw_colon = false;
    while (j < end) {
      const std::string& tx = tok(j).text;
      if (tx == "(" || tx == "[") {
        size_t m = match_forward(*toks_, j);
        if (m >= end) return end;
        j = m + 1;
        continue;
      }
      if (tx == "<") { j = skip_angles(j, end); continue; }
      if (tx == "{" && depth == 0) { open = j; break; }
      if (tx == ";" && depth == 0) return j + 1;  // forward declaration
      if (tx == ":" && depth == 0) saw_colon = true;
      if (!saw_colon && tok(j).kind == SrcToken::Ident && tx != "final" &&
          tx != "alignas" && !cpp_keywords().count(tx))
        name = tx;
      ++j;
    }
    if (open >= end) return end;
    if (name.empty()) {  // anonymous struct: skip as a plain block
      size_t close = match_forward(*toks_, open);
      return skip_to_semi(std::min(close, end), end);
    }
    size_t close = match_forward(*toks_, open);
    if (close >= toks_->size())
      throw std::runtime_error("unbalanced class body: " + name);

    ParsedEntity ent;
    ent.kind = EntityKind::Class;
    ent.name = name;
    ent.ns_prefix = ns_prefix;
    ent.parent = parent;
    ent.span = {start_line, tok(close).line};
    ent.body_begin = decl_begin;
    ent.body_end = tok(close).end;
    // include a trailing ';' in the body slice when present
    if (close + 1 < toks_->size() && tok(close + 1).text == ";") {
      ent.span.end = tok(close + 1).line;
      ent.body_end = tok(close + 1).end;
    }
    add_entity(ent);
    int my_index = static_cast<int>(out_->entities.size()) - 1;
    parse_range(open + 1, close, my_index, ns_prefix + name + "::");
    return skip_to_semi(close + 1, end);
  }

  // Anything else at declaration scope: function definition, variable,
  // prototype, macro invocation. Classification is scan-ahead based.
  size_t parse_declaration(size_t i, size_t end, int parent,
                           const std::string& ns_prefix) {
    size_t first_paren = end;
    size_t brace = end, semi = end;
    bool saw_eq = false;
    bool saw_extern = false;
    size_t j = i;
    while (j < end) {
      const std::string& tx = tok(j).text;
      if (tx == "extern") saw_extern = true;
      if (tx == "(") {
        if (first_paren == end && !saw_eq) first_paren = j;
        size_t m = match_forward(*toks_, j);
        if (m >= end) return end;
        j = m + 1;
        continue;
      }
      if (tx == "[") {
        size_t m = match_forward(*toks_, j);
        if (m >= end) return end;
        j = m + 1;
        continue;
      }
      if (tx == "{") {
        if (saw_eq) {  // brace initializer; statement continues to ';'
          size_t m = match_forward(*toks_, j);
          if (m >= end) return end;
          j = m + 1;
          continue;
        }
        brace = j;
        break;
      }
      if (tx == ";") { semi = j; break; }
      if (tx == "=") saw_eq = true;
      if (tx == ":" && first_paren != end && !saw_eq) {
        // constructor initializer list: scan to the body brace
        size_t k = j + 1;
        while (k < end && tok(k).text != "{") {
          if (tok(k).text == "(" || tok(k).text == "[") {
            size_t m = match_forward(*toks_, k);
            if (m >= end) return end;
            k = m;
          } else if (tok(k).text == ";") {
            break;
          }
          ++k;
        }
        if (k < end && tok(k).text == "{") { brace = k; }
        j = k;
        break;
      }
      ++j;
    }

    if (brace < end && first_paren < end && !saw_eq)
      return emit_function(i, first_paren, brace, end, parent, ns_prefix);

    if (brace < end && first_paren == end && !saw_eq) {
      // `Type name{init};` or a stray block; only the former has a name
      std::string name, qual;
      name_chain_before(brace, i, name, qual);
      size_t close = match_forward(*toks_, brace);
      if (close >= end && close >= toks_->size()) return end;
      size_t after = skip_to_semi(std::min(close, end), end);
      if (!name.empty())
        emit_variable(i, after, name, qual, parent, ns_prefix, end);
      return after;
    }

    if (semi < end) {
      if (first_paren < end || saw_extern || parent_is_class(parent))
        return semi + 1;  // prototype / extern decl / member variable
      std::string name, qual;
      size_t name_end = semi;
      int depth = 0;
      for (size_t k = i; k < semi; ++k) {
        const std::string& tx = tok(k).text;
        if (tx == "(" || tx == "[" || tx == "{") ++depth;
        else if (tx == ")" || tx == "]" || tx == "}") --depth;
        else if ((tx == "=" || tx == ",") && depth == 0) {
          name_end = k;
          break;
        }
      }
      name_chain_before(name_end, i, name, qual);
      if (!name.empty())
        emit_variable(i, semi + 1, name, qual, parent, ns_prefix, end);
      return semi + 1;
    }
    return end;  // ran off the scope; tolerate
  }

  bool parent_is_class(int parent) const {
    return parent >= 0 &&
           out_->entities[static_cast<size_t>(parent)].kind ==
               EntityKind::Class;
  }

  // Collects `A::B::name` ending just before token index `pos` (exclusive),
  // not scanning back past `low`.
  void name_chain_before(size_t pos, size_t low, std::string& name,
                         std::string& qual) {
    if (pos == 0 || pos <= low) return;
    size_t k = pos - 1;
    if (tok(k).kind != SrcToken::Ident || cpp_keywords().count(tok(k).text)) {
      // operator overloads: `operator+`, `operator()`, ...
      size_t p = k;
      while (p > low && p > 0 && tok(p).text != "operator") --p;
      if (p >= low && tok(p).text == "operator") {
        std::string sym;
        for (size_t q = p + 1; q <= k; ++q) sym += tok(q).text;
        name = "operator" + sym;
        k = p;
      } else {
        return;
      }
    } else {
      name = tok(k).text;
      if (k > low && tok(k - 1).text == "~") {
        name = "~" + name;
        --k;
      }
    }
    std::vector<std::string> parts;
    while (k >= low + 2 && tok(k - 1).text == "::" &&
           tok(k - 2).kind == SrcToken::Ident) {
      parts.push_back(tok(k - 2).text);
      k -= 2;
    }
    std::reverse(parts.begin(), parts.end());
    qual = join(parts, "::");
  }

  size_t emit_function(size_t decl_start, size_t paren, size_t brace,
                       size_t end, int parent, const std::string& ns_prefix) {
    std::string name, qual;
    name_chain_before(paren, decl_start, name, qual);
    size_t close = match_forward(*toks_, brace);
    if (close >= toks_->size())
      throw std::runtime_error("unbalanced function body near line " +
                               std::to_string(tok(brace).line));
    if (name.empty()) return std::min(close, end) + 1;

    size_t paren_close = match_forward(*toks_, paren);
    ParsedEntity ent;
    ent.kind = parent_is_class(parent) ? EntityKind::Method
                                       : EntityKind::Function;
    ent.name = name;
    ent.qualifier = qual;
    ent.ns_prefix = ns_prefix;
    ent.parent = parent;
    ent.span = {tok(decl_start).line, tok(close).line};
    ent.body_begin = tok(decl_start).begin;
    ent.body_end = tok(close).end;
    ent.signature = detail::parse_cpp_params(*toks_, paren, paren_close);
    ent.tok_begin = brace + 1;
    ent.tok_end = close;
    add_entity(std::move(ent));
    return std::min(close, end) + 1;
  }

  void emit_variable(size_t decl_start, size_t after, std::string name,
                     std::string qual, int parent,
                     const std::string& ns_prefix, size_t end) {
    if (parent_is_class(parent)) return;  // member variables are not entities
    ParsedEntity ent;
    ent.kind = EntityKind::GlobalVariable;
    ent.name = std::move(name);
    ent.qualifier = std::move(qual);
    ent.ns_prefix = ns_prefix;
    ent.parent = parent;
    size_t last = after > decl_start ? after - 1 : decl_start;
    if (last >= toks_->size()) last = toks_->size() - 1;
    ent.span = {tok(decl_start).line, tok(last).line};
    ent.body_begin = tok(decl_start).begin;
    ent.body_end = tok(last).end;
    ent.tok_begin = decl_start;
    ent.tok_end = std::min(after, end);
    add_entity(std::move(ent));
  }
};

}  // namespace forge
