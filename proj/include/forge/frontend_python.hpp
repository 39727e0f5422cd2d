#pragma once

#include <string>
#include <vector>

#include "forge/frontend_cpp.hpp"  // FileParse, ParsedEntity
#include "forge/source_scan.hpp"

namespace forge {

// Indentation-based extractor for Python sources. Operates on logical lines
// (bracket and backslash continuations joined) of the masked buffer.
class PythonFileParser {
 public:
  FileParse parse(const std::string& path, std::string source) {
    FileParse fp;
    fp.path = path;
    fp.source = std::move(source);
    try {
      parse_impl(fp);
    } catch (const std::exception& ex) {
      fp.entities.clear();
      fp.degraded = true;
      fp.diagnostics.push_back(
          {"parse-failure", path, 0,
           std::string("degraded to file node: ") + ex.what()});
    }
    return fp;
  }

 private:
  struct LogicalLine {
    std::string text;       // masked, physical lines joined with ' '
    int first_line = 1;
    int last_line = 1;
    size_t begin = 0;        // offset of first char in source
    size_t end = 0;          // offset one past last char of last phys line
    int indent = 0;
    bool blank = true;
  };

  struct Block {
    int indent;
    size_t entity;            // index into fp.entities
    int last_content_line;
    size_t last_content_end;  // offset
  };

  static int indent_of(std::string_view line) {
    int n = 0;
    for (char c : line) {
      if (c == ' ') ++n;
      else if (c == '\t') n += 4;
      else break;
    }
    return n;
  }

  static std::vector<LogicalLine> logical_lines(const std::string& masked) {
    std::vector<LogicalLine> out;
    size_t pos = 0;
    int line_no = 1;
    const size_t n = masked.size();
    while (pos < n) {
      LogicalLine ll;
      ll.first_line = line_no;
      ll.begin = pos;
      int depth = 0;
      bool cont = true;
      while (cont && pos < n) {
        size_t eol = masked.find('\n', pos);
        if (eol == std::string::npos) eol = n;
        std::string_view phys(masked.data() + pos, eol - pos);
        for (char c : phys) {
          if (c == '(' || c == '[' || c == '{') ++depth;
          else if (c == ')' || c == ']' || c == '}') --depth;
        }
        bool backslash = !phys.empty() && phys.back() == '\\';
        if (!ll.text.empty()) ll.text += ' ';
        ll.text += std::string(backslash ? phys.substr(0, phys.size() - 1)
                                         : phys);
        ll.last_line = line_no;
        ll.end = eol;
        pos = (eol < n) ? eol + 1 : n;
        ++line_no;
        cont = depth > 0 || backslash;
      }
      ll.indent = indent_of(ll.text);
      ll.blank = trim(ll.text).empty();
      out.push_back(std::move(ll));
    }
    return out;
  }

  void parse_impl(FileParse& fp) {
    const std::string masked = mask_python(fp.source);
    std::vector<LogicalLine> lines = logical_lines(masked);
    std::vector<Block> stack;

    auto pop_to_indent = [&](int indent) {
      while (!stack.empty() && indent <= stack.back().indent) {
        Block b = stack.back();
        stack.pop_back();
        ParsedEntity& e = fp.entities[b.entity];
        e.span.end = b.last_content_line;
        e.body_end = b.last_content_end;
      }
    };

    for (const auto& ll : lines) {
      if (ll.blank) continue;
      pop_to_indent(ll.indent);
      for (auto& b : stack) {
        b.last_content_line = ll.last_line;
        b.last_content_end = ll.end;
      }

      std::string body = trim(ll.text);
      int parent = stack.empty() ? -1 : static_cast<int>(stack.back().entity);
      bool in_class =
          parent >= 0 && fp.entities[static_cast<size_t>(parent)].kind ==
                             EntityKind::Class;

      if (starts_with(body, "import ") || starts_with(body, "from ")) {
        scan_import(body, ll.first_line, fp);
        continue;
      }
      bool is_async = starts_with(body, "async ");
      std::string head = is_async ? trim(body.substr(5)) : body;

      if (starts_with(head, "def ")) {
        emit_def(head, ll, parent, in_class, fp, stack);
        continue;
      }
      if (starts_with(head, "class ")) {
        emit_class(head, ll, parent, fp, stack);
        continue;
      }
      if (stack.empty()) scan_module_assignment(body, ll, fp);
    }
    pop_to_indent(-1);

    // call sites: tokens of each def body, excluding the header line
    finish_call_regions(fp);
  }

  static void scan_import(const std::string& body, int line, FileParse& fp) {
    auto add = [&](std::string module, std::string symbol, std::string alias) {
      ParsedImport imp;
      imp.module = std::move(module);
      imp.symbol = std::move(symbol);
      imp.alias = std::move(alias);
      imp.line = line;
      fp.imports.push_back(std::move(imp));
    };
    if (starts_with(body, "import ")) {
      for (auto& item : split(body.substr(7), ',')) {
        std::string spec = trim(item);
        if (spec.empty()) continue;
        std::string alias;
        size_t as_pos = spec.find(" as ");
        if (as_pos != std::string::npos) {
          alias = trim(spec.substr(as_pos + 4));
          spec = trim(spec.substr(0, as_pos));
        } else {
          alias = spec;
        }
        add(spec, "", alias);
      }
      return;
    }
    // from X import a, b as c   |   from . import m
    size_t imp_pos = body.find(" import ");
    if (imp_pos == std::string::npos) return;
    std::string module = trim(body.substr(5, imp_pos - 5));
    std::string rest = trim(body.substr(imp_pos + 8));
    if (starts_with(rest, "(")) rest = trim(rest.substr(1));
    if (ends_with(rest, ")")) rest = trim(rest.substr(0, rest.size() - 1));
    if (rest == "*") {
      add(module, "*", "");
      return;
    }
    for (auto& item : split(rest, ',')) {
      std::string spec = trim(item);
      if (spec.empty()) continue;
      std::string alias;
      size_t as_pos = spec.find(" as ");
      if (as_pos != std::string::npos) {
        alias = trim(spec.substr(as_pos + 4));
        spec = trim(spec.substr(0, as_pos));
      } else {
        alias = spec;
      }
      add(module, spec, alias);
    }
  }

  static Signature parse_py_params(const std::string& header, bool in_class) {
    Signature sig;
    size_t open = header.find('(');
    if (open == std::string::npos) return sig;
    int depth = 0;
    size_t close = open;
    for (size_t i = open; i < header.size(); ++i) {
      if (header[i] == '(' || header[i] == '[' || header[i] == '{') ++depth;
      else if (header[i] == ')' || header[i] == ']' || header[i] == '}') {
        if (--depth == 0) {
          close = i;
          break;
        }
      }
    }
    std::string inner = header.substr(open + 1, close - open - 1);
    // split top-level commas
    std::vector<std::string> parts;
    std::string cur;
    depth = 0;
    for (char c : inner) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      else if (c == ')' || c == ']' || c == '}') --depth;
      if (c == ',' && depth == 0) {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);

    bool first = true;
    for (auto& raw : parts) {
      std::string p = trim(raw);
      if (p.empty()) continue;
      if (p == "*" || p == "/") continue;  // positional/kw-only markers
      bool star = starts_with(p, "*");
      bool has_default = false;
      // strip annotation and default
      int d2 = 0;
      std::string name;
      for (size_t i = 0; i < p.size(); ++i) {
        char c = p[i];
        if (c == '(' || c == '[' || c == '{') ++d2;
        else if (c == ')' || c == ']' || c == '}') --d2;
        if (d2 == 0 && (c == ':' || c == '=')) {
          if (c == '=') has_default = true;
          break;
        }
        if (is_ident_char(c) || c == '*') name += c;
      }
      if (d2 == 0 && !has_default && p.find('=') != std::string::npos) {
        // default after annotation: "x: int = 3"
        int d3 = 0;
        for (char c : p) {
          if (c == '(' || c == '[' || c == '{') ++d3;
          else if (c == ')' || c == ']' || c == '}') --d3;
          else if (c == '=' && d3 == 0) has_default = true;
        }
      }
      if (first && in_class && (name == "self" || name == "cls")) {
        first = false;
        continue;
      }
      first = false;
      if (star) {
        sig.params.push_back(name);
        sig.max_args = -1;
        continue;
      }
      sig.params.push_back(has_default ? name + "=" : name);
      if (!has_default) ++sig.min_args;
    }
    if (sig.max_args != -1) {
      sig.max_args = 0;
      for (const auto& p : sig.params)
        if (!starts_with(p, "*")) ++sig.max_args;
    }
    return sig;
  }

  void emit_def(const std::string& head, const LogicalLine& ll, int parent,
                bool in_class, FileParse& fp, std::vector<Block>& stack) {
    std::string after = trim(head.substr(4));
    std::string name;
    for (char c : after) {
      if (!is_ident_char(c)) break;
      name += c;
    }
    if (name.empty()) return;
    ParsedEntity ent;
    ent.kind = in_class ? EntityKind::Method : EntityKind::Function;
    ent.name = name;
    ent.parent = parent;
    ent.span = {ll.first_line, ll.last_line};
    ent.body_begin = ll.begin + static_cast<size_t>(indent_of(ll.text));
    ent.body_end = ll.end;
    ent.signature = parse_py_params(head, in_class);
    // call-region start: first char after the header logical line
    ent.tok_begin = ll.end;  // reused as a source offset for Python
    ent.tok_end = ll.end;
    fp.entities.push_back(std::move(ent));
    stack.push_back({ll.indent, fp.entities.size() - 1, ll.last_line, ll.end});
  }

  void emit_class(const std::string& head, const LogicalLine& ll, int parent,
                  FileParse& fp, std::vector<Block>& stack) {
    std::string after = trim(head.substr(6));
    std::string name;
    for (char c : after) {
      if (!is_ident_char(c)) break;
      name += c;
    }
    if (name.empty()) return;
    ParsedEntity ent;
    ent.kind = EntityKind::Class;
    ent.name = name;
    ent.parent = parent;
    ent.span = {ll.first_line, ll.last_line};
    ent.body_begin = ll.begin + static_cast<size_t>(indent_of(ll.text));
    ent.body_end = ll.end;
    fp.entities.push_back(std::move(ent));
    stack.push_back({ll.indent, fp.entities.size() - 1, ll.last_line, ll.end});
  }

  void scan_module_assignment(const std::string& body, const LogicalLine& ll,
                              FileParse& fp) {
    // simple targets only: NAME = ... or NAME: T = ...
    std::string name;
    size_t i = 0;
    while (i < body.size() && is_ident_char(body[i])) name += body[i++];
    if (name.empty() || python_keywords().count(name)) return;
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i])))
      ++i;
    if (i < body.size() && body[i] == ':') {
      // annotation: scan to top-level '='
      int depth = 0;
      for (; i < body.size(); ++i) {
        char c = body[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        else if (c == ')' || c == ']' || c == '}') --depth;
        else if (c == '=' && depth == 0) break;
      }
    }
    if (i >= body.size() || body[i] != '=') return;
    if (i + 1 < body.size() && body[i + 1] == '=') return;  // comparison
    ParsedEntity ent;
    ent.kind = EntityKind::GlobalVariable;
    ent.name = name;
    ent.parent = -1;
    ent.span = {ll.first_line, ll.last_line};
    ent.body_begin = ll.begin;
    ent.body_end = ll.end;
    ent.tok_begin = ll.begin;
    ent.tok_end = ll.end;
    fp.entities.push_back(std::move(ent));
  }

  // For Python, ParsedEntity::tok_begin/tok_end were filled with *source
  // offsets*; convert the final body regions now that block ends are known.
  void finish_call_regions(FileParse& fp) {
    for (auto& e : fp.entities) {
      if (e.kind == EntityKind::Function || e.kind == EntityKind::Method) {
        e.tok_begin = std::min(e.tok_begin, fp.source.size());
        e.tok_end = e.body_end;
      }
    }
  }
};

}  // namespace forge
