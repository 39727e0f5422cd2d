#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/graph.hpp"
#include "forge/util.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Masking. Comments and string-literal contents are overwritten with spaces
// (newlines preserved), so every byte offset and line number in the masked
// buffer is valid in the original source. Structural scans run on the masked
// buffer; entity bodies are sliced from the original.
// ---------------------------------------------------------------------------

// Pass 1: comments only. Include directives are scanned on this buffer, so
// string contents (the include target) must survive.
inline std::string mask_cpp_comments(std::string_view src) {
  std::string out(src);
  size_t i = 0;
  const size_t n = src.size();
  auto blank = [&](size_t from, size_t to) {
    for (size_t k = from; k < to && k < n; ++k)
      if (out[k] != '\n') out[k] = ' ';
  };
  while (i < n) {
    char c = src[i];
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      size_t j = i;
      while (j < n && src[j] != '\n') ++j;
      blank(i, j);
      i = j;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      size_t j = src.find("*/", i + 2);
      j = (j == std::string_view::npos) ? n : j + 2;
      blank(i, j);
      i = j;
    } else if (c == 'R' && i + 1 < n && src[i + 1] == '"') {
      // Raw string: R"delim( ... )delim" — skipped here, masked in pass 2.
      size_t p = i + 2;
      std::string delim;
      while (p < n && src[p] != '(') delim += src[p++];
      std::string closer = ")" + delim + "\"";
      size_t j = src.find(closer, p);
      i = (j == std::string_view::npos) ? n : j + closer.size();
    } else if (c == '"' || c == '\'') {
      size_t j = i + 1;
      while (j < n) {
        if (src[j] == '\\') {
          j += 2;
          continue;
        }
        if (src[j] == c || src[j] == '\n') break;
        ++j;
      }
      i = (j < n) ? j + 1 : n;
    } else {
      ++i;
    }
  }
  return out;
}

// Pass 2: string and char literal contents on top of pass 1.
inline std::string mask_cpp(std::string_view src) {
  std::string out = mask_cpp_comments(src);
  size_t i = 0;
  const size_t n = out.size();
  auto blank = [&](size_t from, size_t to) {
    for (size_t k = from; k < to && k < n; ++k)
      if (out[k] != '\n') out[k] = ' ';
  };
  while (i < n) {
    char c = out[i];
    if (c == 'R' && i + 1 < n && out[i + 1] == '"') {
      size_t p = i + 2;
      std::string delim;
      while (p < n && out[p] != '(') delim += out[p++];
      std::string closer = ")" + delim + "\"";
      size_t j = out.find(closer, p);
      j = (j == std::string::npos) ? n : j + closer.size();
      // replace the whole raw literal with a plain empty string token
      blank(i, j);
      if (i < n) out[i] = '"';
      if (j - 1 < n && j >= 1) out[j - 1] = '"';
      i = j;
    } else if (c == '"' || c == '\'') {
      size_t j = i + 1;
      while (j < n) {
        if (out[j] == '\\') {
          j += 2;
          continue;
        }
        if (out[j] == c || out[j] == '\n') break;
        ++j;
      }
      blank(i + 1, j);
      i = (j < n) ? j + 1 : n;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::string mask_python(std::string_view src) {
  std::string out(src);
  size_t i = 0;
  const size_t n = src.size();
  auto blank = [&](size_t from, size_t to) {
    for (size_t k = from; k < to && k < n; ++k)
      if (out[k] != '\n') out[k] = ' ';
  };
  while (i < n) {
    char c = src[i];
    if (c == '#') {
      size_t j = i;
      while (j < n && src[j] != '\n') ++j;
      blank(i, j);
      i = j;
    } else if (c == '"' || c == '\'') {
      bool triple = i + 2 < n && src[i + 1] == c && src[i + 2] == c;
      if (triple) {
        std::string closer(3, c);
        size_t j = src.find(closer, i + 3);
        j = (j == std::string_view::npos) ? n : j + 3;
        blank(i + 3, j >= 3 ? j - 3 : j);
        i = j;
      } else {
        size_t j = i + 1;
        while (j < n) {
          if (src[j] == '\\') {
            j += 2;
            continue;
          }
          if (src[j] == c || src[j] == '\n') break;
          ++j;
        }
        blank(i + 1, j);
        i = (j < n) ? j + 1 : n;
      }
    } else {
      ++i;
    }
  }
  return out;
}

inline std::string mask_source(Language lang, std::string_view src) {
  return lang == Language::Cpp ? mask_cpp(src) : mask_python(src);
}

// ---------------------------------------------------------------------------
// Tokens.
// ---------------------------------------------------------------------------

struct SrcToken {
  enum Kind { Ident, Number, Punct, Str } kind = Punct;
  std::string text;
  int line = 1;
  size_t begin = 0;
  size_t end = 0;
};

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Tokenizes a masked buffer. Preprocessor lines are skipped when
// `skip_pp_lines` (they are handled separately by the C++ frontend).
inline std::vector<SrcToken> tokenize_masked(std::string_view masked,
                                             bool skip_pp_lines,
                                             int first_line = 1) {
  std::vector<SrcToken> toks;
  size_t i = 0;
  int line = first_line;
  const size_t n = masked.size();
  bool at_line_start = true;
  while (i < n) {
    char c = masked[i];
    if (c == '\n') {
      ++line;
      ++i;
      at_line_start = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (skip_pp_lines && at_line_start && c == '#') {
      // consume the directive, honoring backslash continuations
      while (i < n) {
        if (masked[i] == '\n') {
          bool continued = i > 0 && masked[i - 1] == '\\';
          ++line;
          ++i;
          if (!continued) break;
        } else {
          ++i;
        }
      }
      at_line_start = true;
      continue;
    }
    at_line_start = false;
    SrcToken t;
    t.line = line;
    t.begin = i;
    if (is_ident_start(c)) {
      size_t j = i;
      while (j < n && is_ident_char(masked[j])) ++j;
      t.kind = SrcToken::Ident;
      t.text = std::string(masked.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < n && (is_ident_char(masked[j]) || masked[j] == '.')) ++j;
      t.kind = SrcToken::Number;
      t.text = std::string(masked.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '\'') {
      size_t j = i + 1;
      while (j < n && masked[j] != c && masked[j] != '\n') ++j;
      t.kind = SrcToken::Str;
      t.text = std::string(masked.substr(i, std::min(j + 1, n) - i));
      i = (j < n) ? j + 1 : n;
    } else {
      // multi-char operators we care about structurally
      static const char* two[] = {"::", "->", "==", "!=", "<=", ">=", "&&",
                                  "||", "+=", "-=", "*=", "/=", "<<", ">>"};
      t.kind = SrcToken::Punct;
      t.text = std::string(1, c);
      if (i + 1 < n) {
        std::string pair = std::string(1, c) + masked[i + 1];
        for (const char* p : two)
          if (pair == p) {
            t.text = pair;
            break;
          }
      }
      i += t.text.size();
    }
    t.end = i;
    toks.push_back(std::move(t));
  }
  return toks;
}

// Index of the token matching the opener at `open_idx` ('(', '[' or '{'),
// or toks.size() when unbalanced.
inline size_t match_forward(const std::vector<SrcToken>& toks, size_t open_idx) {
  static const std::string openers = "([{";
  static const std::string closers = ")]}";
  int depth = 0;
  for (size_t i = open_idx; i < toks.size(); ++i) {
    const std::string& t = toks[i].text;
    if (t.size() == 1 && openers.find(t[0]) != std::string::npos) ++depth;
    if (t.size() == 1 && closers.find(t[0]) != std::string::npos) {
      if (--depth == 0) return i;
    }
  }
  return toks.size();
}

// ---------------------------------------------------------------------------
// Call-site extraction shared by the frontends and the rule filter.
// ---------------------------------------------------------------------------

struct RawCall {
  std::string name;       // base callee name
  std::string qualifier;  // "obj", "Ns::Cls", "self", "" when unqualified
  bool scope = false;     // qualifier attached via "::" (scope, not receiver)
  int arg_count = 0;
  int line = 0;
};

inline const std::set<std::string>& cpp_keywords() {
  static const std::set<std::string> kw = {
      "alignas",  "alignof",   "asm",       "auto",      "bool",
      "break",    "case",      "catch",     "char",      "class",
      "const",    "constexpr", "consteval", "constinit", "continue",
      "decltype", "default",   "delete",    "do",        "double",
      "else",     "enum",      "explicit",  "export",    "extern",
      "false",    "float",     "for",       "friend",    "goto",
      "if",       "inline",    "int",       "long",      "mutable",
      "namespace","new",       "noexcept",  "nullptr",   "operator",
      "private",  "protected", "public",    "register",  "requires",
      "return",   "short",     "signed",    "sizeof",    "static",
      "struct",   "switch",    "template",  "this",      "throw",
      "true",     "try",       "typedef",   "typeid",    "typename",
      "union",    "unsigned",  "using",     "virtual",   "void",
      "volatile", "while",     "static_cast",  "dynamic_cast",
      "const_cast", "reinterpret_cast", "static_assert", "co_await",
      "co_return", "co_yield", "concept", "final", "override"};
  return kw;
}

inline const std::set<std::string>& python_keywords() {
  static const std::set<std::string> kw = {
      "False",  "None",   "True",    "and",    "as",     "assert", "async",
      "await",  "break",  "class",   "continue", "def",  "del",    "elif",
      "else",   "except", "finally", "for",    "from",   "global", "if",
      "import", "in",     "is",      "lambda", "nonlocal", "not",  "or",
      "pass",   "raise",  "return",  "try",    "while",  "with",   "yield"};
  return kw;
}

// Counts top-level commas inside the paren group opening at `open_idx`.
inline int count_call_args(const std::vector<SrcToken>& toks, size_t open_idx,
                           size_t close_idx) {
  if (close_idx <= open_idx + 1) return 0;  // "()"
  int args = 1, depth = 0;
  for (size_t i = open_idx + 1; i < close_idx; ++i) {
    const std::string& t = toks[i].text;
    if (t == "(" || t == "[" || t == "{") ++depth;
    else if (t == ")" || t == "]" || t == "}") --depth;
    else if (t == "," && depth == 0) ++args;
  }
  return args;
}

// Extracts name(args) call sites from a token stream. Qualifier chains
// (a.b.c / Ns::Cls:: / obj->) are folded into RawCall::qualifier. Keywords
// and control-flow constructs are excluded.
inline std::vector<RawCall> extract_calls(const std::vector<SrcToken>& toks,
                                          Language lang) {
  const auto& keywords =
      lang == Language::Cpp ? cpp_keywords() : python_keywords();
  std::vector<RawCall> out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != SrcToken::Ident) continue;
    if (keywords.count(toks[i].text)) continue;
    size_t paren = i + 1;
    // tolerate explicit template arguments: name<...>(
    if (lang == Language::Cpp && paren < toks.size() &&
        toks[paren].text == "<") {
      int depth = 0;
      size_t j = paren;
      bool ok = false;
      for (; j < toks.size() && j < paren + 64; ++j) {
        if (toks[j].text == "<") ++depth;
        else if (toks[j].text == ">") {
          if (--depth == 0) {
            ok = true;
            break;
          }
        } else if (toks[j].text == ";" || toks[j].text == "{")
          break;
      }
      if (ok) paren = j + 1;
    }
    if (paren >= toks.size() || toks[paren].text != "(") continue;

    // Walk the qualifier chain backwards.
    std::vector<std::string> qual;
    size_t k = i;
    std::string sep_last;
    while (k >= 2) {
      const std::string& sep = toks[k - 1].text;
      bool is_sep = (lang == Language::Cpp)
                        ? (sep == "::" || sep == "." || sep == "->")
                        : (sep == ".");
      if (!is_sep || toks[k - 2].kind != SrcToken::Ident) break;
      qual.push_back(toks[k - 2].text);
      sep_last = sep;
      k -= 2;
    }
    std::reverse(qual.begin(), qual.end());

    if (k >= 1 && lang == Language::Cpp) {
      const std::string& prev = toks[k - 1].text;
      if (prev == "new" || prev == "delete")
        continue;  // handled as a type reference elsewhere
      // `Type var(init)` / `std::vector<int> v(5)` are declarations, not
      // calls: a bare non-keyword identifier or a template close right
      // before the name marks a declarator.
      if ((toks[k - 1].kind == SrcToken::Ident && !keywords.count(prev)) ||
          prev == ">")
        continue;
    }

    size_t close = match_forward(toks, paren);
    if (close >= toks.size()) continue;
    RawCall call;
    call.name = toks[i].text;
    call.scope = lang == Language::Cpp && sep_last == "::";
    call.qualifier = join(qual, call.scope ? "::" : ".");
    call.arg_count = count_call_args(toks, paren, close);
    call.line = toks[i].line;
    out.push_back(std::move(call));
  }
  return out;
}

// Bare identifier occurrences (not immediately followed by '(' and not part
// of a member access on the right side of '.'/'->'). Used to find references
// to globals and types.
inline std::vector<std::pair<std::string, int>> extract_ident_uses(
    const std::vector<SrcToken>& toks, Language lang) {
  const auto& keywords =
      lang == Language::Cpp ? cpp_keywords() : python_keywords();
  std::vector<std::pair<std::string, int>> out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != SrcToken::Ident) continue;
    if (keywords.count(toks[i].text)) continue;
    if (i + 1 < toks.size() && toks[i + 1].text == "(") continue;
    if (i > 0 && (toks[i - 1].text == "." || toks[i - 1].text == "->"))
      continue;
    out.emplace_back(toks[i].text, toks[i].line);
  }
  return out;
}

}  // namespace forge
