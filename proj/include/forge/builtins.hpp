#pragma once

#include <set>
#include <string>
#include <string_view>

#include "forge/graph.hpp"
#include "forge/util.hpp"

namespace forge {

// Language built-in allowlists. The existence check in the rule filter and
// the call resolver both need to know which names are "free": provided by
// the language or its standard library rather than by the repository.
// The defaults below are embedded; a deployment can extend them from a data
// file (one name per line, '#' comments).

inline const std::set<std::string>& cpp_builtin_names() {
  static const std::set<std::string> names = {
      "printf",  "fprintf", "sprintf", "snprintf", "puts",    "putchar",
      "scanf",  "sscanf",  "getchar", "fgets",    "fopen",   "fclose",
      "fread",  "fwrite",  "fseek",   "ftell",    "malloc",  "calloc",
      "realloc","free",    "memcpy",  "memmove",  "memset",  "memcmp",
      "strlen", "strcmp",  "strncmp", "strcpy",   "strncpy", "strcat",
      "strstr", "strchr",  "strtol",  "strtod",   "atoi",    "atof",
      "abs",    "labs",    "fabs",    "sqrt",     "cbrt",    "pow",
      "exp",    "log",     "log2",    "log10",    "sin",     "cos",
      "tan",    "asin",    "acos",    "atan",     "atan2",   "floor",
      "ceil",   "round",   "trunc",   "fmod",     "fmin",    "fmax",
      "hypot",  "isnan",   "isinf",   "rand",     "srand",   "exit",
      "abort",  "assert",  "qsort",   "bsearch",  "tolower", "toupper",
      "isdigit","isalpha", "isspace", "isalnum",  "swap",    "move",
      "forward","size",    "begin",   "end",      "min",     "max",
      // common standard container/string member names, matched only on
      // receiver-style call sites that failed entity resolution
      "push_back", "pop_back", "emplace_back", "emplace", "empty",
      "front",  "back",    "at",      "reserve",  "resize",  "length",
      "substr", "c_str",   "data",    "str",      "to_string"};
  return names;
}

// Namespace/module qualifiers that mark a call as standard-library.
inline const std::set<std::string>& cpp_builtin_namespaces() {
  static const std::set<std::string> ns = {"std", "boost", "absl", "fmt",
                                           "detail"};
  return ns;
}

inline const std::set<std::string>& python_builtin_names() {
  static const std::set<std::string> names = {
      "print",     "len",       "range",      "int",       "float",
      "str",       "bool",      "bytes",      "list",      "dict",
      "set",       "tuple",     "frozenset",  "open",      "input",
      "enumerate", "zip",       "map",        "filter",    "sorted",
      "reversed",  "sum",       "min",        "max",       "abs",
      "round",     "divmod",    "pow",        "any",       "all",
      "isinstance","issubclass","super",      "getattr",   "setattr",
      "hasattr",   "delattr",   "repr",       "format",    "type",
      "id",        "hash",      "iter",       "next",      "vars",
      "dir",       "callable",  "ord",        "chr",       "hex",
      "oct",       "bin",       "slice",      "object",    "staticmethod",
      "classmethod","property", "exec",       "eval",      "compile",
      "globals",   "locals",    "Exception",  "ValueError","TypeError",
      "KeyError",  "IndexError","RuntimeError","StopIteration",
      "NotImplementedError",    "AttributeError",          "ZeroDivisionError",
      "FileNotFoundError",      "OSError",    "IOError",   "ArithmeticError",
      "AssertionError",         "append",     "extend",    "insert",
      "remove",    "pop",       "clear",      "index",     "count",
      "sort",      "reverse",   "copy",       "keys",      "values",
      "items",     "get",       "update",     "add",       "discard",
      "join",      "split",     "strip",      "lstrip",    "rstrip",
      "replace",   "startswith","endswith",   "find",      "rfind",
      "lower",     "upper",     "title",      "encode",    "decode",
      "isin"};
  return names;
}

inline const std::set<std::string>& python_builtin_modules() {
  static const std::set<std::string> mods = {
      "os",   "sys",  "math",   "json",   "re",        "time",  "typing",
      "collections", "itertools", "functools", "pathlib", "random",
      "string", "struct", "io",  "copy",   "heapq",     "bisect", "abc",
      "dataclasses", "enum", "logging", "unittest", "argparse", "subprocess",
      "shutil", "tempfile", "warnings", "datetime", "pickle", "hashlib"};
  return mods;
}

// Deployment-specific extensions, loaded from the data files shipped under
// data/ (or any file named in the pipeline config). Installed once at
// configuration time.
inline std::set<std::string>& extra_builtin_names(Language lang) {
  static std::set<std::string> cpp_extra;
  static std::set<std::string> py_extra;
  return lang == Language::Cpp ? cpp_extra : py_extra;
}

inline bool is_builtin_call(Language lang, const std::string& name,
                            const std::string& qualifier) {
  if (extra_builtin_names(lang).count(name)) return true;
  if (lang == Language::Cpp) {
    if (!qualifier.empty()) {
      std::string head = split(qualifier, ':')[0];
      if (cpp_builtin_namespaces().count(head)) return true;
    }
    // method names on unknown receivers count when listed (std containers)
    return cpp_builtin_names().count(name) > 0 &&
           (qualifier.empty() || !contains(qualifier, "::"));
  }
  if (!qualifier.empty()) {
    std::string head = split(qualifier, '.')[0];
    if (python_builtin_modules().count(head)) return true;
  }
  return python_builtin_names().count(name) > 0;
}

// Extends a builtin set from a data file: one name per line, '#' comments.
inline void install_builtin_file(Language lang,
                                 const std::filesystem::path& path) {
  for (auto& line : split_lines(read_file(path))) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    extra_builtin_names(lang).insert(t);
  }
}

}  // namespace forge
