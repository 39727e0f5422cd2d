#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// ---------------------------------------------------------------------------
// Digests.
//
// All stable identifiers and content hashes in this project use FNV-1a 64.
// The algorithm is fixed so that ids and corpus digests are bit-exact across
// platforms and runs: offset basis 14695981039346656037, prime 1099511628211,
// rendered as 16 lowercase hex digits.
// ---------------------------------------------------------------------------

class Fnv1a64 {
 public:
  Fnv1a64& update(std::string_view data) {
    for (unsigned char c : data) {
      state_ ^= static_cast<std::uint64_t>(c);
      state_ *= 1099511628211ULL;
    }
    return *this;
  }

  // Feeds a separator byte that cannot appear in UTF-8 text, so that
  // update("a").update("b") != update("ab") when fields are delimited.
  Fnv1a64& field(std::string_view data) {
    update(data);
    const char sep = '\x1f';
    return update(std::string_view(&sep, 1));
  }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

inline std::string fnv1a_hex(std::string_view data) {
  return Fnv1a64().update(data).hex();
}

// ---------------------------------------------------------------------------
// Deterministic RNG.
//
// SplitMix64: the exact sequence is part of the output contract (corpus
// shuffles and negative-name fabrication must reproduce bit-identically).
// ---------------------------------------------------------------------------

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform-enough draw in [0, n); modulo bias is irrelevant here, the
  // contract is determinism, not statistical quality.
  std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// String helpers.
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  if (start < s.size()) out.emplace_back(s.substr(start));
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

inline bool contains(std::string_view s, std::string_view needle) {
  return s.find(needle) != std::string_view::npos;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Counts lines the way `wc -l` does for text ending in a newline, but also
// counts a trailing unterminated line.
inline std::int64_t count_lines(std::string_view s) {
  if (s.empty()) return 0;
  std::int64_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  if (s.back() != '\n') ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Glob matching (shell-style). `*` does not cross '/', `**` does, `?` is one
// non-separator character. Throws std::invalid_argument on malformed input.
// ---------------------------------------------------------------------------

inline std::regex glob_to_regex(std::string_view glob) {
  std::string re;
  re.reserve(glob.size() * 2);
  for (size_t i = 0; i < glob.size(); ++i) {
    char c = glob[i];
    if (c == '*') {
      if (i + 1 < glob.size() && glob[i + 1] == '*') {
        re += ".*";
        ++i;
      } else {
        re += "[^/]*";
      }
    } else if (c == '?') {
      re += "[^/]";
    } else if (c == '[' || c == ']') {
      re += c;  // character classes pass through (and malformed ones throw)
    } else if (std::string("\\^$.|+(){}").find(c) != std::string::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  try {
    return std::regex(re);
  } catch (const std::regex_error&) {
    throw std::invalid_argument("malformed glob pattern: " + std::string(glob));
  }
}

inline bool glob_match(const std::regex& re, std::string_view path) {
  return std::regex_match(path.begin(), path.end(), re);
}

// ---------------------------------------------------------------------------
// Filesystem helpers.
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("short write: " + p.string());
}

// Repository-relative paths always use '/' so ids and digests do not depend
// on the host platform.
inline std::string normalize_path(std::string p) {
  std::replace(p.begin(), p.end(), '\\', '/');
  while (starts_with(p, "./")) p = p.substr(2);
  return p;
}

// Lexically resolves "a/b/../c" -> "a/c" without touching the filesystem.
inline std::string lexical_resolve(const std::string& path) {
  std::vector<std::string> out;
  for (auto& part : split(path, '/')) {
    if (part.empty() || part == ".") continue;
    if (part == "..") {
      if (!out.empty() && out.back() != "..")
        out.pop_back();
      else
        out.push_back("..");
    } else {
      out.push_back(part);
    }
  }
  return join(out, "/");
}

}  // namespace forge
