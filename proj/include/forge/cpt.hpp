#pragma once

#include <cstdint>
#include <future>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/graph.hpp"
#include "forge/tokenizer.hpp"
#include "forge/util.hpp"

#include "json.hpp"

namespace forge {

// Window pointer semantics after an overflow. The sliding-window update in
// the underlying procedure admits two readings; both are implemented and
// selectable. overlap_one re-starts the window at the last emitted file so
// consecutive windows share one file; step_one advances the left edge by a
// single file.
enum class PointerMode { OverlapOne, StepOne };

inline std::string to_string(PointerMode m) {
  return m == PointerMode::OverlapOne ? "overlap_one" : "step_one";
}

inline PointerMode pointer_mode_from(std::string_view s) {
  if (s == "overlap_one") return PointerMode::OverlapOne;
  if (s == "step_one") return PointerMode::StepOne;
  throw std::invalid_argument("unknown pointer mode: " + std::string(s));
}

struct CptConfig {
  std::int64_t context_limit = 32768;  // L, in tokens
  int max_paths_per_root = 1000;
  bool emit_tail_window = true;
  PointerMode pointer_mode = PointerMode::OverlapOne;
  double general_mix_ratio = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (context_limit <= 0)
      throw std::invalid_argument("context_limit must be positive");
    if (general_mix_ratio < 0.0 || general_mix_ratio >= 1.0)
      throw std::invalid_argument("general_mix_ratio must be in [0, 1)");
  }
};

struct CptSample {
  std::string id;  // digest of file_sequence
  std::vector<std::string> file_sequence;
  std::string text;
  std::int64_t token_count = 0;
  bool truncated = false;
};

// ---------------------------------------------------------------------------
// DFS path enumeration.
// ---------------------------------------------------------------------------

// Root-to-terminal depth-first paths over an acyclic FileDag, children in
// path-lexicographic order (node order is already path-sorted). Enumeration
// per root stops at max_paths_per_root; afterwards one extra path is added
// for every dependency edge that never became adjacent, so the edge-coverage
// guarantee survives the cap.
inline std::vector<std::vector<int>> enumerate_dfs_paths(const FileDag& dag,
                                                         const CptConfig& cfg) {
  if (!dag.is_acyclic())
    throw std::invalid_argument("enumerate_dfs_paths: input graph is cyclic");

  const size_t n = dag.node_count();
  std::vector<std::vector<int>> paths;
  std::set<std::pair<int, int>> covered;

  auto mark_covered = [&](const std::vector<int>& p) {
    for (size_t i = 0; i + 1 < p.size(); ++i)
      covered.insert({p[i], p[i + 1]});
  };

  std::vector<int> deg = dag.in_degree();
  std::vector<int> stack;
  for (size_t root = 0; root < n; ++root) {
    if (deg[root] != 0) continue;
    int emitted_for_root = 0;
    // explicit DFS over (node, next-child-index)
    std::vector<std::pair<int, size_t>> frames{{static_cast<int>(root), 0}};
    std::vector<int> current{static_cast<int>(root)};
    while (!frames.empty()) {
      if (emitted_for_root >= cfg.max_paths_per_root) break;
      auto& [node, child] = frames.back();
      const auto& succ = dag.adj[static_cast<size_t>(node)];
      if (succ.empty()) {  // terminal: emit
        paths.push_back(current);
        mark_covered(current);
        ++emitted_for_root;
        frames.pop_back();
        current.pop_back();
        continue;
      }
      if (child < succ.size()) {
        int next = succ[child++];
        frames.push_back({next, 0});
        current.push_back(next);
      } else {
        frames.pop_back();
        current.pop_back();
      }
    }
  }

  // Edge-coverage sweep: route root -> u -> v -> terminal for uncovered
  // edges (u, v).
  std::vector<int> pred(n, -1);
  for (size_t u = 0; u < n; ++u)
    for (int v : dag.adj[u])
      if (pred[static_cast<size_t>(v)] == -1 ||
          static_cast<int>(u) < pred[static_cast<size_t>(v)])
        pred[static_cast<size_t>(v)] = static_cast<int>(u);

  auto ascend_to_root = [&](int u) {
    std::vector<int> up{u};
    while (pred[static_cast<size_t>(up.back())] != -1)
      up.push_back(pred[static_cast<size_t>(up.back())]);
    std::reverse(up.begin(), up.end());
    return up;  // root .. u
  };
  auto descend_to_terminal = [&](int v) {
    std::vector<int> down{v};
    while (!dag.adj[static_cast<size_t>(down.back())].empty())
      down.push_back(dag.adj[static_cast<size_t>(down.back())].front());
    return down;  // v .. terminal
  };

  for (size_t u = 0; u < n; ++u) {
    for (int v : dag.adj[u]) {
      if (covered.count({static_cast<int>(u), v})) continue;
      std::vector<int> path = ascend_to_root(static_cast<int>(u));
      std::vector<int> down = descend_to_terminal(v);
      path.insert(path.end(), down.begin(), down.end());
      paths.push_back(path);
      mark_covered(path);
    }
  }
  return paths;
}

// ---------------------------------------------------------------------------
// Sliding windows.
// ---------------------------------------------------------------------------

struct WindowSpan {
  int lo = 0;  // inclusive indices into the path
  int hi = 0;
  bool truncated = false;
};

inline bool operator==(const WindowSpan& a, const WindowSpan& b) {
  return a.lo == b.lo && a.hi == b.hi && a.truncated == b.truncated;
}

// The pointer walk over one path. Candidate window is [l..r]; on overflow
// the fitting window [l..r-1] is emitted and the pointers restart per the
// configured mode. A single file larger than L is emitted alone, truncated.
// On loop exit the final fitting window is emitted when emit_tail_window is
// set (the literal walk would drop it and lose terminal files entirely).
inline std::vector<WindowSpan> window_spans(
    const std::vector<std::int64_t>& sizes, const CptConfig& cfg) {
  const int n = static_cast<int>(sizes.size());
  const std::int64_t L = cfg.context_limit;
  std::vector<WindowSpan> out;
  int l = 0, r = 0;
  std::int64_t window_sum = 0;  // sum of sizes[l..r-1]
  while (r < n) {
    if (window_sum + sizes[static_cast<size_t>(r)] <= L) {
      window_sum += sizes[static_cast<size_t>(r)];
      ++r;
      continue;
    }
    if (r == l) {  // single oversized file
      out.push_back({l, l, true});
      ++l;
      r = l;
      window_sum = 0;
    } else if (r - 1 == l) {  // fitting window is one file; no overlap possible
      out.push_back({l, l, false});
      l = r;
      r = l;
      window_sum = 0;
    } else if (cfg.pointer_mode == PointerMode::OverlapOne) {
      out.push_back({l, r - 1, false});
      l = r - 1;
      r = l;
      window_sum = 0;
    } else {  // StepOne
      out.push_back({l, r - 1, false});
      window_sum -= sizes[static_cast<size_t>(l)];
      ++l;
    }
  }
  if (cfg.emit_tail_window && l < n) out.push_back({l, n - 1, false});
  return out;
}

// A path element ready for windowing: rendered text plus its token size.
struct PathElement {
  std::vector<std::string> files;  // flattened file paths of this node
  std::string text;                // header-commented file blocks
  std::int64_t tokens = 0;
};

inline std::string cpt_sample_id(const std::vector<std::string>& sequence) {
  Fnv1a64 h;
  h.field("cpt-sample");
  for (const auto& f : sequence) h.field(f);
  return h.hex();
}

// Expands window spans over a concrete path into samples.
inline std::vector<CptSample> generate_windows(
    const std::vector<PathElement>& path, const CptConfig& cfg,
    const TokenCounter& tc = default_token_counter()) {
  if (path.empty())
    throw std::invalid_argument("generate_windows: empty path");
  cfg.validate();
  std::vector<std::int64_t> sizes;
  sizes.reserve(path.size());
  for (const auto& el : path) sizes.push_back(el.tokens);

  std::vector<CptSample> out;
  for (const WindowSpan& w : window_spans(sizes, cfg)) {
    CptSample s;
    s.truncated = w.truncated;
    for (int i = w.lo; i <= w.hi; ++i) {
      const PathElement& el = path[static_cast<size_t>(i)];
      s.file_sequence.insert(s.file_sequence.end(), el.files.begin(),
                             el.files.end());
      s.text += el.text;
      s.token_count += el.tokens;
    }
    if (w.truncated) {
      s.text = s.text.substr(0, tc.prefix_bytes(s.text, cfg.context_limit));
      s.token_count = tc.count(s.text);
    }
    s.id = cpt_sample_id(s.file_sequence);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus assembly.
// ---------------------------------------------------------------------------

inline std::string file_header_comment(Language lang, const std::string& path) {
  return lang == Language::Cpp ? "// FILE: " + path + "\n"
                               : "# FILE: " + path + "\n";
}

// Renders one DAG node into its CPT block: every member file prefixed with a
// one-line path comment, newline-terminated.
inline PathElement render_node(const CodeGraph& graph, const FileDagNode& node,
                               const TokenCounter& tc) {
  PathElement el;
  el.files = node.paths;
  for (size_t i = 0; i < node.paths.size(); ++i) {
    const Entity& f = graph.at(node.entity_ids[i]);
    el.text += file_header_comment(graph.language, node.paths[i]);
    el.text += f.body_text;
    if (!f.body_text.empty() && f.body_text.back() != '\n') el.text += '\n';
  }
  el.tokens = tc.count(el.text);
  return el;
}

// file subgraph -> condensation -> DFS paths -> windows -> dedup -> shuffle.
// Windowing runs concurrently across path chunks; dedup and the final order
// are a serialized merge over the deterministic path order, so the output
// does not depend on scheduling.
inline std::vector<CptSample> build_cpt_corpus(
    const CodeGraph& graph, const CptConfig& cfg,
    const TokenCounter& tc = default_token_counter()) {
  cfg.validate();
  FileDag dag = condense_file_dag(file_dependency_subgraph(graph));
  if (dag.node_count() == 0) return {};

  std::vector<PathElement> rendered;
  rendered.reserve(dag.node_count());
  for (const auto& node : dag.nodes)
    rendered.push_back(render_node(graph, node, tc));

  std::vector<std::vector<int>> paths = enumerate_dfs_paths(dag, cfg);
  const size_t chunk = std::max<size_t>(1, paths.size() / 8);
  std::vector<std::future<std::vector<CptSample>>> futures;
  for (size_t begin = 0; begin < paths.size(); begin += chunk) {
    const size_t end = std::min(begin + chunk, paths.size());
    futures.push_back(std::async(std::launch::async, [&, begin, end] {
      std::vector<CptSample> local;
      for (size_t p = begin; p < end; ++p) {
        std::vector<PathElement> elems;
        elems.reserve(paths[p].size());
        for (int idx : paths[p])
          elems.push_back(rendered[static_cast<size_t>(idx)]);
        for (auto& sample : generate_windows(elems, cfg, tc))
          local.push_back(std::move(sample));
      }
      return local;
    }));
  }

  std::vector<CptSample> corpus;
  std::set<std::string> seen;
  for (auto& f : futures)
    for (auto& sample : f.get())
      if (seen.insert(sample.id).second) corpus.push_back(std::move(sample));
  SplitMix64 rng(cfg.seed);
  rng.shuffle(corpus);
  return corpus;
}

// ---------------------------------------------------------------------------
// Record stream mixing (shared by the CPT and SFT corpora).
// ---------------------------------------------------------------------------

// Interleaves general-domain records so they make up `ratio` of the output:
// G = round(D * ratio / (1 - ratio)) drawn without replacement while
// available. General records that are JSON objects get "general": true.
// Output order is a deterministic shuffle under `seed`.
inline std::vector<std::string> mix_records(std::vector<std::string> domain,
                                            std::vector<std::string> general,
                                            double ratio, std::uint64_t seed) {
  if (ratio < 0.0 || ratio >= 1.0)
    throw std::invalid_argument("mix ratio must be in [0, 1)");
  SplitMix64 rng(seed);
  rng.shuffle(general);
  const double want =
      static_cast<double>(domain.size()) * ratio / (1.0 - ratio);
  size_t take = static_cast<size_t>(want + 0.5);
  if (take > general.size()) take = general.size();

  std::vector<std::string> out = std::move(domain);
  for (size_t i = 0; i < take; ++i) {
    try {
      nlohmann::json j = nlohmann::json::parse(general[i]);
      if (j.is_object()) {
        j["general"] = true;
        out.push_back(j.dump());
        continue;
      }
    } catch (const nlohmann::json::exception&) {
      // non-JSON general records pass through untouched
    }
    out.push_back(general[i]);
  }
  rng.shuffle(out);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: line-delimited with a versioned header.
// ---------------------------------------------------------------------------

inline constexpr int kCptFormatVersion = 1;

inline std::string serialize_cpt_corpus(const std::vector<CptSample>& corpus,
                                        const CptConfig& cfg) {
  using nlohmann::json;
  std::string out;
  out += json{{"format", "cpt"},
              {"version", kCptFormatVersion},
              {"context_limit", cfg.context_limit},
              {"pointer_mode", to_string(cfg.pointer_mode)},
              {"samples", corpus.size()}}
             .dump();
  out += '\n';
  for (const auto& s : corpus) {
    out += json{{"id", s.id},
                {"file_sequence", s.file_sequence},
                {"text", s.text},
                {"token_count", s.token_count},
                {"truncated", s.truncated}}
               .dump();
    out += '\n';
  }
  return out;
}

inline std::vector<CptSample> deserialize_cpt_corpus(const std::string& text) {
  using nlohmann::json;
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw std::runtime_error("empty cpt corpus file");
  json header = json::parse(lines[0]);
  if (header.value("format", "") != "cpt")
    throw std::runtime_error("not a cpt corpus file");
  if (header.value("version", 0) != kCptFormatVersion)
    throw std::runtime_error("unsupported cpt corpus version");
  std::vector<CptSample> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i]);
    CptSample s;
    s.id = j.at("id");
    s.file_sequence = j.at("file_sequence").get<std::vector<std::string>>();
    s.text = j.at("text");
    s.token_count = j.at("token_count");
    s.truncated = j.at("truncated");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace forge
