#include "forge/cpt.hpp"

#include <gtest/gtest.h>

#include "forge/frontend.hpp"
#include "testing_support.hpp"
#include "window_oracle.hpp"

namespace forge {
namespace {

using testing::oracle_windows;

CptConfig config(std::int64_t L, PointerMode mode = PointerMode::OverlapOne,
                 bool tail = true) {
  CptConfig cfg;
  cfg.context_limit = L;
  cfg.pointer_mode = mode;
  cfg.emit_tail_window = tail;
  return cfg;
}

std::vector<PathElement> path_of(const std::vector<std::int64_t>& sizes) {
  std::vector<PathElement> path;
  for (size_t i = 0; i < sizes.size(); ++i) {
    PathElement el;
    el.files = {std::string(1, static_cast<char>('A' + i)) + ".h"};
    el.text = std::string(static_cast<size_t>(sizes[i]) * 4, 'x');
    el.tokens = sizes[i];
    path.push_back(std::move(el));
  }
  return path;
}

std::vector<std::vector<std::string>> sequences(
    const std::vector<CptSample>& samples) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : samples) out.push_back(s.file_sequence);
  return out;
}

// ---------------------------------------------------------------------------
// enumerate_dfs_paths
// ---------------------------------------------------------------------------

FileDag dag_of(int n, const std::vector<std::pair<int, int>>& edges) {
  FileDag dag;
  for (int i = 0; i < n; ++i) {
    std::string p = std::string(1, static_cast<char>('a' + i)) + ".h";
    dag.nodes.push_back({{p}, {p}});
  }
  dag.adj.assign(static_cast<size_t>(n), {});
  for (auto [u, v] : edges) dag.adj[static_cast<size_t>(u)].push_back(v);
  for (auto& a : dag.adj) std::sort(a.begin(), a.end());
  return dag;
}

TEST(EnumerateDfsPaths, FanOutYieldsOnePathPerBranch) {
  FileDag dag = dag_of(3, {{0, 1}, {0, 2}});
  auto paths = enumerate_dfs_paths(dag, config(100));
  EXPECT_EQ(paths, (std::vector<std::vector<int>>{{0, 1}, {0, 2}}));
}

TEST(EnumerateDfsPaths, EmptyDagYieldsNoPaths) {
  FileDag dag;
  EXPECT_TRUE(enumerate_dfs_paths(dag, config(100)).empty());
}

TEST(EnumerateDfsPaths, DiamondYieldsBothArms) {
  FileDag dag = dag_of(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  auto paths = enumerate_dfs_paths(dag, config(100));
  EXPECT_EQ(paths, (std::vector<std::vector<int>>{{0, 1, 3}, {0, 2, 3}}));
}

TEST(EnumerateDfsPaths, IsolatedNodeYieldsLengthOnePath) {
  FileDag dag = dag_of(1, {});
  auto paths = enumerate_dfs_paths(dag, config(100));
  EXPECT_EQ(paths, (std::vector<std::vector<int>>{{0}}));
}

TEST(EnumerateDfsPaths, CyclicInputThrows) {
  FileDag dag = dag_of(2, {{0, 1}, {1, 0}});
  EXPECT_THROW(enumerate_dfs_paths(dag, config(100)), std::invalid_argument);
}

TEST(EnumerateDfsPaths, CapHoldsButEveryEdgeStaysCovered) {
  // 2^4 = 16 root-to-leaf paths through four diamond stages; cap at 2.
  std::vector<std::pair<int, int>> edges;
  for (int stage = 0; stage < 4; ++stage) {
    int base = stage * 3;
    edges.insert(edges.end(), {{base, base + 1},
                               {base, base + 2},
                               {base + 1, base + 3},
                               {base + 2, base + 3}});
  }
  FileDag dag = dag_of(13, edges);
  CptConfig cfg = config(100);
  cfg.max_paths_per_root = 2;
  auto paths = enumerate_dfs_paths(dag, cfg);

  std::set<std::pair<int, int>> adjacent;
  for (const auto& p : paths)
    for (size_t i = 0; i + 1 < p.size(); ++i)
      adjacent.insert({p[i], p[i + 1]});
  for (auto [u, v] : edges)
    EXPECT_TRUE(adjacent.count({u, v})) << u << "->" << v;
  // far fewer than the 16 full paths
  EXPECT_LE(paths.size(), 2u + edges.size());
}

// ---------------------------------------------------------------------------
// generate_windows
// ---------------------------------------------------------------------------

TEST(GenerateWindows, OverlapOneReproducesPointerWalk) {
  auto samples = generate_windows(path_of({10, 10, 10}), config(25));
  EXPECT_EQ(sequences(samples),
            (std::vector<std::vector<std::string>>{{"A.h", "B.h"},
                                                   {"B.h", "C.h"}}));
  for (const auto& s : samples) {
    EXPECT_LE(s.token_count, 25);
    EXPECT_FALSE(s.truncated);
  }
}

TEST(GenerateWindows, OversizedSingleFileIsEmittedTruncated) {
  auto samples = generate_windows(path_of({40}), config(25));
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_TRUE(samples[0].truncated);
  EXPECT_EQ(samples[0].file_sequence, (std::vector<std::string>{"A.h"}));
  EXPECT_EQ(samples[0].token_count, 25);
  EXPECT_EQ(samples[0].text.size(), 100u);  // 25 tokens * 4 bytes
}

TEST(GenerateWindows, WholePathFitsInOneWindow) {
  auto samples = generate_windows(path_of({10, 10, 10}), config(1000));
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].file_sequence,
            (std::vector<std::string>{"A.h", "B.h", "C.h"}));
  EXPECT_EQ(samples[0].token_count, 30);
}

TEST(GenerateWindows, TailWindowOffDropsFinalPartial) {
  auto samples =
      generate_windows(path_of({10, 10, 10}),
                       config(25, PointerMode::OverlapOne, /*tail=*/false));
  EXPECT_EQ(sequences(samples),
            (std::vector<std::vector<std::string>>{{"A.h", "B.h"}}));
}

TEST(GenerateWindows, StepOneAdvancesLeftPointerByOne) {
  // {5,5,5,20} with L=18: step mode re-emits overlapping windows.
  auto samples = generate_windows(path_of({5, 5, 5, 20}),
                                  config(18, PointerMode::StepOne));
  EXPECT_EQ(sequences(samples),
            (std::vector<std::vector<std::string>>{{"A.h", "B.h", "C.h"},
                                                   {"B.h", "C.h"},
                                                   {"C.h"},
                                                   {"D.h"}}));
  EXPECT_TRUE(samples.back().truncated);
}

TEST(GenerateWindows, EmptyPathThrows) {
  EXPECT_THROW(generate_windows({}, config(10)), std::invalid_argument);
}

TEST(WindowOracle, RandomSizesMatchUnderBothModes) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 600; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(6));
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i)
      sizes.push_back(1 + static_cast<std::int64_t>(rng.bounded(40)));
    const std::int64_t L = 5 + static_cast<std::int64_t>(rng.bounded(60));
    const bool tail = rng.bounded(2) == 0;
    for (PointerMode mode : {PointerMode::OverlapOne, PointerMode::StepOne}) {
      CptConfig cfg = config(L, mode, tail);
      auto got = window_spans(sizes, cfg);
      auto want = oracle_windows(sizes, L, mode, tail);
      ASSERT_EQ(got.size(), want.size())
          << "trial " << trial << " mode " << to_string(mode) << " L=" << L;
      for (size_t i = 0; i < got.size(); ++i)
        ASSERT_TRUE(got[i] == want[i]) << "trial " << trial << " window " << i;
    }
  }
}

TEST(WindowBudget, WindowsNeverExceedLimitUnlessTruncatedSingle) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(6));
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i)
      sizes.push_back(1 + static_cast<std::int64_t>(rng.bounded(50)));
    const std::int64_t L = 5 + static_cast<std::int64_t>(rng.bounded(60));
    for (PointerMode mode : {PointerMode::OverlapOne, PointerMode::StepOne}) {
      for (const auto& s : generate_windows(path_of(sizes), config(L, mode))) {
        ASSERT_LE(s.token_count, L)
            << "trial " << trial << " truncated=" << s.truncated;
        if (s.truncated) ASSERT_EQ(s.file_sequence.size(), 1u);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// build_cpt_corpus
// ---------------------------------------------------------------------------

CodeGraph chain_graph(const std::vector<std::string>& files,
                      const std::vector<std::pair<int, int>>& edges,
                      size_t body_bytes = 40) {
  CodeGraph g;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    Entity e;
    e.kind = EntityKind::File;
    e.name = f;
    e.file_path = f;
    e.span = {1, 1};
    e.body_text = std::string(body_bytes, 'x');
    ids.push_back(g.add_entity(std::move(e)).id);
  }
  for (auto [u, v] : edges)
    g.add_relation({ids[static_cast<size_t>(u)], ids[static_cast<size_t>(v)],
                    RelationKind::Include,
                    {files[static_cast<size_t>(u)], 1}});
  return g;
}

TEST(BuildCptCorpus, ChainFitsInOneSampleInDependencyOrder) {
  CodeGraph g = chain_graph({"a.h", "b.h", "c.h"}, {{0, 1}, {1, 2}});
  auto corpus = build_cpt_corpus(g, config(100000));
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(corpus[0].file_sequence,
            (std::vector<std::string>{"a.h", "b.h", "c.h"}));
  EXPECT_TRUE(contains(corpus[0].text, "// FILE: a.h"));
  EXPECT_TRUE(contains(corpus[0].text, "// FILE: c.h"));
}

TEST(BuildCptCorpus, DisconnectedFilesYieldSingleFileSamples) {
  CodeGraph g = chain_graph({"a.h", "b.h"}, {});
  auto corpus = build_cpt_corpus(g, config(100000));
  ASSERT_EQ(corpus.size(), 2u);
  std::set<std::string> firsts;
  for (const auto& s : corpus) {
    ASSERT_EQ(s.file_sequence.size(), 1u);
    firsts.insert(s.file_sequence[0]);
  }
  EXPECT_EQ(firsts, (std::set<std::string>{"a.h", "b.h"}));
}

TEST(BuildCptCorpus, EmptyGraphYieldsEmptyCorpus) {
  CodeGraph g;
  EXPECT_TRUE(build_cpt_corpus(g, config(100)).empty());
}

TEST(BuildCptCorpus, DuplicateWindowsAcrossPathsAreDropped) {
  CodeGraph g = chain_graph({"a.h", "b.h", "c.h"}, {{0, 1}, {0, 2}});
  auto corpus = build_cpt_corpus(g, config(15));  // fits one node per window
  std::set<std::string> ids;
  for (const auto& s : corpus) EXPECT_TRUE(ids.insert(s.id).second);
}

TEST(BuildCptCorpus, MergedCycleLandsInOneSample) {
  CodeGraph g = chain_graph({"a.h", "b.h"}, {{0, 1}, {1, 0}});
  auto corpus = build_cpt_corpus(g, config(100000));
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(corpus[0].file_sequence, (std::vector<std::string>{"a.h", "b.h"}));
}

TEST(BuildCptCorpus, DeterministicUnderSeed) {
  CodeGraph g = chain_graph({"a.h", "b.h", "c.h", "d.h"},
                            {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CptConfig cfg = config(30);
  cfg.seed = 5;
  auto c1 = build_cpt_corpus(g, cfg);
  auto c2 = build_cpt_corpus(g, cfg);
  EXPECT_EQ(serialize_cpt_corpus(c1, cfg), serialize_cpt_corpus(c2, cfg));
}

// every dependency edge whose endpoints fit together must be adjacent in
// at least one emitted sample
void check_adjacency(const CodeGraph& g, const CptConfig& cfg) {
  FileDag dag = condense_file_dag(file_dependency_subgraph(g));
  std::vector<PathElement> rendered;
  for (const auto& node : dag.nodes)
    rendered.push_back(render_node(g, node, default_token_counter()));
  auto corpus = build_cpt_corpus(g, cfg);
  for (size_t u = 0; u < dag.node_count(); ++u) {
    for (int v : dag.adj[u]) {
      if (rendered[u].tokens + rendered[static_cast<size_t>(v)].tokens >
          cfg.context_limit)
        continue;
      std::vector<std::string> needle = rendered[u].files;
      needle.push_back(rendered[static_cast<size_t>(v)].files.front());
      bool found = false;
      for (const auto& s : corpus) {
        for (size_t i = 0;
             !found && i + needle.size() <= s.file_sequence.size(); ++i) {
          bool match = true;
          for (size_t k = 0; k < needle.size(); ++k)
            if (s.file_sequence[i + k] != needle[k]) {
              match = false;
              break;
            }
          found = match;
        }
        if (found) break;
      }
      ASSERT_TRUE(found) << "edge " << rendered[u].files[0] << " -> "
                         << rendered[static_cast<size_t>(v)].files[0]
                         << " not adjacent in any sample";
    }
  }
}

TEST(BuildCptCorpus, DiamondAdjacencyGuaranteeWithTightBudget) {
  CodeGraph g = chain_graph({"a.h", "b.h", "c.h", "d.h"},
                            {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  // each node block is ~13 tokens; L = 30 fits two nodes, not three
  check_adjacency(g, config(30));
}

TEST(BuildCptCorpus, RandomDagsKeepAdjacencyGuarantee) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.bounded(5));
    std::vector<std::string> files;
    for (int i = 0; i < n; ++i)
      files.push_back(std::string(1, static_cast<char>('a' + i)) + ".h");
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.bounded(3) == 0) edges.push_back({u, v});
    CodeGraph g = chain_graph(files, edges, 20 + rng.bounded(80));
    const std::int64_t L = 20 + static_cast<std::int64_t>(rng.bounded(60));
    for (PointerMode mode : {PointerMode::OverlapOne, PointerMode::StepOne})
      check_adjacency(g, config(L, mode));
  }
}

// ---------------------------------------------------------------------------
// mix_records
// ---------------------------------------------------------------------------

std::vector<std::string> records(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back("{\"id\":\"" + prefix + std::to_string(i) + "\"}");
  return out;
}

TEST(MixRecords, RatioZeroKeepsDomainOnlyShuffled) {
  auto out = mix_records(records("d", 10), records("g", 5), 0.0, 3);
  EXPECT_EQ(out.size(), 10u);
  for (const auto& line : out) EXPECT_TRUE(contains(line, "\"d"));
}

TEST(MixRecords, HalfRatioDoublesTheStream) {
  auto out = mix_records(records("d", 10), records("g", 30), 0.5, 3);
  EXPECT_EQ(out.size(), 20u);
  int general = 0;
  for (const auto& line : out)
    if (contains(line, "\"general\":true")) ++general;
  EXPECT_EQ(general, 10);
}

TEST(MixRecords, DeterministicUnderSeed) {
  auto a = mix_records(records("d", 8), records("g", 8), 0.25, 11);
  auto b = mix_records(records("d", 8), records("g", 8), 0.25, 11);
  EXPECT_EQ(a, b);
}

TEST(MixRecords, RatioOutOfRangeThrows) {
  EXPECT_THROW(mix_records({}, {}, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(mix_records({}, {}, -0.1, 0), std::invalid_argument);
}

TEST(MixRecords, GeneralSampledWithoutReplacementWhileAvailable) {
  auto out = mix_records(records("d", 4), records("g", 2), 0.5, 1);
  // wants 4 general but only 2 exist
  EXPECT_EQ(out.size(), 6u);
  std::set<std::string> uniq(out.begin(), out.end());
  EXPECT_EQ(uniq.size(), 6u);
}

TEST(CptCorpusSerialization, RoundTrips) {
  CodeGraph g = chain_graph({"a.h", "b.h"}, {{0, 1}});
  CptConfig cfg = config(100000);
  auto corpus = build_cpt_corpus(g, cfg);
  auto back = deserialize_cpt_corpus(serialize_cpt_corpus(corpus, cfg));
  ASSERT_EQ(back.size(), corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].text, corpus[i].text);
    EXPECT_EQ(back[i].file_sequence, corpus[i].file_sequence);
  }
}

TEST(CptFixture, CppRepoCorpusCoversEveryFile) {
  FrontendConfig fcfg;
  fcfg.language = Language::Cpp;
  CodeGraph g = scan_repository(testing::cpp_fixture_repo(), fcfg);
  auto corpus = build_cpt_corpus(g, config(32768));
  std::set<std::string> seen;
  for (const auto& s : corpus)
    for (const auto& f : s.file_sequence) seen.insert(f);
  EXPECT_EQ(seen.size(), 9u);
  check_adjacency(g, config(32768));
}

}  // namespace
}  // namespace forge
