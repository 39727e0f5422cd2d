#include "forge/pipeline.hpp"

#include <gtest/gtest.h>

#include "testing_support.hpp"

namespace forge {
namespace {

// Trimmed config keeping the end-to-end run quick: fewer paraphrases and
// difficulties, short sandbox timeout.
PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.frontend.language = Language::Cpp;
  cfg.gateway.mode = GatewayMode::Stub;
  cfg.relation.n1 = 1;
  cfg.relation.n2 = 1;
  cfg.relation.per_kind_cap = 4;
  cfg.relation.seed = 3;
  cfg.composition.formats = {TaskFormat::Programming,
                             TaskFormat::QuestionAnswer};
  cfg.composition.difficulty_min = 1;
  cfg.composition.difficulty_max = 1;
  cfg.sandbox.limits.wall_time_s = 30;
  cfg.seed = 9;
  return cfg;
}

std::vector<std::string> corpus_files() {
  return {"graph.jsonl", "cpt.jsonl", "sft.jsonl", "verdicts.jsonl",
          "report.json"};
}

TEST(RunPipeline, FixtureRepoProducesAllThreeSftKinds) {
  testing::TempDir out("pipeline_fixture");
  RunReport report =
      run_pipeline(testing::cpp_fixture_repo(), small_config(), out.path());

  EXPECT_GE(report.sample_totals.at("sft_relation"), 1);
  EXPECT_GE(report.sample_totals.at("sft_composition"), 1);
  EXPECT_GE(report.sample_totals.at("sft_utilization"), 1);
  EXPECT_GE(report.sample_totals.at("cpt"), 1);

  for (const auto& f : corpus_files())
    EXPECT_TRUE(std::filesystem::exists(out.path() / f)) << f;

  // all filters logged: at least rule, consistency, decompose, repair,
  // execution and trace verdicts are present
  std::string verdicts = read_file(out.path() / "verdicts.jsonl");
  for (const char* stage :
       {"rule", "consistency", "decompose", "repair", "execution", "trace"})
    EXPECT_TRUE(contains(verdicts, std::string("\"stage\":\"") + stage + "\""))
        << stage;
}

TEST(RunPipeline, StageCountsAreConserved) {
  testing::TempDir out("pipeline_counts");
  RunReport report =
      run_pipeline(testing::cpp_fixture_repo(), small_config(), out.path());
  for (const auto& [name, counts] : report.stages) {
    EXPECT_TRUE(counts.conserved())
        << name << ": " << counts.generated << " != " << counts.accepted
        << "+" << counts.rejected << "+" << counts.skipped;
  }
}

TEST(RunPipeline, EmptyRepoYieldsZeroSamplesZeroErrors) {
  testing::TempDir repo("pipeline_empty_repo");
  testing::TempDir out("pipeline_empty_out");
  RunReport report = run_pipeline(repo.path(), small_config(), out.path());
  EXPECT_EQ(report.sample_totals.at("sft"), 0);
  EXPECT_EQ(report.sample_totals.at("cpt"), 0);
  for (const auto& [name, counts] : report.stages)
    EXPECT_EQ(counts.rejected, 0) << name;
  std::string sft = read_file(out.path() / "sft.jsonl");
  EXPECT_TRUE(validate_corpus(sft).empty());
}

TEST(RunPipeline, IdenticalSeedsGiveByteIdenticalOutputs) {
  testing::TempDir out1("pipeline_det1");
  testing::TempDir out2("pipeline_det2");
  PipelineConfig cfg = small_config();
  run_pipeline(testing::cpp_fixture_repo(), cfg, out1.path());
  run_pipeline(testing::cpp_fixture_repo(), cfg, out2.path());
  for (const auto& f : corpus_files()) {
    EXPECT_EQ(read_file(out1.path() / f), read_file(out2.path() / f)) << f;
  }
}

TEST(RunPipeline, OutputCorpusValidates) {
  testing::TempDir out("pipeline_validate");
  run_pipeline(testing::cpp_fixture_repo(), small_config(), out.path());
  CodeGraph graph = load_graph(out.path() / "graph.jsonl");
  auto violations =
      validate_corpus(read_file(out.path() / "sft.jsonl"), &graph);
  for (const auto& v : violations)
    ADD_FAILURE() << "line " << v.line << ": " << v.message;
}

TEST(RunPipeline, RecordedTranscriptReplaysIdentically) {
  testing::TempDir out1("pipeline_rec");
  testing::TempDir out2("pipeline_replay");
  PipelineConfig cfg = small_config();
  cfg.gateway.record_transcript_to =
      (out1.path() / "transcript.jsonl").string();
  run_pipeline(testing::cpp_fixture_repo(), cfg, out1.path());

  PipelineConfig replay_cfg = small_config();
  replay_cfg.gateway.mode = GatewayMode::Replay;
  replay_cfg.gateway.transcript_path =
      (out1.path() / "transcript.jsonl").string();
  run_pipeline(testing::cpp_fixture_repo(), replay_cfg, out2.path());

  for (const auto& f : {"sft.jsonl", "cpt.jsonl", "verdicts.jsonl"})
    EXPECT_EQ(read_file(out1.path() / f), read_file(out2.path() / f)) << f;
}

TEST(RunPipeline, PythonFixtureProducesRecords)
{
  testing::TempDir out("pipeline_py");
  PipelineConfig cfg = small_config();
  cfg.frontend.language = Language::Python;
  RunReport report =
      run_pipeline(testing::py_fixture_repo(), cfg, out.path());
  EXPECT_GE(report.sample_totals.at("sft_relation"), 1);
  EXPECT_GE(report.sample_totals.at("sft_utilization"), 1);
  EXPECT_GE(report.sample_totals.at("cpt"), 1);
}

TEST(PipelineConfigParsing, RoundTripAndValidation) {
  nlohmann::json j{
      {"version", 1},
      {"language", "python"},
      {"cpt", {{"context_limit", 1024}, {"pointer_mode", "step_one"}}},
      {"gateway", {{"mode", "stub"}, {"max_attempts", 2}}},
      {"relation", {{"n1", 2}, {"n2", 1}}},
      {"composition", {{"formats", {"qa", "prog"}}, {"difficulty_max", 2}}},
      {"mix", {{"sft_ratio", 0.25}}}};
  PipelineConfig cfg = parse_pipeline_config(j);
  EXPECT_EQ(cfg.frontend.language, Language::Python);
  EXPECT_EQ(cfg.cpt.context_limit, 1024);
  EXPECT_EQ(cfg.cpt.pointer_mode, PointerMode::StepOne);
  EXPECT_EQ(cfg.gateway.max_attempts, 2);
  EXPECT_EQ(cfg.composition.formats.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.mix.sft_ratio, 0.25);

  nlohmann::json bad = j;
  bad["mix"]["sft_ratio"] = 1.5;
  EXPECT_THROW(parse_pipeline_config(bad), std::invalid_argument);
  nlohmann::json bad2 = j;
  bad2["gateway"]["mode"] = "http";  // endpoint missing
  EXPECT_THROW(parse_pipeline_config(bad2), std::invalid_argument);
}

TEST(PipelineConfigParsing, EnvOverridesGatewayEndpointOnly) {
  setenv("FORGE_GATEWAY_ENDPOINT", "http://localhost:9999", 1);
  setenv("FORGE_GATEWAY_API_KEY", "sekrit", 1);
  nlohmann::json j{{"version", 1},
                   {"gateway", {{"mode", "http"}, {"endpoint", "http://x"}}}};
  PipelineConfig cfg = parse_pipeline_config(j);
  EXPECT_EQ(cfg.gateway.endpoint, "http://localhost:9999");
  EXPECT_EQ(cfg.gateway.api_key, "sekrit");
  unsetenv("FORGE_GATEWAY_ENDPOINT");
  unsetenv("FORGE_GATEWAY_API_KEY");
}

TEST(RecordOps, FilterStagesRunOverCorpusRecords) {
  testing::TempDir out("record_ops");
  PipelineConfig cfg = small_config();
  run_pipeline(testing::cpp_fixture_repo(), cfg, out.path());
  CodeGraph graph = load_graph(out.path() / "graph.jsonl");
  GatewayHandle gateway = make_gateway(cfg.gateway);
  Sandbox sandbox(cfg.sandbox);

  int composition_checked = 0, utilization_checked = 0;
  for (const auto& line :
       detail::record_lines(read_file(out.path() / "sft.jsonl"))) {
    SftRecord rec = SftRecord::from_json(nlohmann::json::parse(line));
    if (rec.kind == "composition") {
      ++composition_checked;
      FilterVerdict rule =
          filter_record(rec, graph, gateway.get(), sandbox, "rule");
      EXPECT_TRUE(rule.pass) << rule.reason;
      FilterVerdict consistency =
          filter_record(rec, graph, gateway.get(), sandbox, "consistency");
      EXPECT_TRUE(consistency.pass) << consistency.reason;
    }
    if (rec.kind == "utilization" && utilization_checked == 0) {
      ++utilization_checked;
      FilterVerdict exec =
          filter_record(rec, graph, gateway.get(), sandbox, "execution");
      EXPECT_TRUE(exec.pass) << exec.reason;
    }
  }
  EXPECT_GT(composition_checked, 0);
  EXPECT_GT(utilization_checked, 0);
  EXPECT_THROW(filter_record(SftRecord{}, graph, gateway.get(), sandbox,
                             "bogus-stage"),
               std::invalid_argument);
}

TEST(MixedSftCorpus, GeneralRecordsInterleaveAtRatio) {
  testing::TempDir out("pipeline_mix");
  testing::TempDir general_dir("pipeline_general");
  std::string general;
  for (int i = 0; i < 200; ++i)
    general += "{\"text\":\"general sample " + std::to_string(i) + "\"}\n";
  write_file(general_dir.path() / "general.jsonl", general);

  PipelineConfig cfg = small_config();
  cfg.mix.general_sft_path = (general_dir.path() / "general.jsonl").string();
  cfg.mix.sft_ratio = 0.5;
  cfg.mix.seed = 21;
  RunReport report =
      run_pipeline(testing::cpp_fixture_repo(), cfg, out.path());

  std::int64_t domain = report.sample_totals.at("sft");
  std::int64_t mixed = report.sample_totals.at("sft_mixed");
  EXPECT_EQ(mixed, domain * 2);
  std::string text = read_file(out.path() / "sft_mixed.jsonl");
  auto graph = load_graph(out.path() / "graph.jsonl");
  EXPECT_TRUE(validate_corpus(text, &graph).empty());
}

}  // namespace
}  // namespace forge
