#include "forge/sft_utilization.hpp"

#include <gtest/gtest.h>

#include "forge/frontend.hpp"
#include "testing_support.hpp"

namespace forge {
namespace {

using testing::ScriptedGateway;

const CodeGraph& fixture_graph() {
  static CodeGraph g = [] {
    FrontendConfig cfg;
    cfg.language = Language::Cpp;
    return scan_repository(testing::cpp_fixture_repo(), cfg);
  }();
  return g;
}

ApiCombination combination_for(const CodeGraph& g, const std::string& name) {
  for (const auto& c : mine_combinations(g, TestMatcherConfig{}).combinations)
    if (g.at(c.source_test).name == name) return c;
  throw std::runtime_error("no combination for " + name);
}

SandboxConfig fast_sandbox(int wall_s = 30) {
  SandboxConfig cfg;
  cfg.limits.wall_time_s = wall_s;
  return cfg;
}

TEST(DecomposeTest, StubSplitsSetupFromAssertions) {
  const CodeGraph& g = fixture_graph();
  StubGateway gw;
  UtilizationConfig cfg;
  DecomposeResult res = decompose_test(
      g, combination_for(g, "test_add_accumulates"), gw, cfg);
  ASSERT_TRUE(res.sample.has_value()) << res.verdict.reason;
  const UtilizationSample& s = *res.sample;
  EXPECT_TRUE(contains(s.functional_code, "make_meters(2.0)"));
  EXPECT_TRUE(contains(s.functional_code, "return"));
  EXPECT_FALSE(contains(s.functional_code, "assert("));
  EXPECT_TRUE(contains(s.assertions, "test_add_accumulates_scenario()"));
  EXPECT_TRUE(detail::has_assertion_construct(Language::Cpp, s.assertions));
  EXPECT_FALSE(s.instruction.empty());
  EXPECT_FALSE(s.context.empty());
}

TEST(DecomposeTest, ScriptedTranscriptSplit) {
  const CodeGraph& g = fixture_graph();
  // fixture transcript: a well-formed decomposition reply
  nlohmann::json reply{
      {"functional_code",
       "bool scenario() {\n  calc::Value v = make_meters(4.0);\n  return "
       "calc::scale_by_two(v).amount() == 8.0;\n}"},
      {"assertions", "assert(scenario());"},
      {"instruction", "// Returns true when scaling doubles the amount."}};
  ScriptedGateway gw({ScriptedGateway::reply(reply.dump())});
  UtilizationConfig cfg;
  DecomposeResult res = decompose_test(
      g, combination_for(g, "test_scale_by_two_doubles"), gw, cfg);
  ASSERT_TRUE(res.sample.has_value());
  EXPECT_EQ(res.sample->assertions, "assert(scenario());");
}

TEST(DecomposeTest, MalformedRepliesSkipAfterRetries) {
  const CodeGraph& g = fixture_graph();
  ScriptedGateway gw({ScriptedGateway::reply("not json"),
                      ScriptedGateway::reply("{\"functional_code\": \"\"}")});
  UtilizationConfig cfg;
  cfg.max_attempts = 2;
  DecomposeResult res = decompose_test(
      g, combination_for(g, "test_magnitude_is_absolute"), gw, cfg);
  EXPECT_FALSE(res.sample.has_value());
  EXPECT_FALSE(res.verdict.pass);
  EXPECT_TRUE(contains(res.verdict.reason, "validation"));
}

TEST(DecomposeTest, MissingAssertionConstructRejected) {
  const CodeGraph& g = fixture_graph();
  nlohmann::json reply{{"functional_code", "bool f() { return true; }"},
                       {"assertions", "f();"},  // no assertion construct
                       {"instruction", "// comment"}};
  ScriptedGateway gw({ScriptedGateway::reply(reply.dump())});
  UtilizationConfig cfg;
  cfg.max_attempts = 1;
  DecomposeResult res = decompose_test(
      g, combination_for(g, "test_magnitude_is_absolute"), gw, cfg);
  EXPECT_FALSE(res.sample.has_value());
}

UtilizationSample stub_sample(const std::string& test_name) {
  const CodeGraph& g = fixture_graph();
  StubGateway gw;
  UtilizationConfig cfg;
  DecomposeResult res =
      decompose_test(g, combination_for(g, test_name), gw, cfg);
  if (!res.sample) throw std::runtime_error("stub decompose failed");
  return *res.sample;
}

TEST(CompileAndRepair, AlreadyCompilingSampleIsUnchanged) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  StubGateway gw;
  UtilizationSample sample = stub_sample("test_add_accumulates");
  RepairResult res = compile_and_repair(g, sample, sb, gw, 3);
  EXPECT_TRUE(res.success);
  EXPECT_TRUE(res.sample.repair_log.empty());
  EXPECT_EQ(res.sample.functional_code, sample.functional_code);
  EXPECT_EQ(gw.call_count(), 0);
}

TEST(CompileAndRepair, SeededFaultFixedByMockInOneIteration) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  UtilizationSample sample = stub_sample("test_add_accumulates");
  // seeded fault: the functional code needs a header the unit does not have
  std::string healthy = sample.functional_code;
  sample.functional_code =
      "bool uses_map() {\n  std::map<std::string, int> m;\n  m[\"k\"] = 1;\n"
      "  return m[\"k\"] == 1;\n}\n";
  sample.assertions = "assert(uses_map());";
  // the mock returns the known fix: same code with the missing include
  nlohmann::json fix{
      {"functional_code", "#include <map>\n" + sample.functional_code},
      {"assertions", sample.assertions}};
  ScriptedGateway gw({ScriptedGateway::reply(fix.dump())});
  RepairResult res = compile_and_repair(g, sample, sb, gw, 3);
  EXPECT_TRUE(res.success) << res.verdict.reason;
  ASSERT_EQ(res.sample.repair_log.size(), 1u);
  EXPECT_EQ(res.sample.repair_log[0].attempt, 1);
  EXPECT_FALSE(res.sample.repair_log[0].compiler_message_digest.empty());
  EXPECT_TRUE(contains(res.sample.repair_log[0].patch_summary, "patch"));
  (void)healthy;
}

TEST(CompileAndRepair, UnfixableSampleRejectedAfterMaxIters) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  UtilizationSample sample = stub_sample("test_add_accumulates");
  // reference to an API that exists nowhere; the mock refuses to change it
  sample.functional_code =
      "bool calls_deleted() { return deleted_api(1) == 1; }\n";
  sample.assertions = "assert(calls_deleted());";
  StubGateway gw;  // no-reference stub echoes the code unchanged
  RepairResult res = compile_and_repair(g, sample, sb, gw, 3);
  EXPECT_FALSE(res.success);
  EXPECT_EQ(res.sample.repair_log.size(), 3u);
  EXPECT_FALSE(res.verdict.pass);
  EXPECT_TRUE(contains(res.verdict.reason, "deleted_api"));  // last diagnostic
}

TEST(ExecutionFilter, CorrectSamplePasses) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  UtilizationSample sample = stub_sample("test_add_accumulates");
  FilterVerdict v = execution_filter(g, sample, sb);
  EXPECT_TRUE(v.pass) << v.reason;
}

TEST(ExecutionFilter, WrongValueFailsWithAssertionReason) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  UtilizationSample sample = stub_sample("test_add_accumulates");
  sample.functional_code =
      "bool wrong() { return calc::add(make_meters(2.0), "
      "make_meters(2.0)).amount() == 5.0; }\n";
  sample.assertions = "assert(wrong());";
  FilterVerdict v = execution_filter(g, sample, sb);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "assertion failure");
}

TEST(ExecutionFilter, InfiniteLoopFailsWithTimeoutReason) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox(2));
  UtilizationSample sample = stub_sample("test_add_accumulates");
  sample.functional_code =
      "bool spins() { volatile int x = 1; while (x) { x = x ? 1 : 0; } "
      "return true; }\n";
  sample.assertions = "assert(spins());";
  FilterVerdict v = execution_filter(g, sample, sb);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "timeout");
}

TEST(ExecutionFilter, AcceptedSamplesAreRerunnable) {
  const CodeGraph& g = fixture_graph();
  Sandbox sb(fast_sandbox());
  UtilizationSample sample = stub_sample("test_record_and_total");
  FilterVerdict v1 = execution_filter(g, sample, sb);
  ASSERT_TRUE(v1.pass) << v1.reason;
  FilterVerdict v2 = execution_filter(g, sample, sb);
  EXPECT_TRUE(v2.pass);  // no hidden state
}

TEST(ContextCompleteness, AllInRepoCallsResolveAgainstBundle) {
  const CodeGraph& g = fixture_graph();
  UtilizationSample sample = stub_sample("test_add_accumulates");
  auto missing = missing_context_symbols(
      g, sample.closure, sample.functional_code + "\n" + sample.assertions);
  EXPECT_TRUE(missing.empty());
}

TEST(ContextCompleteness, DetectsMissingSymbols) {
  const CodeGraph& g = fixture_graph();
  UtilizationSample sample = stub_sample("test_add_accumulates");
  // validate() is a repo symbol but not in this sample's closure
  auto missing = missing_context_symbols(
      g, sample.closure, "bool f() { return validate(make_meters(1.0)); }");
  ASSERT_EQ(missing.size(), 1u);
  EXPECT_EQ(missing[0], "validate");
}

TEST(UtilizationPython, StubDecomposeCompilesAndRuns) {
  FrontendConfig fc;
  fc.language = Language::Python;
  CodeGraph g = scan_repository(testing::py_fixture_repo(), fc);
  StubGateway gw;
  UtilizationConfig cfg;
  ApiCombination comb;
  bool found = false;
  for (const auto& c : mine_combinations(g, TestMatcherConfig{}).combinations)
    if (g.at(c.source_test).name == "test_square_rows") {
      comb = c;
      found = true;
    }
  ASSERT_TRUE(found);
  DecomposeResult res = decompose_test(g, comb, gw, cfg);
  ASSERT_TRUE(res.sample.has_value()) << res.verdict.reason;
  Sandbox sb(fast_sandbox());
  FilterVerdict v = execution_filter(g, *res.sample, sb);
  EXPECT_TRUE(v.pass) << v.reason;
}

}  // namespace
}  // namespace forge
