#include "forge/sft_composition.hpp"

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

const Entity* by_name(const CodeGraph& g, const std::string& name,
                      const std::string& file = "") {
  for (const auto& e : g.entities())
    if (e.name == name && (file.empty() || e.file_path == file)) return &e;
  return nullptr;
}

TEST(TestMatcher, NamePrefixesIdentifyTests) {
  const CodeGraph& g = fixture_graph();
  TestMatcherConfig cfg;
  int tests = 0;
  for (const auto& e : g.entities())
    if (is_test_function(g, e, cfg)) ++tests;
  EXPECT_EQ(tests, 5);  // 3 in test_ops.cpp + 2 in test_registry.cpp

  TestMatcherConfig path_limited;
  path_limited.path_markers = {"tests/test_registry"};
  int limited = 0;
  for (const auto& e : g.entities())
    if (is_test_function(g, e, path_limited)) ++limited;
  EXPECT_EQ(limited, 2);
}

TEST(MineCombinations, OneCombinationPerTestWithResolvedCalls) {
  const CodeGraph& g = fixture_graph();
  MiningResult res = mine_combinations(g, TestMatcherConfig{});
  ASSERT_EQ(res.combinations.size(), 5u);
  EXPECT_TRUE(res.diagnostics.empty());

  const Entity* t = by_name(g, "test_add_accumulates");
  ASSERT_NE(t, nullptr);
  const ApiCombination* comb = nullptr;
  for (const auto& c : res.combinations)
    if (c.source_test == t->id) comb = &c;
  ASSERT_NE(comb, nullptr);
  // apis: make_meters, calc::add, Value::amount, Value::unit, class Value
  EXPECT_EQ(comb->apis.size(), 5u);
  std::set<std::string> names;
  for (const auto& id : comb->apis) names.insert(g.at(id).name);
  EXPECT_TRUE(names.count("calc::add"));
  EXPECT_TRUE(names.count("make_meters"));
  // closure contains every api plus transitive callees
  std::set<std::string> closure(comb->closure.begin(), comb->closure.end());
  for (const auto& id : comb->apis) EXPECT_TRUE(closure.count(id));
}

TEST(MineCombinations, BuiltinOnlyTestsExcluded) {
  testing::TempDir dir("comb_builtin");
  write_file(dir.path() / "t.cpp",
             "#include <cstdio>\nvoid test_noise() { printf(\"x\"); }\n");
  FrontendConfig fc;
  fc.language = Language::Cpp;
  CodeGraph g = scan_repository(dir.path(), fc);
  MiningResult res = mine_combinations(g, TestMatcherConfig{});
  EXPECT_TRUE(res.combinations.empty());
}

TEST(MineCombinations, SharedApiYieldsDistinctCombinations) {
  const CodeGraph& g = fixture_graph();
  MiningResult res = mine_combinations(g, TestMatcherConfig{});
  const Entity* t1 = by_name(g, "test_record_and_total");
  const Entity* t2 = by_name(g, "test_record_rejects_huge_values");
  int found = 0;
  for (const auto& c : res.combinations)
    if (c.source_test == t1->id || c.source_test == t2->id) ++found;
  EXPECT_EQ(found, 2);  // both tests call record/count yet stay separate
}

TEST(MineCombinations, NoTestsYieldsWarningDiagnostic) {
  testing::TempDir dir("comb_none");
  write_file(dir.path() / "m.cpp", "int helper() { return 1; }\n");
  FrontendConfig fc;
  fc.language = Language::Cpp;
  CodeGraph g = scan_repository(dir.path(), fc);
  MiningResult res = mine_combinations(g, TestMatcherConfig{});
  EXPECT_TRUE(res.combinations.empty());
  ASSERT_EQ(res.diagnostics.size(), 1u);
  EXPECT_EQ(res.diagnostics[0].tag, "no-tests");
}

ApiCombination fixture_combination(const std::string& test_name) {
  const CodeGraph& g = fixture_graph();
  MiningResult res = mine_combinations(g, TestMatcherConfig{});
  const Entity* t = by_name(g, test_name);
  for (auto& c : res.combinations)
    if (c.source_test == t->id) return c;
  throw std::runtime_error("no combination for " + test_name);
}

TEST(GenerateTasks, ProgrammingFormatWithDifficultyTwo) {
  const CodeGraph& g = fixture_graph();
  ApiCombination comb = fixture_combination("test_add_accumulates");
  CompositionConfig cfg;
  cfg.formats = {TaskFormat::Programming};
  cfg.difficulty_min = 2;
  cfg.difficulty_max = 2;
  StubGateway gw;
  TaskGenResult res = generate_tasks(g, comb, cfg, gw);
  ASSERT_EQ(res.tasks.size(), 1u);
  const CompositionTask& task = res.tasks[0];
  EXPECT_EQ(task.format, TaskFormat::Programming);
  EXPECT_EQ(task.difficulty, 2);
  ASSERT_EQ(task.grading_criteria.size(), 2u);
  for (const auto& gc : task.grading_criteria) {
    EXPECT_FALSE(gc.point.empty());
    EXPECT_NE(g.find(gc.entity), nullptr);  // knowledge unit resolves
  }
  EXPECT_FALSE(task.context.empty());
}

TEST(GenerateTasks, EmptyFormatListYieldsNothing) {
  const CodeGraph& g = fixture_graph();
  ApiCombination comb = fixture_combination("test_add_accumulates");
  CompositionConfig cfg;
  cfg.formats = {};
  StubGateway gw;
  TaskGenResult res = generate_tasks(g, comb, cfg, gw);
  EXPECT_TRUE(res.tasks.empty());
  EXPECT_EQ(gw.call_count(), 0);
}

TEST(GenerateTasks, MalformedReplySkippedWithParseVerdict) {
  const CodeGraph& g = fixture_graph();
  ApiCombination comb = fixture_combination("test_add_accumulates");
  CompositionConfig cfg;
  cfg.formats = {TaskFormat::Programming};
  cfg.difficulty_min = 1;
  cfg.difficulty_max = 1;
  cfg.max_attempts = 2;
  // missing reference_answer in every reply
  ScriptedGateway gw(
      {ScriptedGateway::reply("{\"statement\": \"q\"}"),
       ScriptedGateway::reply("not even json")});
  TaskGenResult res = generate_tasks(g, comb, cfg, gw);
  EXPECT_TRUE(res.tasks.empty());
  ASSERT_EQ(res.skipped.size(), 1u);
  EXPECT_EQ(res.skipped[0].stage, "task-generation");
  EXPECT_TRUE(contains(res.skipped[0].reason, "malformed"));
}

CompositionTask task_with_context(const std::string& reference,
                                  TaskFormat format = TaskFormat::Programming) {
  const CodeGraph& g = fixture_graph();
  ApiCombination comb = fixture_combination("test_add_accumulates");
  CompositionTask task;
  task.id = "task-under-test";
  task.source_test = comb.source_test;
  task.format = format;
  task.difficulty = 1;
  task.statement = "use the apis";
  task.reference_answer = reference;
  task.context = closure_context_bundle(g, comb.closure);
  task.apis = comb.apis;
  task.closure = comb.closure;
  return task;
}

TEST(RuleFilterStage1, ValidCallsPass) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v = rule_filter_stage1(
      g, task_with_context(
             "auto r = calc::add(make_meters(1.0), make_meters(2.0));"));
  EXPECT_TRUE(v.pass) << v.reason;
}

TEST(RuleFilterStage1, ArityMismatchFails) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v =
      rule_filter_stage1(g, task_with_context("auto r = calc::add(1);"));
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "arity"));
}

TEST(RuleFilterStage1, UnknownEntityFails) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v =
      rule_filter_stage1(g, task_with_context("frobnicate();"));
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "unknown entity"));
}

TEST(RuleFilterStage1, WrongScopePrefixFails) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v = rule_filter_stage1(
      g, task_with_context("auto r = other::add(1, 2);"));
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "prefix"));
}

TEST(RuleFilterStage1, BuiltinCallsAreAllowed) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v = rule_filter_stage1(
      g, task_with_context("printf(\"%d\", 1); auto v = std::max(1, 2);"));
  EXPECT_TRUE(v.pass) << v.reason;
}

TEST(RuleFilterStage1, QuestionAnswerPassesVacuously) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v = rule_filter_stage1(
      g, task_with_context("prose answer with no code",
                           TaskFormat::QuestionAnswer));
  EXPECT_TRUE(v.pass);
}

TEST(RuleFilterStage1, UnbalancedCodeFailsWithParseReason) {
  const CodeGraph& g = fixture_graph();
  FilterVerdict v =
      rule_filter_stage1(g, task_with_context("auto r = calc::add(1, 2;"));
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "parse"));
}

TEST(ConsistencyFilterStage2, IdenticalResponsePasses) {
  const CodeGraph& g = fixture_graph();
  CompositionTask task = task_with_context(
      "auto r = calc::add(make_meters(1.0), make_meters(2.0));");
  StubGateway gw;
  FilterVerdict v =
      consistency_filter_stage2(g, task, task.reference_answer, gw);
  EXPECT_TRUE(v.pass) << v.reason;
}

TEST(ConsistencyFilterStage2, NonexistentCallInResponseFailsRuleRecheck) {
  const CodeGraph& g = fixture_graph();
  CompositionTask task = task_with_context(
      "auto r = calc::add(make_meters(1.0), make_meters(2.0));");
  // judge would accept (superset), but the rule re-check must reject
  std::string response = task.reference_answer + " ghost_call();";
  StubGateway gw;
  FilterVerdict v = consistency_filter_stage2(g, task, response, gw);
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "rule re-check"));
}

TEST(ConsistencyFilterStage2, ScriptedInconsistentJudgeFails) {
  const CodeGraph& g = fixture_graph();
  CompositionTask task = task_with_context("auto r = calc::add(1.0, 2.0);");
  ScriptedGateway gw({ScriptedGateway::reply("INCONSISTENT: different API")});
  FilterVerdict v =
      consistency_filter_stage2(g, task, "something else", gw);
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(contains(v.reason, "judge"));
}

TEST(GeneratedTasks, StubReferenceAnswersSurviveStage1) {
  const CodeGraph& g = fixture_graph();
  StubGateway gw;
  CompositionConfig cfg;
  cfg.difficulty_min = 1;
  cfg.difficulty_max = 2;
  for (const auto& comb : mine_combinations(g, TestMatcherConfig{}).combinations) {
    TaskGenResult res = generate_tasks(g, comb, cfg, gw);
    for (const auto& task : res.tasks) {
      FilterVerdict v = rule_filter_stage1(g, task);
      EXPECT_TRUE(v.pass) << to_string(task.format) << ": " << v.reason;
    }
  }
}

}  // namespace
}  // namespace forge
