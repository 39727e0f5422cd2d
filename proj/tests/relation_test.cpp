#include "forge/sft_relation.hpp"

#include <gtest/gtest.h>

#include "forge/frontend.hpp"
#include "testing_support.hpp"

namespace forge {
namespace {

using testing::ScriptedGateway;

CodeGraph fixture_graph() {
  FrontendConfig cfg;
  cfg.language = Language::Cpp;
  return scan_repository(testing::cpp_fixture_repo(), cfg);
}

TEST(RenderRelation, TemplateWithFixedVerbs) {
  EXPECT_EQ(render_relation(EntityKind::Function, "foo", RelationKind::Call,
                            EntityKind::Function, "bar"),
            "function foo calls function bar");
  EXPECT_EQ(render_relation(EntityKind::File, "a.hpp", RelationKind::Contain,
                            EntityKind::Class, "Widget"),
            "file a.hpp contains class Widget");
  EXPECT_EQ(render_relation(EntityKind::File, "b.cpp", RelationKind::Include,
                            EntityKind::File, "a.hpp"),
            "file b.cpp includes file a.hpp");
  EXPECT_EQ(render_relation(EntityKind::File, "m.py", RelationKind::Dependency,
                            EntityKind::File, "n.py"),
            "file m.py depends on file n.py");
  EXPECT_EQ(render_relation(EntityKind::Function, "f", RelationKind::Call,
                            EntityKind::GlobalVariable, "G"),
            "function f calls global variable G");
}

TEST(RenderRelation, DeterministicPerEdge) {
  CodeGraph g = fixture_graph();
  for (const auto& r : g.relations()) {
    if (r.kind == RelationKind::Dependency) continue;
    EXPECT_EQ(render_relation(g, r), render_relation(g, r));
  }
}

TEST(RenderRelation, UnknownKindThrows) {
  EXPECT_THROW(relation_verb(static_cast<RelationKind>(99)),
               std::invalid_argument);
  EXPECT_THROW(entity_kind_word(static_cast<EntityKind>(99)),
               std::invalid_argument);
}

TEST(BuildRelationSamples, OnePositivePerDistinctEdgeUnderCap) {
  CodeGraph g = fixture_graph();
  RelationConfig cfg;
  auto samples = build_relation_samples(g, cfg);
  // fixture: 47 call triples + 25 contain + 10 include = 82 distinct edges
  EXPECT_EQ(samples.size(), 82u);
  std::set<std::string> ids;
  for (const auto& s : samples) {
    EXPECT_TRUE(ids.insert(s.id).second);
    EXPECT_EQ(s.polarity, Polarity::Positive);
    EXPECT_FALSE(s.statement.empty());
  }
}

TEST(BuildRelationSamples, PerKindCapDownsamplesDeterministically) {
  CodeGraph g = fixture_graph();
  RelationConfig cfg;
  cfg.per_kind_cap = 5;
  cfg.seed = 42;
  auto a = build_relation_samples(g, cfg);
  auto b = build_relation_samples(g, cfg);
  EXPECT_EQ(a.size(), 15u);  // 5 per kind, 3 kinds
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
}

RelationSample one_positive() {
  RelationSample s;
  s.kind = RelationKind::Call;
  s.src_name = "calc::validate";
  s.dst_name = "calc::Value::amount";
  s.src_kind = EntityKind::Function;
  s.dst_kind = EntityKind::Method;
  s.src_file = "core/value.hpp";
  s.dst_file = "core/value.hpp";
  s.polarity = Polarity::Positive;
  s.statement = render_relation(s.src_kind, s.src_name, s.kind, s.dst_kind,
                                s.dst_name);
  s.id = relation_sample_id(s);
  return s;
}

TEST(AugmentRelations, DefaultsYieldFiveParaphrasesAndOneNegative) {
  CodeGraph g = fixture_graph();
  StubGateway gw;
  RelationConfig cfg;  // n1=5, n2=1
  AugmentResult res = augment_relations({one_positive()}, g, gw, cfg);
  ASSERT_EQ(res.samples.size(), 2u);
  EXPECT_TRUE(res.skipped.empty());

  const RelationSample& pos = res.samples[0];
  EXPECT_EQ(pos.polarity, Polarity::Positive);
  ASSERT_EQ(pos.paraphrases.size(), 5u);
  for (const auto& p : pos.paraphrases) {
    EXPECT_TRUE(contains(p, "calc::validate"));
    EXPECT_TRUE(contains(p, "calc::Value::amount"));
  }

  const RelationSample& neg = res.samples[1];
  EXPECT_EQ(neg.polarity, Polarity::Negative);
  EXPECT_FALSE(neg.fabricated_name.empty());
  // exact-match absence against the whole graph name set
  for (const auto& e : g.entities()) EXPECT_NE(e.name, neg.fabricated_name);
  EXPECT_TRUE(contains(neg.statement, neg.fabricated_name));
}

TEST(AugmentRelations, ZeroCountsKeepOriginalOnly) {
  CodeGraph g = fixture_graph();
  StubGateway gw;
  RelationConfig cfg;
  cfg.n1 = 0;
  cfg.n2 = 0;
  AugmentResult res = augment_relations({one_positive()}, g, gw, cfg);
  ASSERT_EQ(res.samples.size(), 1u);
  EXPECT_TRUE(res.samples[0].paraphrases.empty());
  EXPECT_EQ(gw.call_count(), 0);
}

TEST(AugmentRelations, MockEchoVariantsPreserveEntityNames) {
  CodeGraph g = fixture_graph();
  // scripted mock echoing numbered variants
  ScriptedGateway gw({ScriptedGateway::reply(
      "1. function calc::validate reads method calc::Value::amount\n"
      "2. calc::validate relies on calc::Value::amount\n"
      "3. the function calc::validate invokes calc::Value::amount\n")});
  RelationConfig cfg;
  cfg.n1 = 3;
  cfg.n2 = 0;
  AugmentResult res = augment_relations({one_positive()}, g, gw, cfg);
  ASSERT_EQ(res.samples.size(), 1u);
  EXPECT_EQ(res.samples[0].paraphrases.size(), 3u);
}

TEST(AugmentRelations, InvalidParaphrasesExhaustAttemptsAndSkip) {
  CodeGraph g = fixture_graph();
  // every reply drops the entity names -> acceptor rejects all K attempts
  ScriptedGateway gw({ScriptedGateway::reply("1. nothing relevant\n"),
                      ScriptedGateway::reply("1. still nothing\n")});
  RelationConfig cfg;
  cfg.n1 = 1;
  cfg.n2 = 0;
  cfg.max_attempts = 2;
  AugmentResult res = augment_relations({one_positive()}, g, gw, cfg);
  EXPECT_TRUE(res.samples.empty());
  ASSERT_EQ(res.skipped.size(), 1u);
  EXPECT_EQ(res.skipped[0].stage, "augmentation");
  EXPECT_FALSE(res.skipped[0].pass);
}

TEST(AugmentRelations, DeterministicUnderSeed) {
  CodeGraph g = fixture_graph();
  RelationConfig cfg;
  cfg.seed = 11;
  StubGateway gw1, gw2;
  auto a = augment_relations({one_positive()}, g, gw1, cfg);
  auto b = augment_relations({one_positive()}, g, gw2, cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].statement, b.samples[i].statement);
    EXPECT_EQ(a.samples[i].fabricated_name, b.samples[i].fabricated_name);
  }
}

TEST(AssembleRelationContext, CoLocatedPositiveGetsOneFile) {
  CodeGraph g = fixture_graph();
  ContextBundle b = assemble_relation_context(one_positive(), g);
  EXPECT_EQ(b.kind, ContextKind::FileContents);
  ASSERT_EQ(b.items.size(), 1u);
  EXPECT_EQ(b.items[0].label, "core/value.hpp");
  EXPECT_TRUE(contains(b.items[0].text, "class Value"));
}

TEST(AssembleRelationContext, CrossFilePositiveGetsBothFiles) {
  CodeGraph g = fixture_graph();
  RelationSample s = one_positive();
  s.src_name = "calc::Registry::record";
  s.src_file = "core/registry.cpp";
  ContextBundle b = assemble_relation_context(s, g);
  ASSERT_EQ(b.items.size(), 2u);
  EXPECT_EQ(b.items[0].label, "core/registry.cpp");
  EXPECT_EQ(b.items[1].label, "core/value.hpp");
}

TEST(AssembleRelationContext, NegativeGetsNameListOfSlotKinds) {
  CodeGraph g = fixture_graph();
  RelationSample s = one_positive();
  s.polarity = Polarity::Negative;
  s.fabricated_name = "calc::validate_ex";
  s.src_name = s.fabricated_name;
  ContextBundle b = assemble_relation_context(s, g);
  EXPECT_EQ(b.kind, ContextKind::EntityNameList);
  // functions and methods share one slot group: 12 distinct function names
  // (three files define a `main`) + 7 methods
  EXPECT_EQ(b.items.size(), 19u);
  for (const auto& item : b.items) {
    EXPECT_TRUE(item.label == "function" || item.label == "method");
    EXPECT_NE(item.text, s.fabricated_name);
  }
}

TEST(AssembleRelationContext, MissingFileIsCorruptionError) {
  CodeGraph g = fixture_graph();
  RelationSample s = one_positive();
  s.src_file = "no/such/file.hpp";
  EXPECT_THROW(assemble_relation_context(s, g), std::runtime_error);
}

TEST(RelationInstruction, ReferencesMatchPolarity) {
  RelationSample pos = one_positive();
  EXPECT_TRUE(contains(relation_reference(pos, pos.statement), "True"));
  RelationSample neg = pos;
  neg.polarity = Polarity::Negative;
  neg.fabricated_name = "ghost_fn";
  EXPECT_TRUE(contains(relation_reference(neg, neg.statement), "False"));
  EXPECT_TRUE(contains(relation_reference(neg, neg.statement), "ghost_fn"));
}

}  // namespace
}  // namespace forge
