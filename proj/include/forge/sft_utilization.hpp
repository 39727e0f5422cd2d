#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/assembly.hpp"
#include "forge/gateway.hpp"
#include "forge/graph.hpp"
#include "forge/sandbox.hpp"
#include "forge/sft_composition.hpp"  // TestMatcherConfig, ApiCombination
#include "forge/source_scan.hpp"

#include "json.hpp"

namespace forge {

struct RepairStep {
  int attempt = 0;
  std::string compiler_message_digest;
  std::string patch_summary;
};

struct UtilizationSample {
  std::string id;
  std::string source_test;  // entity id
  std::string functional_code;
  std::string assertions;   // calls the functional entry symbol
  std::string instruction;  // generated comment describing the intent
  ContextBundle context;
  std::vector<std::string> closure;  // entity ids behind the context
  std::vector<RepairStep> repair_log;
};

struct UtilizationConfig {
  int max_repair_iters = 3;
  int max_attempts = 4;  // K for decomposition draws
  std::uint64_t seed = 0;
};

namespace detail {

inline bool has_assertion_construct(Language lang, const std::string& code) {
  if (lang == Language::Python) return contains(code, "assert ");
  return contains(code, "assert(") || contains(code, "assert (") ||
         contains(code, "ASSERT") || contains(code, "EXPECT") ||
         contains(code, "CHECK(") || contains(code, "REQUIRE(");
}

inline bool snippet_parses(Language lang, const std::string& code) {
  auto toks = tokenize_masked(mask_source(lang, code), lang == Language::Cpp);
  return balanced_delimiters(toks);
}

// Inner body of a test entity: between the outer braces for C++, the lines
// after the def header for Python.
inline std::string inner_test_body(Language lang, const Entity& test) {
  if (lang == Language::Cpp) {
    size_t open = test.body_text.find('{');
    size_t close = test.body_text.rfind('}');
    if (open == std::string::npos || close == std::string::npos ||
        close <= open)
      return "";
    return test.body_text.substr(open + 1, close - open - 1);
  }
  auto lines = split_lines(test.body_text);
  std::string out;
  bool past_header = false;
  for (const auto& line : lines) {
    if (!past_header) {
      if (contains(line, "def ") && ends_with(trim(line), ":"))
        past_header = true;
      continue;
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Decomposition: split a test into (functional implementation, assertions)
// plus a generated instruction comment. The split comes from the gateway and
// is validated syntactically; validation failure after K draws skips the
// sample.
// ---------------------------------------------------------------------------

struct DecomposeResult {
  std::optional<UtilizationSample> sample;
  FilterVerdict verdict;  // stage "decompose"
};

inline DecomposeResult decompose_test(const CodeGraph& graph,
                                      const ApiCombination& comb,
                                      Gateway& gateway,
                                      const UtilizationConfig& cfg) {
  const Entity& test = graph.at(comb.source_test);
  const Language lang = graph.language;
  DecomposeResult result;
  std::string sample_id =
      Fnv1a64().field("utilization").field(test.id).hex();
  result.verdict = {sample_id, "decompose", false, ""};

  std::string body = detail::inner_test_body(lang, test);
  if (trim(body).empty() || !detail::snippet_parses(lang, body)) {
    result.verdict.reason = "test body not parseable";
    return result;
  }
  std::string base = test.name;
  size_t pos = lang == Language::Cpp ? base.rfind("::") : base.rfind('.');
  if (pos != std::string::npos)
    base = base.substr(pos + (lang == Language::Cpp ? 2 : 1));

  GenRequest req;
  req.role = GenRole::Decompose;
  req.mode = GenMode::Chat;
  req.sampling.max_attempts = cfg.max_attempts;
  req.prompt = std::string(prompts::kDecompose) +
               prompt_field_line("TEST_NAME", base) +
               prompt_field_line("LANGUAGE", to_string(lang)) +
               prompt_section("TEST_BODY", body);

  auto parse_split = [&](const Candidate& c, UtilizationSample* out) -> bool {
    nlohmann::json j = nlohmann::json::parse(c.content, nullptr, false);
    if (!j.is_object()) return false;
    std::string functional = j.value("functional_code", "");
    std::string assertions = j.value("assertions", "");
    std::string instruction = j.value("instruction", "");
    if (trim(functional).empty() || trim(assertions).empty() ||
        trim(instruction).empty())
      return false;
    if (!detail::snippet_parses(lang, functional) ||
        !detail::snippet_parses(lang, assertions))
      return false;
    if (!detail::has_assertion_construct(lang, assertions)) return false;
    out->functional_code = functional;
    out->assertions = assertions;
    out->instruction = instruction;
    return true;
  };

  try {
    TraceResult r = rejection_sample(gateway, req, [&](const Candidate& c) {
      UtilizationSample probe;
      return parse_split(c, &probe);
    });
    if (!r.accepted) {
      result.verdict.reason = "decomposition failed validation after " +
                              std::to_string(cfg.max_attempts) + " attempts";
      return result;
    }
    UtilizationSample sample;
    parse_split({r.reasoning_trace, r.response}, &sample);
    sample.id = sample_id;
    sample.source_test = test.id;
    sample.closure = comb.closure;
    sample.context = closure_context_bundle(graph, comb.closure);
    result.sample = std::move(sample);
    result.verdict.pass = true;
  } catch (const TransportError& ex) {
    result.verdict.reason = ex.what();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Compile-and-repair loop.
// ---------------------------------------------------------------------------

// The translation unit an accepted sample must compile and pass:
// context code, then the functional implementation, then the assertions.
inline AttemptSpec utilization_attempt(const CodeGraph& graph,
                                       const UtilizationSample& sample,
                                       int attempt_index) {
  AttemptSpec spec;
  spec.task_id = sample.id;
  spec.attempt_index = attempt_index;
  spec.language = graph.language;
  spec.code = compilable_unit(graph, sample.closure) + "\n" +
              sample.instruction + "\n" + sample.functional_code;
  spec.tests = sample.assertions;
  return spec;
}

struct RepairResult {
  UtilizationSample sample;
  bool success = false;
  FilterVerdict verdict;  // stage "repair"
};

// Compiles the assembled unit; on failure, feeds the diagnostics to the
// gateway for a patch and retries, up to max_iters repair rounds. Every
// round is recorded in the repair log.
inline RepairResult compile_and_repair(const CodeGraph& graph,
                                       UtilizationSample sample,
                                       Sandbox& sandbox, Gateway& gateway,
                                       int max_iters = 3) {
  RepairResult result;
  result.verdict = {sample.id, "repair", false, ""};

  ExecOutcome outcome;
  for (int round = 0; round <= max_iters; ++round) {
    AttemptSpec spec = utilization_attempt(graph, sample, round + 1);
    spec.compile_only = true;
    outcome = sandbox.run_attempt(spec);
    if (outcome.compiled) {
      result.sample = std::move(sample);
      result.success = true;
      result.verdict.pass = true;
      return result;
    }
    if (round == max_iters) break;

    GenRequest req;
    req.role = GenRole::Repair;
    req.mode = GenMode::Chat;
    req.sampling.max_attempts = 1;
    req.prompt = std::string(prompts::kRepair) +
                 prompt_field_line("LANGUAGE", to_string(graph.language)) +
                 prompt_section("FUNCTIONAL", sample.functional_code) +
                 prompt_section("ASSERTIONS", sample.assertions) +
                 prompt_section("DIAGNOSTICS", outcome.stderr_text);
    std::string patch_summary = "no patch";
    try {
      Candidate c = gateway.generate(req, round + 1);
      nlohmann::json j = nlohmann::json::parse(c.content, nullptr, false);
      if (j.is_object() && j.contains("functional_code")) {
        std::string new_fn = j.value("functional_code", "");
        std::string new_asserts =
            j.value("assertions", sample.assertions);
        if (!trim(new_fn).empty()) {
          bool changed = new_fn != sample.functional_code ||
                         new_asserts != sample.assertions;
          sample.functional_code = new_fn;
          sample.assertions = new_asserts;
          patch_summary = changed ? "applied gateway patch"
                                  : "gateway returned unchanged code";
        }
      } else {
        patch_summary = "unparseable patch reply";
      }
    } catch (const TransportError& ex) {
      patch_summary = std::string("gateway unavailable: ") + ex.what();
    }
    sample.repair_log.push_back(
        {round + 1, outcome.stderr_digest, patch_summary});
  }
  result.verdict.reason =
      "still failing after " + std::to_string(max_iters) +
      " repair rounds; last diagnostic: " +
      (outcome.stderr_text.size() > 400 ? outcome.stderr_text.substr(0, 400)
                                        : outcome.stderr_text);
  result.sample = std::move(sample);
  return result;
}

// ---------------------------------------------------------------------------
// Execution filter: run the assertions against the functional code. The
// pass/fail outcome proxies the validity of the associated reasoning trace.
// ---------------------------------------------------------------------------

inline FilterVerdict execution_filter(const CodeGraph& graph,
                                      const UtilizationSample& sample,
                                      Sandbox& sandbox) {
  FilterVerdict verdict{sample.id, "execution", false, ""};
  ExecOutcome outcome =
      sandbox.run_attempt(utilization_attempt(graph, sample, 1));
  if (!outcome.compiled) {
    verdict.reason = outcome.timed_out ? "timeout during compilation"
                                       : "compilation failed";
    return verdict;
  }
  if (!outcome.tests_passed) {
    verdict.reason = outcome.timed_out ? "timeout" : "assertion failure";
    return verdict;
  }
  verdict.pass = true;
  return verdict;
}

// Context completeness: every in-repo call in the sample's code must resolve
// against the context bundle's entity set.
inline std::vector<std::string> missing_context_symbols(
    const CodeGraph& graph, const std::vector<std::string>& closure_ids,
    const std::string& code) {
  const Language lang = graph.language;
  std::set<std::string> context_names;
  for (const auto& id : closure_ids) {
    const Entity* e = graph.find(id);
    if (!e) continue;
    context_names.insert(detail::base_name_of(graph, *e));
    if (e->kind == EntityKind::Class)
      for (const auto& r : graph.relations())
        if (r.kind == RelationKind::Contain && r.src == e->id)
          context_names.insert(detail::base_name_of(graph, graph.at(r.dst)));
  }
  std::set<std::string> repo_names;
  for (const auto& e : graph.entities())
    if (e.kind != EntityKind::File)
      repo_names.insert(detail::base_name_of(graph, e));

  std::vector<std::string> missing;
  auto toks = tokenize_masked(mask_source(lang, code), lang == Language::Cpp);
  for (const auto& call : extract_calls(toks, lang)) {
    if (!repo_names.count(call.name)) continue;  // not an in-repo symbol
    if (context_names.count(call.name)) continue;
    missing.push_back(call.name);
  }
  return missing;
}

}  // namespace forge
