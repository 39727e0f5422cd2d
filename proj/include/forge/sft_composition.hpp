#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "forge/assembly.hpp"
#include "forge/builtins.hpp"
#include "forge/gateway.hpp"
#include "forge/graph.hpp"
#include "forge/source_scan.hpp"

#include "json.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Test matching, shared with the utilization builder so both data families
// draw from the same provenance.
// ---------------------------------------------------------------------------

struct TestMatcherConfig {
  // base-name prefixes that mark a function as a test
  std::vector<std::string> name_prefixes{"test_", "test", "Test", "TEST"};
  // optional path substrings; empty = no path constraint
  std::vector<std::string> path_markers;
};

inline bool is_test_function(const CodeGraph& graph, const Entity& e,
                             const TestMatcherConfig& cfg) {
  if (e.kind != EntityKind::Function && e.kind != EntityKind::Method)
    return false;
  std::string base = e.name;
  size_t pos = graph.language == Language::Cpp ? base.rfind("::")
                                               : base.rfind('.');
  if (pos != std::string::npos)
    base = base.substr(pos + (graph.language == Language::Cpp ? 2 : 1));
  bool name_ok = false;
  for (const auto& p : cfg.name_prefixes)
    if (starts_with(base, p)) {
      name_ok = true;
      break;
    }
  if (!name_ok) return false;
  if (cfg.path_markers.empty()) return true;
  for (const auto& m : cfg.path_markers)
    if (contains(e.file_path, m)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// API combinations mined from internal tests.
// ---------------------------------------------------------------------------

struct ApiCombination {
  std::string source_test;        // entity id
  std::vector<std::string> apis;  // call-edge targets, sorted unique
  std::vector<std::string> closure;  // union of dependency closures
};

struct MiningResult {
  std::vector<ApiCombination> combinations;
  std::vector<Diagnostic> diagnostics;
};

inline MiningResult mine_combinations(const CodeGraph& graph,
                                      const TestMatcherConfig& matcher) {
  MiningResult result;
  std::map<std::string, std::set<std::string>> calls_of;
  for (const auto& r : graph.relations())
    if (r.kind == RelationKind::Call) calls_of[r.src].insert(r.dst);

  int tests_seen = 0;
  for (const Entity* e : graph.entities_in_source_order()) {
    if (!is_test_function(graph, *e, matcher)) continue;
    ++tests_seen;
    auto it = calls_of.find(e->id);
    if (it == calls_of.end() || it->second.empty()) continue;  // builtins only

    ApiCombination comb;
    comb.source_test = e->id;
    comb.apis.assign(it->second.begin(), it->second.end());
    std::set<std::string> closure_set;
    for (const auto& api : comb.apis)
      for (const auto& entry : dependency_closure(graph, api))
        closure_set.insert(entry.id);
    // deterministic source order
    for (const Entity* ent : graph.entities_in_source_order())
      if (closure_set.count(ent->id)) comb.closure.push_back(ent->id);
    result.combinations.push_back(std::move(comb));
  }
  if (tests_seen == 0)
    result.diagnostics.push_back(
        {"no-tests", "", 0,
         "test matcher found no test functions; composition and utilization "
         "data will be empty"});
  return result;
}

// ---------------------------------------------------------------------------
// Task generation.
// ---------------------------------------------------------------------------

enum class TaskFormat { QuestionAnswer, FillInBlank, Programming };

inline std::string to_string(TaskFormat f) {
  switch (f) {
    case TaskFormat::QuestionAnswer: return "question_answer";
    case TaskFormat::FillInBlank: return "fill_in_blank";
    case TaskFormat::Programming: return "programming";
  }
  return "?";
}

inline TaskFormat task_format_from(std::string_view s) {
  if (s == "question_answer" || s == "qa") return TaskFormat::QuestionAnswer;
  if (s == "fill_in_blank" || s == "blank") return TaskFormat::FillInBlank;
  if (s == "programming" || s == "prog") return TaskFormat::Programming;
  throw std::invalid_argument("unknown task format: " + std::string(s));
}

struct GradingCriterion {
  std::string point;
  std::string entity;  // knowledge unit: the criterion's target entity id
};

struct CompositionTask {
  std::string id;
  std::string source_test;
  TaskFormat format = TaskFormat::Programming;
  int difficulty = 1;  // knowledge-point count == |grading_criteria|
  std::string statement;
  std::string reference_answer;
  std::vector<GradingCriterion> grading_criteria;
  ContextBundle context;
  std::vector<std::string> apis;
  std::vector<std::string> closure;  // ids whose code the context carries
};

struct CompositionConfig {
  std::vector<TaskFormat> formats{TaskFormat::QuestionAnswer,
                                  TaskFormat::FillInBlank,
                                  TaskFormat::Programming};
  int difficulty_min = 1;
  int difficulty_max = 4;
  int max_attempts = 4;
  std::uint64_t seed = 0;
};

struct TaskGenResult {
  std::vector<CompositionTask> tasks;
  std::vector<FilterVerdict> skipped;  // stage "task-generation"
};

inline TaskGenResult generate_tasks(const CodeGraph& graph,
                                    const ApiCombination& comb,
                                    const CompositionConfig& cfg,
                                    Gateway& gateway) {
  TaskGenResult result;
  ContextBundle context = closure_context_bundle(graph, comb.closure);
  std::string apis_json = api_signatures_json(graph, comb.apis);

  const int difficulty_cap =
      std::min<int>(cfg.difficulty_max, static_cast<int>(comb.apis.size()));

  for (TaskFormat format : cfg.formats) {
    for (int difficulty = cfg.difficulty_min; difficulty <= difficulty_cap;
         ++difficulty) {
      std::string task_id = Fnv1a64()
                                .field("composition")
                                .field(comb.source_test)
                                .field(to_string(format))
                                .field(std::to_string(difficulty))
                                .hex();
      GenRequest req;
      req.role = GenRole::TaskDesign;
      req.mode = GenMode::Chat;
      req.sampling.max_attempts = cfg.max_attempts;
      req.context = context;
      req.prompt = std::string(prompts::kTaskDesign) +
                   prompt_field_line("FORMAT", to_string(format)) +
                   prompt_field_line("DIFFICULTY", std::to_string(difficulty)) +
                   prompt_field_line("LANGUAGE", to_string(graph.language)) +
                   prompt_field_line("APIS", apis_json);

      std::set<std::string> closure_ids(comb.closure.begin(),
                                        comb.closure.end());
      auto parse_task = [&](const Candidate& c,
                            CompositionTask* out) -> bool {
        nlohmann::json j = nlohmann::json::parse(c.content, nullptr, false);
        if (!j.is_object()) return false;
        if (!j.contains("statement") || !j.contains("reference_answer") ||
            !j.contains("grading_criteria"))
          return false;
        std::string statement = j.value("statement", "");
        std::string answer = j.value("reference_answer", "");
        if (trim(statement).empty() || trim(answer).empty()) return false;
        if (!j["grading_criteria"].is_array() ||
            static_cast<int>(j["grading_criteria"].size()) != difficulty)
          return false;
        std::vector<GradingCriterion> criteria;
        for (const auto& gc : j["grading_criteria"]) {
          if (!gc.contains("point") || !gc.contains("entity")) return false;
          std::string entity = gc.value("entity", "");
          if (!closure_ids.count(entity)) return false;
          criteria.push_back({gc.value("point", ""), entity});
        }
        out->statement = statement;
        out->reference_answer = answer;
        out->grading_criteria = std::move(criteria);
        return true;
      };

      try {
        CompositionTask task;
        TraceResult r = rejection_sample(gateway, req, [&](const Candidate& c) {
          CompositionTask probe;
          return parse_task(c, &probe);
        });
        if (!r.accepted) {
          result.skipped.push_back({task_id, "task-generation", false,
                                    "malformed task reply after " +
                                        std::to_string(cfg.max_attempts) +
                                        " attempts"});
          continue;
        }
        parse_task({r.reasoning_trace, r.response}, &task);
        task.id = task_id;
        task.source_test = comb.source_test;
        task.format = format;
        task.difficulty = difficulty;
        task.context = context;
        task.apis = comb.apis;
        task.closure = comb.closure;
        result.tasks.push_back(std::move(task));
      } catch (const TransportError& ex) {
        result.skipped.push_back({task_id, "task-generation", false,
                                  ex.what()});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Stage 1: rule-based validation of reference code against the closure.
// ---------------------------------------------------------------------------

namespace detail {

struct SignatureEntry {
  const Entity* entity;
  std::string base;
};

inline std::string base_name_of(const CodeGraph& graph, const Entity& e) {
  size_t pos = graph.language == Language::Cpp ? e.name.rfind("::")
                                               : e.name.rfind('.');
  if (pos == std::string::npos) return e.name;
  return e.name.substr(pos + (graph.language == Language::Cpp ? 2 : 1));
}

inline bool balanced_delimiters(const std::vector<SrcToken>& toks) {
  std::vector<char> stack;
  for (const auto& t : toks) {
    if (t.text == "(" || t.text == "[" || t.text == "{")
      stack.push_back(t.text[0]);
    else if (t.text == ")" || t.text == "]" || t.text == "}") {
      if (stack.empty()) return false;
      char open = stack.back();
      stack.pop_back();
      if ((t.text == ")" && open != '(') || (t.text == "]" && open != '[') ||
          (t.text == "}" && open != '{'))
        return false;
    }
  }
  return stack.empty();
}

// module stem for python prefix checks: "mypkg/store.py" -> "store"
inline std::string module_stem(const std::string& path) {
  std::string name = path;
  size_t slash = name.rfind('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  size_t dot = name.rfind('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return name;
}

}  // namespace detail

// Validates every call in the reference code: the callee must exist in the
// provided context (or be a language builtin), a scope qualifier must match
// the callee's enclosing chain, and the argument count must fit the
// signature. The verdict carries the first violation.
inline FilterVerdict rule_filter_stage1(const CodeGraph& graph,
                                        const CompositionTask& task,
                                        const std::string& code_override = "",
                                        const std::string& stage = "rule") {
  FilterVerdict verdict;
  verdict.sample_id = task.id;
  verdict.stage = stage;

  if (task.format == TaskFormat::QuestionAnswer && code_override.empty()) {
    verdict.pass = true;  // no code to check
    return verdict;
  }
  const std::string& code =
      code_override.empty() ? task.reference_answer : code_override;

  // context signature table: every closure entity, plus methods of closure
  // classes (the class body carries their code)
  std::map<std::string, std::vector<detail::SignatureEntry>> table;
  std::set<std::string> added;
  auto add_entry = [&](const Entity& e) {
    if (e.kind == EntityKind::File || !added.insert(e.id).second) return;
    table[detail::base_name_of(graph, e)].push_back(
        {&e, detail::base_name_of(graph, e)});
  };
  std::set<std::string> ctx_ids(task.closure.begin(), task.closure.end());
  ctx_ids.insert(task.apis.begin(), task.apis.end());
  for (const auto& id : ctx_ids) {
    const Entity* e = graph.find(id);
    if (!e) continue;
    add_entry(*e);
    if (e->kind == EntityKind::Class)
      for (const auto& r : graph.relations())
        if (r.kind == RelationKind::Contain && r.src == e->id)
          add_entry(graph.at(r.dst));
  }

  const Language lang = graph.language;
  std::vector<SrcToken> toks =
      tokenize_masked(mask_source(lang, code), lang == Language::Cpp);
  if (!detail::balanced_delimiters(toks)) {
    verdict.pass = false;
    verdict.reason = "parse: unbalanced delimiters in reference code";
    return verdict;
  }

  // names of classes/modules known graph-wide, for prefix verification
  std::set<std::string> known_scopes;
  for (const auto& e : graph.entities()) {
    if (e.kind == EntityKind::Class)
      known_scopes.insert(detail::base_name_of(graph, e));
    if (e.kind == EntityKind::File)
      known_scopes.insert(detail::module_stem(e.file_path));
  }

  for (const auto& call : extract_calls(toks, lang)) {
    auto it = table.find(call.name);
    if (it == table.end()) {
      if (is_builtin_call(lang, call.name, call.qualifier)) continue;
      verdict.pass = false;
      verdict.reason = "unknown entity: " + call.name +
                       " is neither in context nor a builtin";
      return verdict;
    }

    // prefix check: a scope-qualified call must name a scope the callee
    // actually lives in. Receiver-style qualifiers that are not known
    // scopes are unverifiable variables and pass.
    std::string last_qual;
    if (!call.qualifier.empty()) {
      auto parts = split(call.qualifier, lang == Language::Cpp ? ':' : '.');
      for (auto pit = parts.rbegin(); pit != parts.rend(); ++pit)
        if (!pit->empty()) {
          last_qual = *pit;
          break;
        }
    }
    bool check_prefix =
        !last_qual.empty() && (call.scope || known_scopes.count(last_qual));

    bool any_ok = false;
    std::string first_reason;
    for (const auto& entry : it->second) {
      const Entity& cand = *entry.entity;
      if (check_prefix) {
        std::string enclosing = enclosing_of(graph, cand.id);
        std::string ns = namespace_of(graph, cand);
        std::string stem = detail::module_stem(cand.file_path);
        bool prefix_ok = contains(enclosing, last_qual) ||
                         contains(ns, last_qual) || stem == last_qual ||
                         contains(cand.name, last_qual);
        if (!prefix_ok) {
          if (first_reason.empty())
            first_reason = "prefix mismatch: " + call.qualifier +
                           " does not enclose " + cand.name;
          continue;
        }
      }
      if (cand.signature) {
        const Signature& sig = *cand.signature;
        if (call.arg_count < sig.min_args ||
            (sig.max_args != -1 && call.arg_count > sig.max_args)) {
          if (first_reason.empty())
            first_reason = "arity mismatch: " + call.name + " called with " +
                           std::to_string(call.arg_count) +
                           " args, signature takes " +
                           std::to_string(sig.min_args) +
                           (sig.max_args == -1
                                ? "+"
                                : sig.max_args == sig.min_args
                                      ? ""
                                      : ".." + std::to_string(sig.max_args));
          continue;
        }
      }
      any_ok = true;
      break;
    }
    if (!any_ok) {
      verdict.pass = false;
      verdict.reason = first_reason.empty()
                           ? "no candidate matches call to " + call.name
                           : first_reason;
      return verdict;
    }
  }
  verdict.pass = true;
  return verdict;
}

// ---------------------------------------------------------------------------
// Stage 2: semantic consistency of the generated response, plus the rule
// re-check. Monotone: a task failing stage 1 never reaches this stage (the
// pipeline enforces it); the check itself passes only if both legs pass.
// ---------------------------------------------------------------------------

inline FilterVerdict consistency_filter_stage2(const CodeGraph& graph,
                                               const CompositionTask& task,
                                               const std::string& response,
                                               Gateway& gateway) {
  FilterVerdict verdict;
  verdict.sample_id = task.id;
  verdict.stage = "consistency";

  ConsistencyVerdict judged =
      judge_consistency(gateway, task.reference_answer, response);
  if (!judged.consistent) {
    verdict.pass = false;
    verdict.reason = "judge: " + judged.rationale;
    return verdict;
  }
  if (task.format != TaskFormat::QuestionAnswer) {
    FilterVerdict rule =
        rule_filter_stage1(graph, task, response, "consistency");
    if (!rule.pass) {
      verdict.pass = false;
      verdict.reason = "rule re-check: " + rule.reason;
      return verdict;
    }
  }
  verdict.pass = true;
  verdict.reason = judged.rationale;
  return verdict;
}

}  // namespace forge
