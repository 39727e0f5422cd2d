#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/gateway.hpp"
#include "forge/records.hpp"
#include "forge/sandbox.hpp"
#include "forge/sft_composition.hpp"
#include "forge/sft_utilization.hpp"

namespace forge {

// Record-level trace generation and filtering for corpora on disk. The
// in-memory pipeline drives the same underlying machinery; these entry
// points reconstruct the per-kind state a record carries in its metadata,
// so corpora can also be traced and filtered stage by stage from the CLI.

inline CompositionTask composition_task_from_record(const SftRecord& rec) {
  CompositionTask task;
  task.id = rec.id;
  task.format = task_format_from(
      rec.metadata.value("format", std::string("programming")));
  task.difficulty = rec.metadata.value("difficulty", 1);
  task.statement = rec.instruction;
  task.reference_answer = rec.metadata.value("reference_answer", "");
  task.context = rec.context;
  if (rec.metadata.contains("apis"))
    task.apis = rec.metadata["apis"].get<std::vector<std::string>>();
  if (rec.metadata.contains("closure"))
    task.closure = rec.metadata["closure"].get<std::vector<std::string>>();
  if (rec.metadata.contains("grading_criteria"))
    for (const auto& gc : rec.metadata["grading_criteria"])
      task.grading_criteria.push_back(
          {gc.value("point", ""), gc.value("entity", "")});
  return task;
}

inline UtilizationSample utilization_sample_from_record(const SftRecord& rec) {
  UtilizationSample sample;
  sample.id = rec.id;
  sample.functional_code = rec.metadata.value("functional_code", "");
  sample.assertions = rec.metadata.value("assertions", "");
  sample.instruction = rec.instruction;
  sample.context = rec.context;
  if (rec.metadata.contains("closure"))
    sample.closure = rec.metadata["closure"].get<std::vector<std::string>>();
  return sample;
}

// Ground-truth response a record's trace must be judged against.
inline std::string record_reference(const SftRecord& rec) {
  if (rec.kind == "relation") return rec.metadata.value("reference", "");
  if (rec.kind == "composition")
    return rec.metadata.value("reference_answer", "");
  return rec.metadata.value("functional_code", "");
}

// Acceptance predicate for one record's candidates: judge for relation data,
// two-leg consistency for composition, execution for utilization.
inline Acceptor make_record_acceptor(const SftRecord& rec,
                                     const CodeGraph& graph, Gateway& gateway,
                                     Sandbox& sandbox) {
  if (rec.kind == "composition") {
    CompositionTask task = composition_task_from_record(rec);
    return [task, &graph, &gateway](const Candidate& c) {
      if (trim(c.content).empty()) return false;
      return consistency_filter_stage2(graph, task, c.content, gateway).pass;
    };
  }
  if (rec.kind == "utilization") {
    UtilizationSample sample = utilization_sample_from_record(rec);
    return [sample, &graph, &sandbox](const Candidate& c) {
      if (trim(c.content).empty()) return false;
      UtilizationSample probe = sample;
      probe.functional_code = c.content;
      return execution_filter(graph, probe, sandbox).pass;
    };
  }
  std::string reference = record_reference(rec);
  return [reference, &gateway](const Candidate& c) {
    if (trim(c.content).empty()) return false;
    return judge_consistency(gateway, reference, c.content).consistent;
  };
}

// Fills reasoning_trace/response on one record via rejection sampling.
inline FilterVerdict trace_record(SftRecord& rec, const CodeGraph& graph,
                                  Gateway& gateway, Sandbox& sandbox, int k) {
  GenRequest req;
  req.role = GenRole::TraceGeneration;
  req.mode = GenMode::Reasoning;
  req.sampling.max_attempts = k;
  req.prompt = std::string(prompts::kTraceGeneration) +
               prompt_field_line("SAMPLE", rec.id) +
               prompt_field_line("TASK", rec.instruction);
  req.context = rec.context;
  req.reference = record_reference(rec);
  try {
    TraceResult r = rejection_sample(gateway, req,
                                     make_record_acceptor(rec, graph, gateway,
                                                          sandbox));
    if (!r.accepted)
      return {rec.id, "trace", false, "no candidate accepted within K"};
    rec.reasoning_trace = r.reasoning_trace;
    rec.response = r.response;
    rec.metadata["attempt_index"] = r.attempt_index;
    return {rec.id, "trace", true, ""};
  } catch (const TransportError& ex) {
    return {rec.id, "trace", false, ex.what()};
  }
}

// Runs one named filter stage over a record.
//   "rule"        pre-trace syntactic gate (composition)
//   "consistency" post-trace judge + rule re-check (composition, relation)
//   "execution"   compile-and-run gate (utilization)
inline FilterVerdict filter_record(const SftRecord& rec,
                                   const CodeGraph& graph, Gateway& gateway,
                                   Sandbox& sandbox,
                                   const std::string& stage) {
  if (stage == "rule") {
    if (rec.kind != "composition") return {rec.id, "rule", true, ""};
    return rule_filter_stage1(graph, composition_task_from_record(rec));
  }
  if (stage == "consistency") {
    if (rec.response.empty())
      return {rec.id, "consistency", false, "record has no response yet"};
    if (rec.kind == "composition")
      return consistency_filter_stage2(
          graph, composition_task_from_record(rec), rec.response, gateway);
    ConsistencyVerdict v =
        judge_consistency(gateway, record_reference(rec), rec.response);
    return {rec.id, "consistency", v.consistent, v.rationale};
  }
  if (stage == "execution") {
    if (rec.kind != "utilization") return {rec.id, "execution", true, ""};
    return execution_filter(graph, utilization_sample_from_record(rec),
                            sandbox);
  }
  throw std::invalid_argument("unknown filter stage: " + stage);
}

}  // namespace forge
