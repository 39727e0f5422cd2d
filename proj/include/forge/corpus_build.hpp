#pragma once

#include <string>

#include "forge/prompts.hpp"
#include "forge/records.hpp"
#include "forge/sft_composition.hpp"
#include "forge/sft_relation.hpp"
#include "forge/sft_utilization.hpp"

namespace forge {

// Record constructors shared by the pipeline and the CLI builders. Records
// leave here untraced; trace_record() fills reasoning_trace/response later.
// Metadata carries everything needed to rebuild the per-kind acceptors.

inline SftRecord relation_record(const RelationSample& sample,
                                 const std::string& statement,
                                 const ContextBundle& context,
                                 size_t instance_index) {
  SftRecord rec;
  rec.id = Fnv1a64()
               .field("sft-relation")
               .field(sample.id)
               .field(std::to_string(instance_index))
               .hex();
  rec.kind = "relation";
  rec.instruction = relation_instruction(sample, statement);
  rec.context = context;
  nlohmann::json provenance = nlohmann::json::array();
  if (!sample.src_id.empty()) provenance.push_back(sample.src_id);
  if (!sample.dst_id.empty()) provenance.push_back(sample.dst_id);
  rec.metadata = {{"polarity", to_string(sample.polarity)},
                  {"relation", to_string(sample.kind)},
                  {"statement", statement},
                  {"reference", relation_reference(sample, statement)},
                  {"provenance", provenance},
                  {"prompt_version", prompt_version_hash()}};
  if (!sample.fabricated_name.empty())
    rec.metadata["fabricated_name"] = sample.fabricated_name;
  return rec;
}

inline SftRecord composition_record(const CompositionTask& task) {
  SftRecord rec;
  rec.id = task.id;
  rec.kind = "composition";
  rec.instruction = task.statement;
  rec.context = task.context;
  nlohmann::json criteria = nlohmann::json::array();
  for (const auto& gc : task.grading_criteria)
    criteria.push_back({{"point", gc.point}, {"entity", gc.entity}});
  nlohmann::json provenance = nlohmann::json::array();
  provenance.push_back(task.source_test);
  for (const auto& api : task.apis) provenance.push_back(api);
  rec.metadata = {{"format", to_string(task.format)},
                  {"difficulty", task.difficulty},
                  {"grading_criteria", criteria},
                  {"reference_answer", task.reference_answer},
                  {"apis", task.apis},
                  {"closure", task.closure},
                  {"provenance", provenance},
                  {"prompt_version", prompt_version_hash()}};
  return rec;
}

inline SftRecord utilization_record(const UtilizationSample& sample) {
  SftRecord rec;
  rec.id = sample.id;
  rec.kind = "utilization";
  rec.instruction = sample.instruction;
  rec.context = sample.context;
  nlohmann::json repair_log = nlohmann::json::array();
  for (const auto& step : sample.repair_log)
    repair_log.push_back({{"attempt", step.attempt},
                          {"diagnostic_digest", step.compiler_message_digest},
                          {"patch", step.patch_summary}});
  nlohmann::json provenance = nlohmann::json::array();
  provenance.push_back(sample.source_test);
  for (const auto& id : sample.closure) provenance.push_back(id);
  rec.metadata = {{"functional_code", sample.functional_code},
                  {"assertions", sample.assertions},
                  {"closure", sample.closure},
                  {"repair_log", repair_log},
                  {"provenance", provenance},
                  {"prompt_version", prompt_version_hash()}};
  return rec;
}

}  // namespace forge
