#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forge/config.hpp"
#include "forge/corpus_build.hpp"
#include "forge/cpt.hpp"
#include "forge/frontend.hpp"
#include "forge/records.hpp"
#include "forge/trace_ops.hpp"

#include "json.hpp"

namespace forge {

struct StageCounts {
  std::int64_t generated = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t skipped = 0;

  bool conserved() const { return generated == accepted + rejected + skipped; }
  double rejection_rate() const {
    return generated == 0 ? 0.0
                          : static_cast<double>(rejected + skipped) /
                                static_cast<double>(generated);
  }
};

struct RunReport {
  std::string graph_content_hash;
  std::map<std::string, StageCounts> stages;
  std::map<std::string, std::int64_t> sample_totals;  // per output corpus
  std::map<std::string, std::string> outputs;         // name -> file name
  std::int64_t diagnostics = 0;
  std::int64_t gateway_calls = 0;

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::object();
    for (const auto& [name, c] : stages) {
      st[name] = {{"generated", c.generated},
                  {"accepted", c.accepted},
                  {"rejected", c.rejected},
                  {"skipped", c.skipped},
                  {"rejection_rate", c.rejection_rate()}};
    }
    return {{"graph_content_hash", graph_content_hash},
            {"stages", st},
            {"sample_totals", sample_totals},
            {"outputs", outputs},
            {"diagnostics", diagnostics},
            {"gateway_calls", gateway_calls}};
  }
};

namespace detail {

// strips an optional {"format": ...} header line and blank lines
inline std::vector<std::string> record_lines(const std::string& text) {
  std::vector<std::string> lines;
  bool first = true;
  for (const auto& line : split_lines(text)) {
    if (trim(line).empty()) continue;
    if (first) {
      first = false;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("format")) continue;
    }
    lines.push_back(line);
  }
  return lines;
}

inline std::string with_header(const char* format, int version,
                               const std::vector<std::string>& lines) {
  std::string out = nlohmann::json{{"format", format},
                                   {"version", version},
                                   {"records", lines.size()}}
                        .dump();
  out += '\n';
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace detail

// Executes graph build -> CPT generation -> the three SFT builders -> trace
// generation -> filters -> mixing. Per-sample failures become verdicts and
// never abort; a stage's fatal error aborts with the stage name.
inline RunReport run_pipeline(const std::filesystem::path& repo,
                              const PipelineConfig& config,
                              const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  config.validate();
  fs::create_directories(out_dir);

  RunReport report;
  std::vector<FilterVerdict> verdicts;
  std::vector<SftRecord> sft_records;

  auto stage_guard = [](const char* stage, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& ex) {
      throw std::runtime_error("pipeline stage '" + std::string(stage) +
                               "' failed: " + ex.what());
    }
  };

  // ---- graph ----
  CodeGraph graph;
  stage_guard("graph", [&] {
    graph = scan_repository(repo, config.frontend);
    save_graph(graph, out_dir / "graph.jsonl");
    StageCounts& c = report.stages["graph"];
    c.generated = static_cast<std::int64_t>(graph.entities().size());
    c.accepted = c.generated;
    report.graph_content_hash = graph.content_hash();
    report.diagnostics = static_cast<std::int64_t>(graph.diagnostics.size());
    report.outputs["graph"] = "graph.jsonl";
  });

  GatewayHandle gateway = make_gateway(config.gateway);
  Sandbox sandbox(config.sandbox);
  const int k = config.gateway.max_attempts;

  // ---- CPT ----
  stage_guard("cpt", [&] {
    CptConfig cpt_cfg = config.cpt;
    std::vector<CptSample> corpus = build_cpt_corpus(graph, cpt_cfg);
    StageCounts& c = report.stages["cpt"];
    c.generated = static_cast<std::int64_t>(corpus.size());
    c.accepted = c.generated;
    std::string serialized = serialize_cpt_corpus(corpus, cpt_cfg);
    write_file(out_dir / "cpt.jsonl", serialized);
    report.outputs["cpt"] = "cpt.jsonl";
    report.sample_totals["cpt"] = c.accepted;

    if (config.mix.cpt_ratio > 0 && !config.mix.general_cpt_path.empty()) {
      auto domain = detail::record_lines(serialized);
      auto general =
          detail::record_lines(read_file(config.mix.general_cpt_path));
      auto mixed = mix_records(domain, general, config.mix.cpt_ratio,
                               config.mix.seed);
      write_file(out_dir / "cpt_mixed.jsonl",
                 detail::with_header("cpt", kCptFormatVersion, mixed));
      report.outputs["cpt_mixed"] = "cpt_mixed.jsonl";
      report.sample_totals["cpt_mixed"] =
          static_cast<std::int64_t>(mixed.size());
    }
  });

  // Shared trace step: fills the record and books the verdicts. Composition
  // records additionally log the stage-2 consistency verdict on the accepted
  // response.
  auto trace_and_book = [&](SftRecord rec, StageCounts& counts) {
    ++counts.generated;
    FilterVerdict v = trace_record(rec, graph, gateway.get(), sandbox, k);
    verdicts.push_back(v);
    if (!v.pass) {
      ++counts.rejected;
      return;
    }
    if (rec.kind == "composition") {
      FilterVerdict stage2 =
          filter_record(rec, graph, gateway.get(), sandbox, "consistency");
      verdicts.push_back(stage2);
      if (!stage2.pass) {
        ++counts.rejected;
        return;
      }
    }
    ++counts.accepted;
    sft_records.push_back(std::move(rec));
  };

  // ---- relation data ----
  stage_guard("relation", [&] {
    auto positives = build_relation_samples(graph, config.relation);
    AugmentResult aug =
        augment_relations(positives, graph, gateway.get(), config.relation);
    StageCounts& synth = report.stages["relation_synthesis"];
    synth.generated =
        static_cast<std::int64_t>(aug.samples.size() + aug.skipped.size());
    synth.accepted = static_cast<std::int64_t>(aug.samples.size());
    synth.skipped = static_cast<std::int64_t>(aug.skipped.size());
    for (auto& v : aug.skipped) verdicts.push_back(v);

    StageCounts& trace_stage = report.stages["relation_trace"];
    for (const auto& sample : aug.samples) {
      ContextBundle context = assemble_relation_context(sample, graph);
      std::vector<std::string> statements{sample.statement};
      statements.insert(statements.end(), sample.paraphrases.begin(),
                        sample.paraphrases.end());
      for (size_t i = 0; i < statements.size(); ++i)
        trace_and_book(relation_record(sample, statements[i], context, i),
                       trace_stage);
    }
  });

  // ---- composition data ----
  stage_guard("composition", [&] {
    MiningResult mined = mine_combinations(graph, config.test_matcher);
    report.diagnostics += static_cast<std::int64_t>(mined.diagnostics.size());

    StageCounts& gen = report.stages["composition_tasks"];
    StageCounts& rule = report.stages["composition_rule_filter"];
    StageCounts& trace_stage = report.stages["composition_trace"];
    for (const auto& comb : mined.combinations) {
      TaskGenResult tasks =
          generate_tasks(graph, comb, config.composition, gateway.get());
      gen.generated += static_cast<std::int64_t>(tasks.tasks.size() +
                                                 tasks.skipped.size());
      gen.accepted += static_cast<std::int64_t>(tasks.tasks.size());
      gen.skipped += static_cast<std::int64_t>(tasks.skipped.size());
      for (auto& v : tasks.skipped) verdicts.push_back(v);

      for (const auto& task : tasks.tasks) {
        ++rule.generated;
        FilterVerdict stage1 = rule_filter_stage1(graph, task);
        verdicts.push_back(stage1);
        if (!stage1.pass) {
          ++rule.rejected;
          continue;  // stage-1 failures never reach stage 2
        }
        ++rule.accepted;
        trace_and_book(composition_record(task), trace_stage);
      }
    }
  });

  // ---- utilization data ----
  stage_guard("utilization", [&] {
    MiningResult mined = mine_combinations(graph, config.test_matcher);
    StageCounts& dec = report.stages["utilization_decompose"];
    StageCounts& rep = report.stages["utilization_repair"];
    StageCounts& exec = report.stages["utilization_execution"];
    StageCounts& trace_stage = report.stages["utilization_trace"];

    for (const auto& comb : mined.combinations) {
      ++dec.generated;
      DecomposeResult split =
          decompose_test(graph, comb, gateway.get(), config.utilization);
      verdicts.push_back(split.verdict);
      if (!split.sample) {
        ++dec.skipped;
        continue;
      }
      ++dec.accepted;

      ++rep.generated;
      RepairResult repaired =
          compile_and_repair(graph, *split.sample, sandbox, gateway.get(),
                             config.utilization.max_repair_iters);
      verdicts.push_back(repaired.verdict);
      if (!repaired.success) {
        ++rep.rejected;
        continue;
      }
      ++rep.accepted;
      UtilizationSample sample = std::move(repaired.sample);

      ++exec.generated;
      FilterVerdict executed = execution_filter(graph, sample, sandbox);
      verdicts.push_back(executed);
      if (!executed.pass) {
        ++exec.rejected;
        continue;
      }
      ++exec.accepted;
      trace_and_book(utilization_record(sample), trace_stage);
    }
  });

  // ---- outputs ----
  stage_guard("emit", [&] {
    std::string sft = serialize_sft_corpus(sft_records);
    write_file(out_dir / "sft.jsonl", sft);
    report.outputs["sft"] = "sft.jsonl";
    std::map<std::string, std::int64_t> per_kind;
    for (const auto& r : sft_records) ++per_kind[r.kind];
    for (const auto& [kind, count] : per_kind)
      report.sample_totals["sft_" + kind] = count;
    report.sample_totals["sft"] =
        static_cast<std::int64_t>(sft_records.size());

    if (config.mix.sft_ratio > 0 && !config.mix.general_sft_path.empty()) {
      auto domain = detail::record_lines(sft);
      auto general =
          detail::record_lines(read_file(config.mix.general_sft_path));
      auto mixed =
          mix_records(domain, general, config.mix.sft_ratio, config.mix.seed);
      write_file(out_dir / "sft_mixed.jsonl",
                 detail::with_header("sft", kSftFormatVersion, mixed));
      report.outputs["sft_mixed"] = "sft_mixed.jsonl";
      report.sample_totals["sft_mixed"] =
          static_cast<std::int64_t>(mixed.size());
    }

    write_file(out_dir / "verdicts.jsonl", serialize_verdicts(verdicts));
    report.outputs["verdicts"] = "verdicts.jsonl";
    report.gateway_calls = gateway.get().call_count();
    report.outputs["report"] = "report.json";
    write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
  });

  return report;
}

}  // namespace forge
