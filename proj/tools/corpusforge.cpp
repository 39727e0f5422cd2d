// corpusforge: static analysis of a codebase into a code graph, plus
// synthesis of dependency-preserving pretraining and reasoning-augmented
// fine-tuning corpora from it.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "forge/config.hpp"
#include "forge/corpus_build.hpp"
#include "forge/pipeline.hpp"
#include "forge/trace_ops.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

struct GlobalArgs {
  std::string config_path;

  PipelineConfig config() const {
    if (config_path.empty()) {
      PipelineConfig cfg;
      return cfg;
    }
    return load_pipeline_config(config_path);
  }
};

std::string read_records_file(const std::string& path) {
  return read_file(path);
}

std::vector<SftRecord> load_sft_records(const std::string& path) {
  std::vector<SftRecord> records;
  for (const auto& line : detail::record_lines(read_file(path))) {
    nlohmann::json j = nlohmann::json::parse(line);
    records.push_back(SftRecord::from_json(j));
  }
  return records;
}

void print_stats_text(const StatsReport& rep) {
  auto row = [](const std::string& label, const std::string& value) {
    std::cout << std::left << std::setw(34) << label << value << "\n";
  };
  std::ostringstream fld, fnd;
  fld << std::fixed << std::setprecision(2) << rep.avg_file_dependencies;
  fnd << std::fixed << std::setprecision(2) << rep.avg_function_dependencies;
  row("Number of Files", std::to_string(rep.files));
  row("#LOC", std::to_string(rep.lines_of_code));
  row("Avg. FLD of File", fld.str());
  row("Avg. D. of Function", fnd.str());
  row("Classes", std::to_string(rep.classes));
  row("Functions + Methods", std::to_string(rep.functions));
  row("Global Variables", std::to_string(rep.globals));
  for (const auto& [kind, count] : rep.relations_by_kind)
    row("Relations (" + kind + ")", std::to_string(count));
}

nlohmann::json stats_json(const StatsReport& rep) {
  return {{"files", rep.files},
          {"loc", rep.lines_of_code},
          {"avg_file_dependencies", rep.avg_file_dependencies},
          {"avg_function_dependencies", rep.avg_function_dependencies},
          {"classes", rep.classes},
          {"functions", rep.functions},
          {"globals", rep.globals},
          {"relations_by_kind", rep.relations_by_kind}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code graph construction and training-corpus synthesis"};
  app.require_subcommand(1);
  app.fallthrough();  // --config is accepted anywhere on the command line
  GlobalArgs global;
  app.add_option("--config", global.config_path,
                 "pipeline config file (JSON); flags override its values")
      ->envname("FORGE_CONFIG");

  // ---- graph ----
  auto* graphid = app.add_subcommand("graph", "build and inspect code graphs");
  graphid->require_subcommand(1);

  std::string lang = "cpp", root, out, in_path;
  std::vector<std::string> excludes;
  auto* graph_build = graphid->add_subcommand("build", "scan a source tree");
  graph_build->add_option("--lang", lang, "cpp|python");
  graph_build->add_option("--root", root, "repository root")->required();
  graph_build->add_option("--exclude", excludes, "exclude glob (repeatable)");
  graph_build->add_option("--out", out, "graph file")->required();
  graph_build->callback([&] {
    PipelineConfig cfg = global.config();
    cfg.frontend.language = language_from(lang);
    for (const auto& g : excludes) cfg.frontend.exclude_globs.push_back(g);
    CodeGraph graph = scan_repository(root, cfg.frontend);
    save_graph(graph, out);
    std::cout << "entities " << graph.entities().size() << ", relations "
              << graph.relations().size() << ", diagnostics "
              << graph.diagnostics.size() << " -> " << out << "\n";
  });

  bool as_json = false;
  auto* graph_stats_cmd = graphid->add_subcommand("stats", "report graph statistics");
  graph_stats_cmd->add_option("--in", in_path, "graph file")->required();
  graph_stats_cmd->add_flag("--json", as_json, "machine-readable output");
  graph_stats_cmd->callback([&] {
    StatsReport rep = graph_stats(load_graph(in_path));
    if (as_json)
      std::cout << stats_json(rep).dump(2) << "\n";
    else
      print_stats_text(rep);
  });

  // ---- cpt ----
  auto* cpt = app.add_subcommand("cpt", "dependency-preserving CPT corpus");
  cpt->require_subcommand(1);
  std::string cpt_graph, cpt_out, cpt_mode;
  std::int64_t cpt_limit = -1;
  auto* cpt_gen = cpt->add_subcommand("generate", "emit CPT samples");
  cpt_gen->add_option("--graph", cpt_graph, "graph file")->required();
  cpt_gen->add_option("--limit", cpt_limit, "context limit L in tokens");
  cpt_gen->add_option("--mode", cpt_mode, "overlap_one|step_one");
  cpt_gen->add_option("--out", cpt_out, "output jsonl")->required();
  cpt_gen->callback([&] {
    PipelineConfig cfg = global.config();
    if (cpt_limit > 0) cfg.cpt.context_limit = cpt_limit;
    if (!cpt_mode.empty()) cfg.cpt.pointer_mode = pointer_mode_from(cpt_mode);
    CodeGraph graph = load_graph(cpt_graph);
    auto corpus = build_cpt_corpus(graph, cfg.cpt);
    write_file(cpt_out, serialize_cpt_corpus(corpus, cfg.cpt));
    std::cout << corpus.size() << " samples -> " << cpt_out << "\n";
  });

  // ---- corpus ----
  auto* corpus = app.add_subcommand("corpus", "corpus-level operations");
  corpus->require_subcommand(1);
  std::string mix_domain, mix_general, mix_out;
  double mix_ratio = 0.0;
  std::uint64_t mix_seed = 0;
  auto* corpus_mix = corpus->add_subcommand("mix", "interleave general data");
  corpus_mix->add_option("--domain", mix_domain)->required();
  corpus_mix->add_option("--general", mix_general)->required();
  corpus_mix->add_option("--ratio", mix_ratio, "general fraction in [0,1)")
      ->required();
  corpus_mix->add_option("--seed", mix_seed);
  corpus_mix->add_option("--out", mix_out)->required();
  corpus_mix->callback([&] {
    std::string domain_text = read_records_file(mix_domain);
    auto domain_lines = detail::record_lines(domain_text);
    auto general_lines = detail::record_lines(read_records_file(mix_general));
    auto mixed = mix_records(domain_lines, general_lines, mix_ratio, mix_seed);
    // carry the domain corpus format through
    std::string fmt = "corpus";
    int version = 1;
    auto first = split_lines(domain_text);
    if (!first.empty()) {
      nlohmann::json h = nlohmann::json::parse(first[0], nullptr, false);
      if (h.is_object() && h.contains("format")) {
        fmt = h.value("format", "corpus");
        version = h.value("version", 1);
      }
    }
    std::string out_text =
        nlohmann::json{
            {"format", fmt}, {"version", version}, {"records", mixed.size()}}
            .dump() +
        "\n";
    for (const auto& l : mixed) out_text += l + "\n";
    write_file(mix_out, out_text);
    std::cout << mixed.size() << " records -> " << mix_out << "\n";
  });

  std::string val_in, val_graph;
  auto* corpus_validate =
      corpus->add_subcommand("validate", "schema-check an SFT corpus");
  corpus_validate->add_option("--in", val_in)->required();
  corpus_validate->add_option("--graph", val_graph,
                              "companion graph for provenance checks");
  corpus_validate->callback([&] {
    CodeGraph graph;
    bool have_graph = !val_graph.empty();
    if (have_graph) graph = load_graph(val_graph);
    auto violations = validate_corpus(read_file(val_in),
                                      have_graph ? &graph : nullptr);
    for (const auto& v : violations)
      std::cout << val_in << ":" << v.line << ": " << v.message << "\n";
    if (!violations.empty())
      throw std::runtime_error(std::to_string(violations.size()) +
                               " corpus violation(s)");
    std::cout << "ok\n";
  });

  // ---- sft ----
  auto* sft = app.add_subcommand("sft", "graph-grounded SFT data builders");
  sft->require_subcommand(1);

  std::string rel_graph, rel_out;
  int rel_n1 = -1, rel_n2 = -1;
  std::uint64_t rel_seed = 0;
  bool rel_seed_set = false;
  auto* sft_rel = sft->add_subcommand("relation", "single-hop relation data");
  sft_rel->add_option("--graph", rel_graph)->required();
  sft_rel->add_option("--n1", rel_n1, "paraphrases per positive");
  sft_rel->add_option("--n2", rel_n2, "negatives per positive");
  sft_rel->add_option("--seed", rel_seed)->each([&](const std::string&) {
    rel_seed_set = true;
  });
  sft_rel->add_option("--out", rel_out)->required();
  sft_rel->callback([&] {
    PipelineConfig cfg = global.config();
    if (rel_n1 >= 0) cfg.relation.n1 = rel_n1;
    if (rel_n2 >= 0) cfg.relation.n2 = rel_n2;
    if (rel_seed_set) cfg.relation.seed = rel_seed;
    CodeGraph graph = load_graph(rel_graph);
    GatewayHandle gateway = make_gateway(cfg.gateway);
    auto positives = build_relation_samples(graph, cfg.relation);
    AugmentResult aug =
        augment_relations(positives, graph, gateway.get(), cfg.relation);
    std::vector<SftRecord> records;
    for (const auto& sample : aug.samples) {
      ContextBundle context = assemble_relation_context(sample, graph);
      std::vector<std::string> statements{sample.statement};
      statements.insert(statements.end(), sample.paraphrases.begin(),
                        sample.paraphrases.end());
      for (size_t i = 0; i < statements.size(); ++i)
        records.push_back(relation_record(sample, statements[i], context, i));
    }
    write_file(rel_out, serialize_sft_corpus(records));
    std::cout << records.size() << " records (" << aug.skipped.size()
              << " skipped) -> " << rel_out << "\n";
  });

  std::string comp_graph, comp_out, comp_formats, comp_difficulty,
      comp_verdicts;
  auto* sft_comp =
      sft->add_subcommand("composition", "compositional API reasoning data");
  sft_comp->add_option("--graph", comp_graph)->required();
  sft_comp->add_option("--formats", comp_formats, "qa,blank,prog");
  sft_comp->add_option("--difficulty", comp_difficulty, "range, e.g. 1..4");
  sft_comp->add_option("--out", comp_out)->required();
  sft_comp->add_option("--verdicts", comp_verdicts, "verdict log jsonl");
  sft_comp->callback([&] {
    PipelineConfig cfg = global.config();
    if (!comp_formats.empty()) {
      cfg.composition.formats.clear();
      for (auto& f : split(comp_formats, ','))
        cfg.composition.formats.push_back(task_format_from(trim(f)));
    }
    if (!comp_difficulty.empty()) {
      size_t dots = comp_difficulty.find("..");
      if (dots == std::string::npos)
        throw CLI::ValidationError("--difficulty expects lo..hi");
      cfg.composition.difficulty_min =
          std::stoi(comp_difficulty.substr(0, dots));
      cfg.composition.difficulty_max =
          std::stoi(comp_difficulty.substr(dots + 2));
    }
    cfg.validate();
    CodeGraph graph = load_graph(comp_graph);
    GatewayHandle gateway = make_gateway(cfg.gateway);
    MiningResult mined = mine_combinations(graph, cfg.test_matcher);
    std::vector<SftRecord> records;
    std::vector<FilterVerdict> verdicts;
    for (const auto& comb : mined.combinations) {
      TaskGenResult tasks =
          generate_tasks(graph, comb, cfg.composition, gateway.get());
      for (auto& v : tasks.skipped) verdicts.push_back(v);
      for (const auto& task : tasks.tasks) {
        FilterVerdict stage1 = rule_filter_stage1(graph, task);
        verdicts.push_back(stage1);
        if (stage1.pass) records.push_back(composition_record(task));
      }
    }
    write_file(comp_out, serialize_sft_corpus(records));
    if (!comp_verdicts.empty())
      write_file(comp_verdicts, serialize_verdicts(verdicts));
    std::cout << records.size() << " records -> " << comp_out << "\n";
  });

  std::string util_graph, util_repo, util_out, util_verdicts;
  auto* sft_util =
      sft->add_subcommand("utilization", "codebase utilization data");
  sft_util->add_option("--graph", util_graph, "graph file (built from --repo "
                                              "when omitted)");
  sft_util->add_option("--repo", util_repo, "repository root");
  sft_util->add_option("--out", util_out)->required();
  sft_util->add_option("--verdicts", util_verdicts, "verdict log jsonl");
  sft_util->callback([&] {
    PipelineConfig cfg = global.config();
    CodeGraph graph;
    if (!util_graph.empty())
      graph = load_graph(util_graph);
    else if (!util_repo.empty())
      graph = scan_repository(util_repo, cfg.frontend);
    else
      throw CLI::ValidationError("need --graph or --repo");
    GatewayHandle gateway = make_gateway(cfg.gateway);
    Sandbox sandbox(cfg.sandbox);
    MiningResult mined = mine_combinations(graph, cfg.test_matcher);
    std::vector<SftRecord> records;
    std::vector<FilterVerdict> verdicts;
    for (const auto& comb : mined.combinations) {
      DecomposeResult split =
          decompose_test(graph, comb, gateway.get(), cfg.utilization);
      verdicts.push_back(split.verdict);
      if (!split.sample) continue;
      RepairResult repaired =
          compile_and_repair(graph, *split.sample, sandbox, gateway.get(),
                             cfg.utilization.max_repair_iters);
      verdicts.push_back(repaired.verdict);
      if (!repaired.success) continue;
      FilterVerdict executed =
          execution_filter(graph, repaired.sample, sandbox);
      verdicts.push_back(executed);
      if (!executed.pass) continue;
      records.push_back(utilization_record(repaired.sample));
    }
    write_file(util_out, serialize_sft_corpus(records));
    if (!util_verdicts.empty())
      write_file(util_verdicts, serialize_verdicts(verdicts));
    std::cout << records.size() << " records -> " << util_out << "\n";
  });

  // ---- trace ----
  auto* trace = app.add_subcommand("trace", "reasoning-trace generation");
  trace->require_subcommand(1);
  std::string trace_in, trace_graph, trace_out, trace_verdicts;
  auto* trace_gen =
      trace->add_subcommand("generate", "rejection-sample traces per record");
  trace_gen->add_option("--in", trace_in)->required();
  trace_gen->add_option("--graph", trace_graph)->required();
  trace_gen->add_option("--out", trace_out)->required();
  trace_gen->add_option("--verdicts", trace_verdicts);
  trace_gen->callback([&] {
    PipelineConfig cfg = global.config();
    CodeGraph graph = load_graph(trace_graph);
    GatewayHandle gateway = make_gateway(cfg.gateway);
    Sandbox sandbox(cfg.sandbox);
    std::vector<SftRecord> records = load_sft_records(trace_in);
    std::vector<SftRecord> accepted;
    std::vector<FilterVerdict> verdicts;
    for (auto& rec : records) {
      FilterVerdict v = trace_record(rec, graph, gateway.get(), sandbox,
                                     cfg.gateway.max_attempts);
      verdicts.push_back(v);
      if (v.pass) accepted.push_back(rec);
    }
    write_file(trace_out, serialize_sft_corpus(accepted));
    if (!trace_verdicts.empty())
      write_file(trace_verdicts, serialize_verdicts(verdicts));
    std::cout << accepted.size() << "/" << records.size() << " traced -> "
              << trace_out << "\n";
  });

  // ---- filter ----
  auto* filter = app.add_subcommand("filter", "quality filters over corpora");
  filter->require_subcommand(1);
  std::string filt_in, filt_graph, filt_out, filt_stage = "rule",
              filt_verdicts;
  auto* filter_run = filter->add_subcommand("run", "apply one filter stage");
  filter_run->add_option("--in", filt_in)->required();
  filter_run->add_option("--graph", filt_graph)->required();
  filter_run->add_option("--stage", filt_stage, "rule|consistency|execution");
  filter_run->add_option("--out", filt_out)->required();
  filter_run->add_option("--verdicts", filt_verdicts);
  filter_run->callback([&] {
    PipelineConfig cfg = global.config();
    CodeGraph graph = load_graph(filt_graph);
    GatewayHandle gateway = make_gateway(cfg.gateway);
    Sandbox sandbox(cfg.sandbox);
    std::vector<SftRecord> records = load_sft_records(filt_in);
    std::vector<SftRecord> kept;
    std::vector<FilterVerdict> verdicts;
    for (const auto& rec : records) {
      FilterVerdict v =
          filter_record(rec, graph, gateway.get(), sandbox, filt_stage);
      verdicts.push_back(v);
      if (v.pass) kept.push_back(rec);
    }
    write_file(filt_out, serialize_sft_corpus(kept));
    if (!filt_verdicts.empty())
      write_file(filt_verdicts, serialize_verdicts(verdicts));
    std::cout << kept.size() << "/" << records.size() << " kept -> "
              << filt_out << "\n";
  });

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "execution-based metrics");
  eval->require_subcommand(1);
  std::string eval_tasks, eval_attempts, eval_metrics = "pass,compile";
  std::vector<int> eval_ks{1};
  bool eval_json = false;
  auto* eval_run = eval->add_subcommand("run", "run attempts, report metrics");
  eval_run->add_option("--tasks", eval_tasks, "task package directory")
      ->required();
  eval_run->add_option("--attempts", eval_attempts, "attempts jsonl")
      ->required();
  eval_run->add_option("--k", eval_ks, "k values (repeatable)");
  eval_run->add_option("--metric", eval_metrics, "pass,compile");
  eval_run->add_flag("--json", eval_json);
  eval_run->callback([&] {
    PipelineConfig cfg = global.config();
    Sandbox sandbox(cfg.sandbox);
    std::vector<ExecOutcome> outcomes;
    for (const auto& line : detail::record_lines(read_file(eval_attempts))) {
      nlohmann::json j = nlohmann::json::parse(line);
      std::string task_id = j.at("task_id");
      int attempt = j.value("attempt_index", 1);
      if (j.contains("compiled")) {  // pre-recorded outcome
        ExecOutcome o;
        o.task_id = task_id;
        o.attempt_index = attempt;
        o.compiled = j.value("compiled", false);
        o.tests_passed = j.value("tests_passed", false) && o.compiled;
        outcomes.push_back(o);
        continue;
      }
      fs::path task_dir = fs::path(eval_tasks) / task_id;
      if (!fs::is_directory(task_dir))
        throw std::runtime_error("no task package: " + task_dir.string());
      AttemptSpec spec;
      spec.task_id = task_id;
      spec.attempt_index = attempt;
      if (fs::exists(task_dir / "tests.py")) {
        spec.language = Language::Python;
        spec.tests = read_file(task_dir / "tests.py");
      } else {
        spec.language = Language::Cpp;
        spec.tests = read_file(task_dir / "tests.cpp");
      }
      spec.code = j.at("code");
      outcomes.push_back(sandbox.run_attempt(spec));
    }
    auto by_task = group_outcomes(outcomes);
    nlohmann::json out = nlohmann::json::object();
    for (auto& metric : split(eval_metrics, ',')) {
      std::string m = trim(metric);
      for (int k : eval_ks) {
        Fraction f = m == "compile" ? compilation_at_k(by_task, k)
                                    : pass_at_k(by_task, k);
        std::string name =
            (m == "compile" ? "compilation@" : "pass@") + std::to_string(k);
        out[name] = {{"fraction", f.str()}, {"value", f.value()}};
        if (!eval_json)
          std::cout << name << " = " << f.str() << " = " << std::fixed
                    << std::setprecision(4) << f.value() << "\n";
      }
    }
    if (eval_json) std::cout << out.dump(2) << "\n";
  });

  // ---- pipeline ----
  auto* pipe = app.add_subcommand("pipeline", "end-to-end corpus synthesis");
  pipe->require_subcommand(1);
  std::string pipe_repo, pipe_out;
  auto* pipe_run = pipe->add_subcommand("run", "run every stage");
  pipe_run->add_option("--repo", pipe_repo)->required();
  pipe_run->add_option("--out", pipe_out)->required();
  pipe_run->callback([&] {
    PipelineConfig cfg = global.config();
    RunReport report = run_pipeline(pipe_repo, cfg, pipe_out);
    std::cout << report.to_json().dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
