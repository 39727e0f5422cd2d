// Walkthrough: scan a tiny generated repository, query the graph, emit a
// CPT corpus and one relation sample with the offline stub gateway.

#include <filesystem>
#include <iostream>

#include "forge/cpt.hpp"
#include "forge/frontend.hpp"
#include "forge/sft_relation.hpp"

namespace fs = std::filesystem;
using namespace forge;

int main() {
  fs::path repo = fs::temp_directory_path() / "forge_demo_repo";
  fs::remove_all(repo);
  fs::create_directories(repo);
  write_file(repo / "geometry.hpp",
             "#pragma once\n"
             "namespace demo {\n"
             "const double kPi = 3.14159;\n"
             "inline double circle_area(double r) { return kPi * r * r; }\n"
             "}\n");
  write_file(repo / "report.cpp",
             "#include \"geometry.hpp\"\n"
             "#include <cstdio>\n"
             "namespace demo {\n"
             "void print_area(double r) { std::printf(\"%f\\n\", "
             "circle_area(r)); }\n"
             "}\n");

  FrontendConfig cfg;
  cfg.language = Language::Cpp;
  CodeGraph graph = scan_repository(repo, cfg);

  std::cout << "entities:\n";
  for (const auto& e : graph.entities())
    std::cout << "  " << to_string(e.kind) << "  " << e.name << "  ("
              << e.file_path << ":" << e.span.start << "-" << e.span.end
              << ")\n";
  std::cout << "relations:\n";
  for (const auto& r : graph.relations())
    std::cout << "  " << graph.at(r.src).name << " --"
              << to_string(r.kind) << "--> " << graph.at(r.dst).name << "\n";

  StatsReport stats = graph_stats(graph);
  std::cout << "files=" << stats.files << " loc=" << stats.lines_of_code
            << " avg_fld=" << stats.avg_file_dependencies << "\n";

  // closure of print_area pulls in circle_area and kPi
  for (const auto& e : graph.entities()) {
    if (e.name != "demo::print_area") continue;
    std::cout << "closure of demo::print_area:\n";
    for (const auto& entry : dependency_closure(graph, e.id))
      std::cout << "  " << graph.at(entry.id).name << "\n";
  }

  CptConfig cpt_cfg;
  cpt_cfg.context_limit = 512;
  auto corpus = build_cpt_corpus(graph, cpt_cfg);
  std::cout << "cpt samples: " << corpus.size() << "\n";
  if (!corpus.empty())
    std::cout << "first sample order: " << join(corpus[0].file_sequence, " -> ")
              << "\n";

  StubGateway gateway;
  RelationConfig rel_cfg;
  rel_cfg.n1 = 2;
  rel_cfg.n2 = 1;
  rel_cfg.per_kind_cap = 1;
  auto positives = build_relation_samples(graph, rel_cfg);
  AugmentResult augmented =
      augment_relations(positives, graph, gateway, rel_cfg);
  std::cout << "relation samples (with paraphrases and negatives): "
            << augmented.samples.size() << "\n";
  for (const auto& s : augmented.samples)
    std::cout << "  [" << to_string(s.polarity) << "] " << s.statement << "\n";

  fs::remove_all(repo);
  return 0;
}
