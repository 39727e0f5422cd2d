#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "forge/context.hpp"
#include "forge/graph.hpp"

#include "json.hpp"

namespace forge {

// Namespace chain of an entity: the qualified-name prefix that is not
// accounted for by enclosing classes. "calc::Registry::record" inside class
// "calc::Registry" has namespace "calc".
inline std::string namespace_of(const CodeGraph& graph, const Entity& e) {
  if (graph.language == Language::Python) return "";
  std::string outermost = e.name;
  const Entity* cur = graph.container_of(e.id);
  while (cur && cur->kind != EntityKind::File) {
    outermost = cur->name;
    cur = graph.container_of(cur->id);
  }
  size_t pos = outermost.rfind("::");
  return pos == std::string::npos ? "" : outermost.substr(0, pos);
}

// Orders closure entities for textual assembly: dependencies first (reverse
// topological file order), source order within a file. Entities whose
// enclosing class is itself in the set are dropped (the class body already
// contains them).
inline std::vector<const Entity*> order_for_assembly(
    const CodeGraph& graph, const std::vector<std::string>& ids) {
  std::set<std::string> id_set(ids.begin(), ids.end());

  FileDag dag = condense_file_dag(file_dependency_subgraph(graph));
  std::map<std::string, int> file_rank;
  if (auto order = dag.topological_order()) {
    // topological order lists dependents first; assembly wants dependencies
    // first, so rank runs backwards
    int rank = 0;
    for (auto it = order->rbegin(); it != order->rend(); ++it)
      for (const auto& p : dag.nodes[static_cast<size_t>(*it)].paths)
        file_rank[p] = rank++;
  }

  std::vector<const Entity*> picked;
  for (const auto& id : ids) {
    const Entity& e = graph.at(id);
    if (e.kind == EntityKind::File) continue;
    // drop entities whose text is physically inside an included class body;
    // out-of-line member definitions still need their own emission
    bool inside_included_class = false;
    const Entity* cur = graph.container_of(e.id);
    while (cur && cur->kind != EntityKind::File) {
      if (cur->kind == EntityKind::Class && id_set.count(cur->id) &&
          cur->file_path == e.file_path && cur->span.start <= e.span.start &&
          e.span.end <= cur->span.end) {
        inside_included_class = true;
        break;
      }
      cur = graph.container_of(cur->id);
    }
    if (!inside_included_class) picked.push_back(&e);
  }
  std::sort(picked.begin(), picked.end(),
            [&](const Entity* a, const Entity* b) {
              int ra = file_rank.count(a->file_path)
                           ? file_rank.at(a->file_path)
                           : 1 << 30;
              int rb = file_rank.count(b->file_path)
                           ? file_rank.at(b->file_path)
                           : 1 << 30;
              if (ra != rb) return ra < rb;
              if (a->span.start != b->span.start)
                return a->span.start < b->span.start;
              return a->id < b->id;
            });
  return picked;
}

// Dependency-closure context for prompts: every entity's implementation with
// its file location and enclosing scope.
inline ContextBundle closure_context_bundle(const CodeGraph& graph,
                                            const std::vector<std::string>& ids) {
  ContextBundle bundle;
  bundle.kind = ContextKind::DependencyClosureCode;
  for (const Entity* e : order_for_assembly(graph, ids)) {
    std::string enclosing = enclosing_of(graph, e->id);
    std::string label = e->file_path + ":" + std::to_string(e->span.start) +
                        "-" + std::to_string(e->span.end);
    if (!enclosing.empty()) label += " in " + enclosing;
    label += " " + to_string(e->kind) + " " + e->name;
    bundle.items.push_back({label, e->body_text});
  }
  return bundle;
}

// Machine-readable API inventory embedded into task-design prompts.
inline std::string api_signatures_json(const CodeGraph& graph,
                                       const std::vector<std::string>& api_ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& id : api_ids) {
    const Entity& e = graph.at(id);
    std::string base = e.name;
    size_t pos = graph.language == Language::Cpp ? base.rfind("::")
                                                 : base.rfind('.');
    if (pos != std::string::npos)
      base = base.substr(pos + (graph.language == Language::Cpp ? 2 : 1));
    nlohmann::json item{{"id", e.id},
                        {"name", base},
                        {"qualified", e.name},
                        {"kind", to_string(e.kind)}};
    if (e.signature) {
      item["arity"] = e.signature->min_args;
      item["params"] = e.signature->params;
    } else {
      item["arity"] = 0;
    }
    arr.push_back(item);
  }
  return arr.dump();
}

// Flattens closure code into one compilable unit: a fixed prelude of common
// standard headers, then each entity body (namespace-wrapped for C++) in
// dependency order.
inline std::string compilable_unit(const CodeGraph& graph,
                                   const std::vector<std::string>& ids) {
  std::string out;
  if (graph.language == Language::Cpp) {
    out += "#include <cassert>\n#include <cmath>\n#include <cstdint>\n"
           "#include <cstdio>\n#include <cstdlib>\n#include <string>\n"
           "#include <vector>\n\n";
  }
  for (const Entity* e : order_for_assembly(graph, ids)) {
    std::string ns = namespace_of(graph, *e);
    if (!ns.empty()) out += "namespace " + ns + " {\n";
    out += e->body_text;
    if (!ends_with(e->body_text, "\n")) out += "\n";
    if (!ns.empty()) out += "}\n";
    out += "\n";
  }
  return out;
}

}  // namespace forge
