#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "forge/util.hpp"

#include "json.hpp"

namespace forge {

enum class EntityKind { File, Class, Function, Method, GlobalVariable };
enum class RelationKind { Dependency, Call, Include, Contain };
enum class Language { Cpp, Python };

inline std::string to_string(EntityKind k) {
  switch (k) {
    case EntityKind::File: return "file";
    case EntityKind::Class: return "class";
    case EntityKind::Function: return "function";
    case EntityKind::Method: return "method";
    case EntityKind::GlobalVariable: return "global-variable";
  }
  return "?";
}

inline EntityKind entity_kind_from(std::string_view s) {
  if (s == "file") return EntityKind::File;
  if (s == "class") return EntityKind::Class;
  if (s == "function") return EntityKind::Function;
  if (s == "method") return EntityKind::Method;
  if (s == "global-variable") return EntityKind::GlobalVariable;
  throw std::invalid_argument("unknown entity kind: " + std::string(s));
}

inline std::string to_string(RelationKind k) {
  switch (k) {
    case RelationKind::Dependency: return "dependency";
    case RelationKind::Call: return "call";
    case RelationKind::Include: return "include";
    case RelationKind::Contain: return "contain";
  }
  return "?";
}

inline RelationKind relation_kind_from(std::string_view s) {
  if (s == "dependency") return RelationKind::Dependency;
  if (s == "call") return RelationKind::Call;
  if (s == "include") return RelationKind::Include;
  if (s == "contain") return RelationKind::Contain;
  throw std::invalid_argument("unknown relation kind: " + std::string(s));
}

inline std::string to_string(Language l) {
  return l == Language::Cpp ? "cpp" : "python";
}

inline Language language_from(std::string_view s) {
  if (s == "cpp") return Language::Cpp;
  if (s == "python") return Language::Python;
  throw std::invalid_argument("unknown language: " + std::string(s));
}

struct Span {
  int start = 0;  // 1-based line numbers, start <= end
  int end = 0;
};

// A source location used as relation evidence.
struct Evidence {
  std::string file;
  int line = 0;
};

struct Signature {
  std::vector<std::string> params;  // parameter names, "*args"/"..." verbatim
  int min_args = 0;                 // required positional arguments
  int max_args = 0;                 // -1 when variadic
};

struct Entity {
  std::string id;        // content-addressed, see make_entity_id
  EntityKind kind = EntityKind::File;
  std::string name;      // qualified name, e.g. "Widget::resize"
  std::string file_path; // repository-relative
  Span span;
  std::optional<Signature> signature;  // present iff function or method
  std::string body_text;
};

struct Relation {
  std::string src;
  std::string dst;
  RelationKind kind = RelationKind::Call;
  Evidence evidence;
};

struct Diagnostic {
  std::string tag;   // e.g. "parse-failure", "builtin", "ambiguous-call"
  std::string file;
  int line = 0;
  std::string message;
};

// A call/reference site recorded by a frontend and not yet resolved to an
// edge. resolve_calls() consumes these.
struct CallSite {
  std::string caller_id;
  std::string callee_name;   // base name, no qualifiers
  std::string qualifier;     // "obj", "Ns::Cls", "" when unqualified
  bool scope_qualified = false;  // qualifier was "A::B", not a receiver
  int arg_count = 0;         // -1 for bare references (globals, types)
  Evidence where;
};

// Ids are digests of (kind, qualified name, file_path), so the same entity
// gets the same id on every run and on every platform.
inline std::string make_entity_id(EntityKind kind, std::string_view name,
                                  std::string_view file_path) {
  return Fnv1a64()
      .field(to_string(kind))
      .field(name)
      .field(file_path)
      .hex();
}

class CodeGraph {
 public:
  Language language = Language::Cpp;
  std::vector<Diagnostic> diagnostics;
  std::vector<CallSite> pending_call_sites;
  // Python import bindings (file -> alias -> target file). Transient scan
  // state, like pending_call_sites and diagnostics: not serialized.
  std::map<std::string, std::map<std::string, std::string>> import_aliases;

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Relation>& relations() const { return relations_; }

  const Entity* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entities_[it->second];
  }

  const Entity& at(std::string_view id) const {
    const Entity* e = find(id);
    if (!e) throw std::runtime_error("unknown entity id: " + std::string(id));
    return *e;
  }

  // Inserts an entity. On id collision (same kind+name+path, e.g. two
  // overloads of one function) the digest input is salted with an ordinal;
  // the visible name stays identical, so overload sets still share a name,
  // and ids stay deterministic (collisions are numbered in insertion order,
  // which is source order for a scan).
  const Entity& add_entity(Entity e) {
    if (e.id.empty()) e.id = make_entity_id(e.kind, e.name, e.file_path);
    int ordinal = 1;
    while (index_.count(e.id)) {
      ++ordinal;
      e.id = make_entity_id(e.kind,
                            e.name + "#" + std::to_string(ordinal),
                            e.file_path);
      if (ordinal > 4096)
        throw std::runtime_error("entity id space exhausted for " + e.name);
    }
    index_[e.id] = entities_.size();
    entities_.push_back(std::move(e));
    return entities_.back();
  }

  void add_relation(Relation r) {
    if (!index_.count(r.src) || !index_.count(r.dst))
      throw std::runtime_error("relation endpoint not in graph: " + r.src +
                               " -> " + r.dst);
    relations_.push_back(std::move(r));
  }

  // Every relation endpoint must resolve to an entity.
  bool check_referential_integrity(std::string* why = nullptr) const {
    for (const auto& r : relations_) {
      if (!index_.count(r.src) || !index_.count(r.dst)) {
        if (why) *why = "dangling relation " + r.src + " -> " + r.dst;
        return false;
      }
    }
    return true;
  }

  const Entity* find_file(std::string_view path) const {
    for (const auto& e : entities_)
      if (e.kind == EntityKind::File && e.file_path == path) return &e;
    return nullptr;
  }

  std::vector<const Entity*> entities_of_kind(EntityKind k) const {
    std::vector<const Entity*> out;
    for (const auto& e : entities_)
      if (e.kind == k) out.push_back(&e);
    return out;
  }

  // Parent in the contain forest, or nullptr for files and orphans.
  const Entity* container_of(std::string_view id) const {
    for (const auto& r : relations_)
      if (r.kind == RelationKind::Contain && r.dst == id) return find(r.src);
    return nullptr;
  }

  // Digest over all entity bodies, in id order; fixed algorithm (FNV-1a 64)
  // so hashes are bit-exact across platforms.
  std::string content_hash() const {
    std::vector<const Entity*> sorted;
    sorted.reserve(entities_.size());
    for (const auto& e : entities_) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const Entity* a, const Entity* b) { return a->id < b->id; });
    Fnv1a64 h;
    for (const Entity* e : sorted) h.field(e->id).field(e->body_text);
    return h.hex();
  }

  // Deterministic order helper: entities sorted by (file, span.start, id).
  std::vector<const Entity*> entities_in_source_order() const {
    std::vector<const Entity*> out;
    for (const auto& e : entities_) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const Entity* a, const Entity* b) {
      if (a->file_path != b->file_path) return a->file_path < b->file_path;
      if (a->span.start != b->span.start) return a->span.start < b->span.start;
      return a->id < b->id;
    });
    return out;
  }

 private:
  std::vector<Entity> entities_;
  std::vector<Relation> relations_;
  std::unordered_map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// File DAG: the file-level dependency view used by the CPT builder.
// ---------------------------------------------------------------------------

struct FileDagNode {
  std::vector<std::string> paths;       // sorted; >1 after SCC condensation
  std::vector<std::string> entity_ids;  // file entity ids, aligned with paths
  std::string label() const { return join(paths, "+"); }
};

struct FileDag {
  std::vector<FileDagNode> nodes;
  std::vector<std::vector<int>> adj;  // sorted, deduplicated successor lists

  size_t node_count() const { return nodes.size(); }

  size_t edge_count() const {
    size_t n = 0;
    for (const auto& a : adj) n += a.size();
    return n;
  }

  std::vector<int> in_degree() const {
    std::vector<int> deg(nodes.size(), 0);
    for (const auto& a : adj)
      for (int v : a) ++deg[static_cast<size_t>(v)];
    return deg;
  }

  // Kahn's algorithm; nullopt when the graph has a cycle.
  std::optional<std::vector<int>> topological_order() const {
    std::vector<int> deg = in_degree();
    std::vector<int> queue, order;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (deg[i] == 0) queue.push_back(static_cast<int>(i));
    // Smallest-index first keeps the order deterministic.
    std::sort(queue.begin(), queue.end(), std::greater<int>());
    while (!queue.empty()) {
      int u = queue.back();
      queue.pop_back();
      order.push_back(u);
      for (int v : adj[static_cast<size_t>(u)]) {
        if (--deg[static_cast<size_t>(v)] == 0) {
          queue.push_back(v);
          std::sort(queue.begin(), queue.end(), std::greater<int>());
        }
      }
    }
    if (order.size() != nodes.size()) return std::nullopt;
    return order;
  }

  bool is_acyclic() const { return topological_order().has_value(); }
};

// Restricts the graph to file entities and dependency/include edges.
// Parallel duplicate edges collapse to one. Node order is path-lexicographic.
inline FileDag file_dependency_subgraph(const CodeGraph& graph) {
  std::string why;
  if (!graph.check_referential_integrity(&why))
    throw std::runtime_error("graph integrity violation: " + why);

  FileDag dag;
  std::map<std::string, int> node_of;  // path -> index, ordered
  std::vector<const Entity*> files = graph.entities_of_kind(EntityKind::File);
  std::sort(files.begin(), files.end(), [](const Entity* a, const Entity* b) {
    return a->file_path < b->file_path;
  });
  for (const Entity* f : files) {
    node_of[f->file_path] = static_cast<int>(dag.nodes.size());
    dag.nodes.push_back({{f->file_path}, {f->id}});
  }
  dag.adj.assign(dag.nodes.size(), {});

  std::set<std::pair<int, int>> seen;
  for (const auto& r : graph.relations()) {
    if (r.kind != RelationKind::Dependency && r.kind != RelationKind::Include)
      continue;
    const Entity& s = graph.at(r.src);
    const Entity& d = graph.at(r.dst);
    if (s.kind != EntityKind::File || d.kind != EntityKind::File)
      throw std::runtime_error("file-level relation with non-file endpoint: " +
                               s.name + " -> " + d.name);
    int u = node_of.at(s.file_path);
    int v = node_of.at(d.file_path);
    if (seen.insert({u, v}).second) dag.adj[static_cast<size_t>(u)].push_back(v);
  }
  for (auto& a : dag.adj) std::sort(a.begin(), a.end());
  return dag;
}

// Collapses strongly connected components into single merged nodes. Member
// files are kept in path-lexicographic order inside the merged node, so a
// mutual-dependency cluster still lands in one CPT unit. Output is acyclic
// with no self loops.
inline FileDag condense_file_dag(const FileDag& dag) {
  const size_t n = dag.node_count();

  // Tarjan SCC, iterative to survive deep include chains.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0, comp_count = 0;

  struct Frame {
    int v;
    size_t child;
  };
  for (size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> frames{{static_cast<int>(root), 0}};
    while (!frames.empty()) {
      Frame& f = frames.back();
      size_t v = static_cast<size_t>(f.v);
      if (f.child == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(f.v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (f.child < dag.adj[v].size()) {
        int w = dag.adj[v][f.child++];
        if (index[static_cast<size_t>(w)] == -1) {
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[static_cast<size_t>(w)])
          low[v] = std::min(low[v], index[static_cast<size_t>(w)]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on_stack[static_cast<size_t>(w)] = false;
          comp[static_cast<size_t>(w)] = comp_count;
          if (w == f.v) break;
        }
        ++comp_count;
      }
      int finished = f.v;
      frames.pop_back();
      if (!frames.empty()) {
        size_t p = static_cast<size_t>(frames.back().v);
        low[p] = std::min(low[p], low[static_cast<size_t>(finished)]);
      }
    }
  }

  // Gather members per component, then order components by smallest path.
  std::vector<std::vector<int>> members(static_cast<size_t>(comp_count));
  for (size_t v = 0; v < n; ++v)
    members[static_cast<size_t>(comp[v])].push_back(static_cast<int>(v));

  std::vector<int> comp_order(static_cast<size_t>(comp_count));
  for (int c = 0; c < comp_count; ++c) comp_order[static_cast<size_t>(c)] = c;
  auto comp_key = [&](int c) -> const std::string& {
    int best = members[static_cast<size_t>(c)][0];
    for (int v : members[static_cast<size_t>(c)])
      if (dag.nodes[static_cast<size_t>(v)].paths[0] <
          dag.nodes[static_cast<size_t>(best)].paths[0])
        best = v;
    return dag.nodes[static_cast<size_t>(best)].paths[0];
  };
  std::sort(comp_order.begin(), comp_order.end(),
            [&](int a, int b) { return comp_key(a) < comp_key(b); });

  std::vector<int> new_id(static_cast<size_t>(comp_count));
  for (size_t i = 0; i < comp_order.size(); ++i)
    new_id[static_cast<size_t>(comp_order[i])] = static_cast<int>(i);

  FileDag out;
  out.nodes.resize(static_cast<size_t>(comp_count));
  out.adj.assign(static_cast<size_t>(comp_count), {});
  for (int c = 0; c < comp_count; ++c) {
    FileDagNode merged;
    std::vector<std::pair<std::string, std::string>> entries;
    for (int v : members[static_cast<size_t>(c)]) {
      const auto& node = dag.nodes[static_cast<size_t>(v)];
      for (size_t i = 0; i < node.paths.size(); ++i)
        entries.emplace_back(node.paths[i], node.entity_ids[i]);
    }
    std::sort(entries.begin(), entries.end());
    for (auto& [p, id] : entries) {
      merged.paths.push_back(p);
      merged.entity_ids.push_back(id);
    }
    out.nodes[static_cast<size_t>(new_id[static_cast<size_t>(c)])] =
        std::move(merged);
  }
  std::set<std::pair<int, int>> seen;
  for (size_t u = 0; u < n; ++u) {
    for (int v : dag.adj[u]) {
      int cu = new_id[static_cast<size_t>(comp[u])];
      int cv = new_id[static_cast<size_t>(comp[static_cast<size_t>(v)])];
      if (cu == cv) continue;  // internal or self edge, dropped
      if (seen.insert({cu, cv}).second)
        out.adj[static_cast<size_t>(cu)].push_back(cv);
    }
  }
  for (auto& a : out.adj) std::sort(a.begin(), a.end());
  return out;
}

// ---------------------------------------------------------------------------
// Dependency closure.
// ---------------------------------------------------------------------------

struct ClosureEntry {
  std::string id;
  std::string enclosing;  // non-file contain chain, "::"-joined; may be empty
};

// Chain of non-file containers for an entity, outermost first.
inline std::string enclosing_of(const CodeGraph& graph, const std::string& id) {
  std::vector<std::string> chain;
  const Entity* cur = graph.container_of(id);
  while (cur && cur->kind != EntityKind::File) {
    chain.push_back(cur->name);
    cur = graph.container_of(cur->id);
  }
  std::reverse(chain.begin(), chain.end());
  return join(chain, "::");
}

// Transitive closure over call edges (which also carry type and global
// references) starting at `root_id`. The root itself is included. Reaching a
// class also follows the calls made by its contained members, since using
// the class executes them. Result is sorted by (file, start line, id) for
// deterministic downstream output.
inline std::vector<ClosureEntry> dependency_closure(const CodeGraph& graph,
                                                    const std::string& root_id) {
  if (!graph.find(root_id))
    throw std::runtime_error("dependency_closure: unknown root entity " +
                             root_id);
  std::unordered_map<std::string, std::vector<std::string>> out_calls;
  std::unordered_map<std::string, std::vector<std::string>> contained;
  for (const auto& r : graph.relations()) {
    if (r.kind == RelationKind::Call) out_calls[r.src].push_back(r.dst);
    if (r.kind == RelationKind::Contain &&
        graph.at(r.src).kind != EntityKind::File)
      contained[r.src].push_back(r.dst);
  }

  std::set<std::string> visited{root_id};
  std::vector<std::string> frontier{root_id};
  std::set<std::string> member_scanned;
  while (!frontier.empty()) {
    std::string cur = frontier.back();
    frontier.pop_back();
    auto push_targets = [&](const std::string& id) {
      auto it = out_calls.find(id);
      if (it == out_calls.end()) return;
      for (const auto& next : it->second)
        if (visited.insert(next).second) frontier.push_back(next);
    };
    push_targets(cur);
    if (graph.at(cur).kind == EntityKind::Class) {
      // members' dependencies, without adding the members themselves
      std::vector<std::string> stack{cur};
      while (!stack.empty()) {
        std::string c = stack.back();
        stack.pop_back();
        if (!member_scanned.insert(c).second) continue;
        auto mit = contained.find(c);
        if (mit == contained.end()) continue;
        for (const auto& member : mit->second) {
          push_targets(member);
          stack.push_back(member);
        }
      }
    }
  }

  std::vector<const Entity*> ordered;
  for (const auto& id : visited) ordered.push_back(&graph.at(id));
  std::sort(ordered.begin(), ordered.end(),
            [](const Entity* a, const Entity* b) {
              if (a->file_path != b->file_path)
                return a->file_path < b->file_path;
              if (a->span.start != b->span.start)
                return a->span.start < b->span.start;
              return a->id < b->id;
            });
  std::vector<ClosureEntry> result;
  result.reserve(ordered.size());
  for (const Entity* e : ordered)
    result.push_back({e->id, enclosing_of(graph, e->id)});
  return result;
}

// ---------------------------------------------------------------------------
// Statistics.
// ---------------------------------------------------------------------------

struct StatsReport {
  std::int64_t files = 0;
  std::int64_t lines_of_code = 0;
  std::int64_t classes = 0;
  std::int64_t functions = 0;  // functions + methods
  std::int64_t globals = 0;
  std::int64_t file_dependency_edges = 0;  // deduplicated
  double avg_file_dependencies = 0.0;      // mean FileDag out-degree
  double avg_function_dependencies = 0.0;  // mean |closure| - 1
  std::map<std::string, std::int64_t> relations_by_kind;
};

inline StatsReport graph_stats(const CodeGraph& graph) {
  StatsReport rep;
  for (const auto& e : graph.entities()) {
    switch (e.kind) {
      case EntityKind::File:
        ++rep.files;
        rep.lines_of_code += count_lines(e.body_text);
        break;
      case EntityKind::Class: ++rep.classes; break;
      case EntityKind::Function:
      case EntityKind::Method: ++rep.functions; break;
      case EntityKind::GlobalVariable: ++rep.globals; break;
    }
  }
  for (const auto& r : graph.relations())
    ++rep.relations_by_kind[to_string(r.kind)];

  FileDag dag = file_dependency_subgraph(graph);
  rep.file_dependency_edges = static_cast<std::int64_t>(dag.edge_count());
  if (rep.files > 0)
    rep.avg_file_dependencies =
        static_cast<double>(rep.file_dependency_edges) /
        static_cast<double>(rep.files);

  std::int64_t closure_sum = 0, fn_count = 0;
  for (const auto& e : graph.entities()) {
    if (e.kind != EntityKind::Function && e.kind != EntityKind::Method)
      continue;
    ++fn_count;
    closure_sum +=
        static_cast<std::int64_t>(dependency_closure(graph, e.id).size()) - 1;
  }
  if (fn_count > 0)
    rep.avg_function_dependencies =
        static_cast<double>(closure_sum) / static_cast<double>(fn_count);
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization: line-delimited records with a versioned header line.
//
//   {"format":"codegraph","version":1,"language":...,"content_hash":...}
//   {"t":"entity","id":...,"kind":...,"name":...,"file":...,
//    "start":N,"end":N,"body":...[,"params":[...]]}
//   {"t":"relation","src":...,"dst":...,"kind":...,"file":...,"line":N}
//
// "params" is present exactly when the entity is a function or method.
// ---------------------------------------------------------------------------

inline constexpr int kGraphFormatVersion = 1;

inline std::string serialize_graph(const CodeGraph& graph) {
  using nlohmann::json;
  std::string out;
  json header{{"format", "codegraph"},
              {"version", kGraphFormatVersion},
              {"language", to_string(graph.language)},
              {"content_hash", graph.content_hash()},
              {"entities", graph.entities().size()},
              {"relations", graph.relations().size()}};
  out += header.dump();
  out += '\n';
  for (const auto& e : graph.entities()) {
    json j{{"t", "entity"},      {"id", e.id},
           {"kind", to_string(e.kind)}, {"name", e.name},
           {"file", e.file_path},      {"start", e.span.start},
           {"end", e.span.end},        {"body", e.body_text}};
    if (e.signature) {
      j["params"] = e.signature->params;
      j["min_args"] = e.signature->min_args;
      j["max_args"] = e.signature->max_args;
    }
    out += j.dump();
    out += '\n';
  }
  for (const auto& r : graph.relations()) {
    json j{{"t", "relation"},          {"src", r.src},
           {"dst", r.dst},             {"kind", to_string(r.kind)},
           {"file", r.evidence.file},  {"line", r.evidence.line}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline CodeGraph deserialize_graph(const std::string& text) {
  using nlohmann::json;
  CodeGraph graph;
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw std::runtime_error("empty graph file");
  json header = json::parse(lines[0]);
  if (header.value("format", "") != "codegraph")
    throw std::runtime_error("not a codegraph file");
  if (header.value("version", 0) != kGraphFormatVersion)
    throw std::runtime_error("unsupported codegraph version");
  graph.language = language_from(header.value("language", "cpp"));

  std::vector<Relation> pending;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i]);
    std::string t = j.value("t", "");
    if (t == "entity") {
      Entity e;
      e.id = j.at("id");
      e.kind = entity_kind_from(j.at("kind").get<std::string>());
      e.name = j.at("name");
      e.file_path = j.at("file");
      e.span = {j.at("start").get<int>(), j.at("end").get<int>()};
      e.body_text = j.at("body");
      if (j.contains("params")) {
        Signature sig;
        sig.params = j.at("params").get<std::vector<std::string>>();
        sig.min_args = j.value("min_args", 0);
        sig.max_args = j.value("max_args", 0);
        e.signature = std::move(sig);
      }
      graph.add_entity(std::move(e));
    } else if (t == "relation") {
      Relation r;
      r.src = j.at("src");
      r.dst = j.at("dst");
      r.kind = relation_kind_from(j.at("kind").get<std::string>());
      r.evidence = {j.value("file", ""), j.value("line", 0)};
      pending.push_back(std::move(r));
    } else {
      throw std::runtime_error("unknown record type in graph file: " + t);
    }
  }
  for (auto& r : pending) graph.add_relation(std::move(r));
  std::string declared = header.value("content_hash", "");
  if (!declared.empty() && declared != graph.content_hash())
    throw std::runtime_error("graph content hash mismatch");
  return graph;
}

inline void save_graph(const CodeGraph& graph,
                       const std::filesystem::path& path) {
  write_file(path, serialize_graph(graph));
}

inline CodeGraph load_graph(const std::filesystem::path& path) {
  return deserialize_graph(read_file(path));
}

}  // namespace forge
