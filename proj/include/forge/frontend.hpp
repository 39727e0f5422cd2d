#pragma once

#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/builtins.hpp"
#include "forge/frontend_cpp.hpp"
#include "forge/frontend_python.hpp"
#include "forge/graph.hpp"

namespace forge {

struct FrontendConfig {
  Language language = Language::Cpp;
  std::vector<std::string> include_roots{"."};  // repo-relative, non-empty
  std::vector<std::string> exclude_globs;
  bool follow_symlinks = false;

  void validate() const {
    if (include_roots.empty())
      throw std::invalid_argument("FrontendConfig: include_roots empty");
    for (const auto& g : exclude_globs) glob_to_regex(g);  // throws if bad
  }
};

namespace detail {

inline bool has_source_extension(Language lang, const std::string& path) {
  static const std::vector<std::string> cpp_ext = {
      ".cpp", ".cc", ".cxx", ".hpp", ".hh", ".hxx", ".h", ".ipp"};
  static const std::vector<std::string> py_ext = {".py"};
  const auto& exts = lang == Language::Cpp ? cpp_ext : py_ext;
  for (const auto& e : exts)
    if (ends_with(path, e)) return true;
  return false;
}

inline std::string dir_of(const std::string& path) {
  size_t slash = path.rfind('/');
  return slash == std::string::npos ? "" : path.substr(0, slash);
}

// Resolves a dotted Python module name to a repo file, or "" when it is not
// part of the repository.
inline std::string resolve_py_module(const std::string& dotted,
                                     const std::string& importer,
                                     const std::vector<std::string>& roots,
                                     const std::set<std::string>& files) {
  auto probe = [&](const std::string& base) -> std::string {
    if (files.count(base + ".py")) return base + ".py";
    if (files.count(base + "/__init__.py")) return base + "/__init__.py";
    return "";
  };
  size_t dots = 0;
  while (dots < dotted.size() && dotted[dots] == '.') ++dots;
  std::string rest = dotted.substr(dots);
  std::string rest_path = rest;
  std::replace(rest_path.begin(), rest_path.end(), '.', '/');
  if (dots > 0) {
    std::string base = dir_of(importer);
    for (size_t i = 1; i < dots; ++i) base = dir_of(base);
    std::string full = rest_path.empty()
                           ? base
                           : (base.empty() ? rest_path : base + "/" + rest_path);
    full = lexical_resolve(full);
    if (rest_path.empty()) {
      if (files.count(full + "/__init__.py")) return full + "/__init__.py";
      return "";
    }
    return probe(full);
  }
  for (const auto& root : roots) {
    std::string base = (root == "." || root.empty())
                           ? rest_path
                           : lexical_resolve(root + "/" + rest_path);
    std::string hit = probe(base);
    if (!hit.empty()) return hit;
  }
  return "";
}

}  // namespace detail

// Adds call edges for the graph's pending call sites. Resolution is by name
// and arity, scoped (a) same file, (b) included/imported files, (c) unique
// global match; overload sets within a scope produce edges to every
// arity-compatible candidate. Unresolved and builtin calls become
// diagnostics, never edges.
inline void resolve_calls(CodeGraph& graph) {
  const Language lang = graph.language;

  auto base_name = [&](const std::string& qualified) {
    size_t pos = lang == Language::Cpp ? qualified.rfind("::")
                                       : qualified.rfind('.');
    if (pos == std::string::npos) return qualified;
    return qualified.substr(pos + (lang == Language::Cpp ? 2 : 1));
  };

  std::unordered_map<std::string, std::vector<const Entity*>> by_base;
  for (const auto& e : graph.entities()) {
    if (e.kind == EntityKind::File) continue;
    by_base[base_name(e.name)].push_back(&e);
  }

  // file -> reachable files through include/dependency edges.
  // Transitive for C++ (textual inclusion), direct for Python imports.
  std::unordered_map<std::string, std::set<std::string>> reachable;
  std::unordered_map<std::string, std::vector<std::string>> file_deps;
  for (const auto& r : graph.relations()) {
    if (r.kind != RelationKind::Include && r.kind != RelationKind::Dependency)
      continue;
    file_deps[graph.at(r.src).file_path].push_back(graph.at(r.dst).file_path);
  }
  for (const auto& [file, deps] : file_deps) {
    std::set<std::string>& out = reachable[file];
    if (lang == Language::Python) {
      out.insert(deps.begin(), deps.end());
      continue;
    }
    std::vector<std::string> frontier(deps.begin(), deps.end());
    while (!frontier.empty()) {
      std::string cur = frontier.back();
      frontier.pop_back();
      if (!out.insert(cur).second) continue;
      auto it = file_deps.find(cur);
      if (it != file_deps.end())
        for (const auto& next : it->second) frontier.push_back(next);
    }
  }

  // enclosing class of an entity, for self./this-> resolution
  auto enclosing_class = [&](const std::string& id) -> const Entity* {
    const Entity* cur = graph.container_of(id);
    while (cur && cur->kind != EntityKind::File) {
      if (cur->kind == EntityKind::Class) return cur;
      cur = graph.container_of(cur->id);
    }
    return nullptr;
  };

  std::set<std::tuple<std::string, std::string, int>> edge_seen;
  std::vector<CallSite> sites = std::move(graph.pending_call_sites);
  graph.pending_call_sites.clear();

  for (const auto& site : sites) {
    const Entity* caller = graph.find(site.caller_id);
    if (!caller) continue;
    const bool is_ref = site.arg_count < 0;

    auto kind_ok = [&](const Entity* e) {
      if (is_ref)
        return e->kind == EntityKind::GlobalVariable ||
               e->kind == EntityKind::Class;
      return e->kind == EntityKind::Function ||
             e->kind == EntityKind::Method || e->kind == EntityKind::Class;
    };
    auto arity_ok = [&](const Entity* e) {
      if (is_ref || !e->signature) return true;
      const Signature& s = *e->signature;
      if (site.arg_count < s.min_args) return false;
      return s.max_args == -1 || site.arg_count <= s.max_args;
    };

    std::vector<const Entity*> pool;
    auto it = by_base.find(site.callee_name);
    if (it != by_base.end())
      for (const Entity* e : it->second)
        if (kind_ok(e) && arity_ok(e) && e->id != site.caller_id)
          pool.push_back(e);

    // qualifier narrowing
    const std::string& q = site.qualifier;
    bool scope_qualified = !q.empty() && site.scope_qualified;
    if (!q.empty()) {
      if (lang == Language::Python && (q == "self" || q == "cls")) {
        const Entity* cls = enclosing_class(site.caller_id);
        if (cls) {
          std::vector<const Entity*> narrowed;
          for (const Entity* e : pool)
            if (e->kind == EntityKind::Method &&
                starts_with(e->name, cls->name + "."))
              narrowed.push_back(e);
          if (!narrowed.empty()) pool = std::move(narrowed);
        }
      } else if (lang == Language::Python) {
        auto file_it = graph.import_aliases.find(caller->file_path);
        std::string head = split(q, '.')[0];
        if (file_it != graph.import_aliases.end() &&
            file_it->second.count(head)) {
          const std::string& target = file_it->second.at(head);
          std::vector<const Entity*> narrowed;
          for (const Entity* e : pool)
            if (e->file_path == target) narrowed.push_back(e);
          pool = std::move(narrowed);
        } else {
          // receiver of unknown type: methods only
          std::vector<const Entity*> narrowed;
          for (const Entity* e : pool)
            if (e->kind == EntityKind::Method) narrowed.push_back(e);
          pool = std::move(narrowed);
        }
      } else if (scope_qualified) {
        std::vector<const Entity*> narrowed;
        std::string suffix = q + "::" + site.callee_name;
        for (const Entity* e : pool)
          if (e->name == suffix || ends_with(e->name, "::" + suffix))
            narrowed.push_back(e);
        pool = std::move(narrowed);
      } else {
        // obj./obj-> receiver
        std::vector<const Entity*> narrowed;
        for (const Entity* e : pool)
          if (e->kind == EntityKind::Method) narrowed.push_back(e);
        pool = std::move(narrowed);
      }
    }

    // A constructor call matches both the class and its constructor method;
    // keep the class node (it carries the whole definition).
    if (!is_ref) {
      std::set<std::string> class_names;
      for (const Entity* e : pool)
        if (e->kind == EntityKind::Class) class_names.insert(e->name);
      if (!class_names.empty()) {
        std::vector<const Entity*> kept;
        for (const Entity* e : pool) {
          bool ctor_of_present_class =
              e->kind == EntityKind::Method &&
              class_names.count(e->name.substr(
                  0, e->name.size() > site.callee_name.size() + 2
                         ? e->name.size() - site.callee_name.size() - 2
                         : 0));
          if (!ctor_of_present_class) kept.push_back(e);
        }
        pool = std::move(kept);
      }
    }

    auto emit = [&](const std::vector<const Entity*>& targets) {
      for (const Entity* e : targets) {
        auto key = std::make_tuple(site.caller_id + "|" + e->id,
                                   to_string(RelationKind::Call),
                                   site.where.line);
        if (!edge_seen.insert(key).second) continue;
        graph.add_relation(
            {site.caller_id, e->id, RelationKind::Call, site.where});
      }
    };

    std::vector<const Entity*> tier_a, tier_b;
    const std::set<std::string>* reach = nullptr;
    auto rit = reachable.find(caller->file_path);
    if (rit != reachable.end()) reach = &rit->second;
    for (const Entity* e : pool) {
      if (e->file_path == caller->file_path) tier_a.push_back(e);
      else if (reach && reach->count(e->file_path)) tier_b.push_back(e);
    }

    if (!tier_a.empty()) { emit(tier_a); continue; }
    if (!tier_b.empty()) { emit(tier_b); continue; }
    if (pool.size() == 1) { emit(pool); continue; }
    if (is_ref) continue;  // unresolved references are dropped quietly
    if (pool.size() > 1) {
      graph.diagnostics.push_back(
          {"ambiguous-call", site.where.file, site.where.line,
           site.callee_name + " matches " + std::to_string(pool.size()) +
               " entities in unrelated files"});
      continue;
    }
    if (is_builtin_call(lang, site.callee_name, site.qualifier)) {
      graph.diagnostics.push_back({"builtin", site.where.file, site.where.line,
                                   site.callee_name});
      continue;
    }
    graph.diagnostics.push_back({"unresolved-call", site.where.file,
                                 site.where.line, site.callee_name});
  }
}

// Scans a source tree into a CodeGraph: one file entity per matched source
// file, class/function/method/global entities with spans and bodies, contain
// edges for lexical nesting, include/import edges resolved to in-repo files,
// and call edges via resolve_calls. Per-file parse failures degrade that
// file to a bare file node and are recorded as diagnostics.
inline CodeGraph scan_repository(const std::filesystem::path& root,
                                 const FrontendConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (!fs::is_directory(root))
    throw std::runtime_error("repository root is not a readable directory: " +
                             root.string());

  std::vector<std::regex> excludes;
  for (const auto& g : cfg.exclude_globs) excludes.push_back(glob_to_regex(g));

  std::vector<std::string> files;
  fs::directory_options opts = fs::directory_options::skip_permission_denied;
  if (cfg.follow_symlinks)
    opts |= fs::directory_options::follow_directory_symlink;
  for (fs::recursive_directory_iterator it(root, opts), end; it != end; ++it) {
    if (it->is_directory() && it->path().filename() == ".git") {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::string rel =
        normalize_path(fs::relative(it->path(), root).generic_string());
    if (!detail::has_source_extension(cfg.language, rel)) continue;
    bool excluded = false;
    for (const auto& re : excludes)
      if (glob_match(re, rel)) {
        excluded = true;
        break;
      }
    if (!excluded) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  // Parse concurrently; merge in path order so output is deterministic
  // regardless of scheduling.
  std::vector<std::future<FileParse>> futures;
  futures.reserve(files.size());
  for (const auto& rel : files) {
    futures.push_back(std::async(std::launch::async, [&, rel]() {
      std::string src = read_file(root / rel);
      if (cfg.language == Language::Cpp) return CppFileParser().parse(rel, src);
      return PythonFileParser().parse(rel, src);
    }));
  }
  std::vector<FileParse> parses;
  parses.reserve(files.size());
  for (auto& f : futures) parses.push_back(f.get());

  CodeGraph graph;
  graph.language = cfg.language;
  std::set<std::string> file_set(files.begin(), files.end());

  // pass 1: file entities (ids, not pointers: adds invalidate references)
  std::map<std::string, std::string> file_id;
  for (const auto& fp : parses) {
    Entity file;
    file.kind = EntityKind::File;
    file.name = fp.path;
    file.file_path = fp.path;
    file.span = {1, std::max<int>(1, static_cast<int>(count_lines(fp.source)))};
    file.body_text = fp.source;
    file_id[fp.path] = graph.add_entity(std::move(file)).id;
    for (const auto& d : fp.diagnostics) graph.diagnostics.push_back(d);
  }

  // qualified names, with parent-chain lookup per parse
  auto qualified_name = [&](const FileParse& fp, size_t idx,
                            auto&& self) -> std::string {
    const ParsedEntity& pe = fp.entities[idx];
    std::string base = pe.name;
    if (cfg.language == Language::Cpp) {
      std::string q = pe.ns_prefix;
      if (!pe.qualifier.empty()) q += pe.qualifier + "::";
      return q + base;
    }
    if (pe.parent < 0) return base;
    return self(fp, static_cast<size_t>(pe.parent), self) + "." + base;
  };

  // pass 2: classes (outer before inner, which parse order guarantees)
  std::vector<std::vector<std::string>> entity_ids(parses.size());
  for (size_t p = 0; p < parses.size(); ++p)
    entity_ids[p].assign(parses[p].entities.size(), "");
  for (size_t p = 0; p < parses.size(); ++p) {
    const FileParse& fp = parses[p];
    for (size_t i = 0; i < fp.entities.size(); ++i) {
      const ParsedEntity& pe = fp.entities[i];
      if (pe.kind != EntityKind::Class) continue;
      Entity e;
      e.kind = EntityKind::Class;
      e.name = qualified_name(fp, i, qualified_name);
      e.file_path = fp.path;
      e.span = pe.span;
      e.body_text = fp.source.substr(pe.body_begin,
                                     pe.body_end - pe.body_begin);
      entity_ids[p][i] = graph.add_entity(std::move(e)).id;
    }
  }

  // class lookup for out-of-line method refinement
  auto find_class = [&](const std::string& qualifier,
                        const std::string& ns_prefix,
                        const std::string& file) -> const Entity* {
    std::vector<const Entity*> hits;
    for (const Entity* c : graph.entities_of_kind(EntityKind::Class)) {
      if (c->name == ns_prefix + qualifier || c->name == qualifier ||
          ends_with(c->name, "::" + qualifier))
        hits.push_back(c);
    }
    if (hits.empty()) return nullptr;
    for (const Entity* c : hits)
      if (c->file_path == file) return c;
    return hits.front();  // entities are in sorted file order already
  };

  // pass 3: functions, methods, globals + contain edges
  for (size_t p = 0; p < parses.size(); ++p) {
    const FileParse& fp = parses[p];
    for (size_t i = 0; i < fp.entities.size(); ++i) {
      const ParsedEntity& pe = fp.entities[i];
      std::string container_id =
          pe.parent >= 0 ? entity_ids[p][static_cast<size_t>(pe.parent)]
                         : file_id.at(fp.path);
      if (pe.kind == EntityKind::Class) {
        graph.add_relation({container_id, entity_ids[p][i],
                            RelationKind::Contain,
                            {fp.path, pe.span.start}});
        continue;
      }
      Entity e;
      e.kind = pe.kind;
      e.name = qualified_name(fp, i, qualified_name);
      e.file_path = fp.path;
      e.span = pe.span;
      e.body_text =
          fp.source.substr(pe.body_begin, pe.body_end - pe.body_begin);
      e.signature = pe.signature;

      // out-of-line definitions: `void Widget::resize()` becomes a method
      // contained in its class when the class is known
      if (cfg.language == Language::Cpp && !pe.qualifier.empty()) {
        const Entity* cls = find_class(pe.qualifier, pe.ns_prefix, fp.path);
        if (cls) {
          if (e.kind == EntityKind::Function) e.kind = EntityKind::Method;
          container_id = cls->id;
        }
      }
      if (e.kind == EntityKind::GlobalVariable) e.signature.reset();
      if ((e.kind == EntityKind::Function || e.kind == EntityKind::Method) &&
          !e.signature)
        e.signature = Signature{};
      const Entity& added = graph.add_entity(std::move(e));
      entity_ids[p][i] = added.id;
      graph.add_relation({container_id, added.id, RelationKind::Contain,
                          {fp.path, pe.span.start}});
    }
  }

  // pass 4: include / import edges
  for (size_t p = 0; p < parses.size(); ++p) {
    const FileParse& fp = parses[p];
    const Entity* src_file = graph.find_file(fp.path);
    std::set<std::string> edge_dedup;
    if (cfg.language == Language::Cpp) {
      for (const auto& inc : fp.includes) {
        std::string hit;
        if (!inc.angled) {
          std::string local = lexical_resolve(
              detail::dir_of(fp.path).empty()
                  ? inc.target
                  : detail::dir_of(fp.path) + "/" + inc.target);
          if (file_set.count(local)) hit = local;
        }
        if (hit.empty()) {
          for (const auto& r : cfg.include_roots) {
            std::string cand = (r == "." || r.empty())
                                   ? normalize_path(inc.target)
                                   : lexical_resolve(r + "/" + inc.target);
            if (file_set.count(cand)) {
              hit = cand;
              break;
            }
          }
        }
        if (hit.empty() || hit == fp.path) continue;  // out-of-repo or self
        if (!edge_dedup.insert(hit).second) continue;
        graph.add_relation({src_file->id, graph.find_file(hit)->id,
                            RelationKind::Include,
                            {fp.path, inc.line}});
      }
    } else {
      auto& aliases = graph.import_aliases[fp.path];
      for (const auto& imp : fp.imports) {
        std::string target;
        if (!imp.symbol.empty() && imp.symbol != "*") {
          std::string sub = imp.module == "." || ends_with(imp.module, ".")
                                ? imp.module + imp.symbol
                                : imp.module + "." + imp.symbol;
          target = detail::resolve_py_module(sub, fp.path, cfg.include_roots,
                                             file_set);
        }
        if (target.empty())
          target = detail::resolve_py_module(imp.module, fp.path,
                                             cfg.include_roots, file_set);
        if (target.empty() || target == fp.path) continue;
        if (!imp.alias.empty()) aliases[imp.alias] = target;
        if (!edge_dedup.insert(target).second) continue;
        graph.add_relation({src_file->id, graph.find_file(target)->id,
                            RelationKind::Dependency,
                            {fp.path, imp.line}});
      }
    }
  }

  // pass 5: call and reference sites
  std::set<std::string> ref_names;
  for (const auto& e : graph.entities())
    if (e.kind == EntityKind::GlobalVariable || e.kind == EntityKind::Class) {
      size_t pos = cfg.language == Language::Cpp ? e.name.rfind("::")
                                                 : e.name.rfind('.');
      ref_names.insert(pos == std::string::npos
                           ? e.name
                           : e.name.substr(pos + (cfg.language == Language::Cpp
                                                      ? 2
                                                      : 1)));
    }

  for (size_t p = 0; p < parses.size(); ++p) {
    const FileParse& fp = parses[p];
    for (size_t i = 0; i < fp.entities.size(); ++i) {
      const ParsedEntity& pe = fp.entities[i];
      if (pe.kind == EntityKind::Class) continue;
      const std::string& caller_id = entity_ids[p][i];
      std::vector<SrcToken> body_toks;
      if (cfg.language == Language::Cpp) {
        if (pe.tok_end <= pe.tok_begin) continue;
        body_toks.assign(fp.tokens.begin() + static_cast<long>(pe.tok_begin),
                         fp.tokens.begin() + static_cast<long>(pe.tok_end));
      } else {
        if (pe.tok_end <= pe.tok_begin) continue;
        std::string slice =
            fp.source.substr(pe.tok_begin, pe.tok_end - pe.tok_begin);
        int first_line = 1;
        for (size_t k = 0; k < pe.tok_begin && k < fp.source.size(); ++k)
          if (fp.source[k] == '\n') ++first_line;
        body_toks = tokenize_masked(mask_python(slice), false, first_line);
      }
      for (const auto& call : extract_calls(body_toks, cfg.language)) {
        graph.pending_call_sites.push_back({caller_id, call.name,
                                            call.qualifier, call.scope,
                                            call.arg_count,
                                            {fp.path, call.line}});
      }
      for (const auto& [name, line] :
           extract_ident_uses(body_toks, cfg.language)) {
        if (!ref_names.count(name)) continue;
        graph.pending_call_sites.push_back(
            {caller_id, name, "", false, -1, {fp.path, line}});
      }
    }
  }

  resolve_calls(graph);
  return graph;
}

}  // namespace forge
