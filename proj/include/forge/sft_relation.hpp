#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "forge/context.hpp"
#include "forge/gateway.hpp"
#include "forge/graph.hpp"
#include "forge/util.hpp"

namespace forge {

enum class Polarity { Positive, Negative };

inline std::string to_string(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

struct RelationSample {
  std::string id;
  RelationKind kind = RelationKind::Call;
  std::string src_id;    // entity id; cleared for a fabricated endpoint
  std::string dst_id;
  std::string src_name;  // qualified; fabricated on a negative src slot
  std::string dst_name;
  EntityKind src_kind = EntityKind::Function;
  EntityKind dst_kind = EntityKind::Function;
  std::string src_file;  // empty for a fabricated endpoint
  std::string dst_file;
  Polarity polarity = Polarity::Positive;
  std::string fabricated_name;  // set iff negative
  std::string statement;
  std::vector<std::string> paraphrases;
  ContextBundle context;
};

struct RelationConfig {
  int n1 = 5;  // paraphrases per positive
  int n2 = 1;  // negatives per positive
  int per_kind_cap = 200;
  std::uint64_t seed = 0;
  int max_attempts = 4;  // K for the augmentation requests
};

// Fixed verb lexicon for the statement template
// "[type of A] [name of A] [relation] [type of B] [name of B]".
inline std::string relation_verb(RelationKind k) {
  switch (k) {
    case RelationKind::Call: return "calls";
    case RelationKind::Include: return "includes";
    case RelationKind::Dependency: return "depends on";
    case RelationKind::Contain: return "contains";
  }
  throw std::invalid_argument("unknown relation kind");
}

inline std::string entity_kind_word(EntityKind k) {
  switch (k) {
    case EntityKind::File: return "file";
    case EntityKind::Class: return "class";
    case EntityKind::Function: return "function";
    case EntityKind::Method: return "method";
    case EntityKind::GlobalVariable: return "global variable";
  }
  throw std::invalid_argument("unknown entity kind");
}

inline std::string render_relation(EntityKind src_kind,
                                   const std::string& src_name,
                                   RelationKind kind, EntityKind dst_kind,
                                   const std::string& dst_name) {
  return entity_kind_word(src_kind) + " " + src_name + " " +
         relation_verb(kind) + " " + entity_kind_word(dst_kind) + " " +
         dst_name;
}

inline std::string render_relation(const CodeGraph& graph, const Relation& r) {
  const Entity& s = graph.at(r.src);
  const Entity& d = graph.at(r.dst);
  return render_relation(s.kind, s.name, r.kind, d.kind, d.name);
}

// ---------------------------------------------------------------------------
// Rule-based construction: one positive sample per distinct edge, call /
// contain / include kinds, down-sampled to a per-kind cap.
// ---------------------------------------------------------------------------

inline std::string relation_sample_id(const RelationSample& s) {
  return Fnv1a64()
      .field("relation")
      .field(to_string(s.kind))
      .field(s.src_name)
      .field(s.dst_name)
      .field(to_string(s.polarity))
      .field(s.fabricated_name)
      .hex();
}

inline std::vector<RelationSample> build_relation_samples(
    const CodeGraph& graph, const RelationConfig& cfg) {
  // distinct (src, kind, dst) triples, kinds of interest only
  std::map<RelationKind, std::set<std::pair<std::string, std::string>>> seen;
  for (const auto& r : graph.relations()) {
    if (r.kind != RelationKind::Call && r.kind != RelationKind::Contain &&
        r.kind != RelationKind::Include)
      continue;
    seen[r.kind].insert({r.src, r.dst});
  }
  std::vector<RelationSample> out;
  SplitMix64 rng(cfg.seed);
  for (auto& [kind, edges] : seen) {
    std::vector<std::pair<std::string, std::string>> pool(edges.begin(),
                                                          edges.end());
    if (static_cast<int>(pool.size()) > cfg.per_kind_cap) {
      rng.shuffle(pool);
      pool.resize(static_cast<size_t>(cfg.per_kind_cap));
      std::sort(pool.begin(), pool.end());
    }
    for (const auto& [src, dst] : pool) {
      const Entity& s = graph.at(src);
      const Entity& d = graph.at(dst);
      RelationSample sample;
      sample.kind = kind;
      sample.src_id = s.id;
      sample.dst_id = d.id;
      sample.src_name = s.name;
      sample.dst_name = d.name;
      sample.src_kind = s.kind;
      sample.dst_kind = d.kind;
      sample.src_file = s.file_path;
      sample.dst_file = d.file_path;
      sample.polarity = Polarity::Positive;
      sample.statement =
          render_relation(s.kind, s.name, kind, d.kind, d.name);
      sample.id = relation_sample_id(sample);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative fabrication: a deterministic seeded mutation of a real name that
// is guaranteed absent from the graph's name set. The mutated statement is
// still passed through the gateway for surface naturalization.
// ---------------------------------------------------------------------------

inline std::string fabricate_absent_name(const std::string& base,
                                         const std::set<std::string>& taken,
                                         SplitMix64& rng) {
  static const char* suffixes[] = {"_ex",  "_impl", "_v2",
                                   "_aux", "_core", "_fast"};
  // mutate the last path/name segment so the fabrication stays plausible
  for (int round = 0; round < 16; ++round) {
    std::string candidate = base + suffixes[rng.bounded(6)];
    if (round >= 6) candidate += std::to_string(round);
    if (!taken.count(candidate)) return candidate;
  }
  std::string candidate = base + "_x";
  while (taken.count(candidate)) candidate += "x";
  return candidate;
}

// ---------------------------------------------------------------------------
// LLM-driven augmentation: N1 validated paraphrases per positive plus N2
// naturalized negatives. Gateway failure after bounded retries skips the
// affected sample and never aborts the batch.
// ---------------------------------------------------------------------------

struct AugmentResult {
  std::vector<RelationSample> samples;
  std::vector<FilterVerdict> skipped;  // stage "augmentation", pass=false
};

inline AugmentResult augment_relations(const std::vector<RelationSample>& in,
                                       const CodeGraph& graph,
                                       Gateway& gateway,
                                       const RelationConfig& cfg) {
  std::set<std::string> name_set;
  for (const auto& e : graph.entities()) name_set.insert(e.name);

  AugmentResult result;
  SplitMix64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (const auto& original : in) {
    if (original.polarity != Polarity::Positive) continue;
    RelationSample positive = original;

    // paraphrases
    if (cfg.n1 > 0) {
      GenRequest req;
      req.role = GenRole::Paraphrase;
      req.mode = GenMode::Chat;
      req.sampling.max_attempts = cfg.max_attempts;
      req.prompt = std::string(prompts::kParaphrase) +
                   prompt_field_line("STATEMENT", positive.statement) +
                   prompt_field_line("COUNT", std::to_string(cfg.n1));
      auto parse_paraphrases = [&](const Candidate& c) {
        std::vector<std::string> lines;
        for (const auto& raw : split_lines(c.content)) {
          std::string line = trim(raw);
          if (line.empty()) continue;
          // strip a leading "k. " enumerator
          size_t dot = line.find(". ");
          if (dot != std::string::npos && dot <= 3)
            line = line.substr(dot + 2);
          if (contains(line, positive.src_name) &&
              contains(line, positive.dst_name))
            lines.push_back(line);
        }
        return lines;
      };
      try {
        TraceResult r = rejection_sample(gateway, req, [&](const Candidate& c) {
          return static_cast<int>(parse_paraphrases(c).size()) >= cfg.n1;
        });
        if (!r.accepted) {
          result.skipped.push_back({original.id, "augmentation", false,
                                    "paraphrase validation failed after " +
                                        std::to_string(cfg.max_attempts) +
                                        " attempts"});
          continue;
        }
        auto lines = parse_paraphrases({r.reasoning_trace, r.response});
        lines.resize(static_cast<size_t>(cfg.n1));
        positive.paraphrases = std::move(lines);
      } catch (const TransportError& ex) {
        result.skipped.push_back(
            {original.id, "augmentation", false, ex.what()});
        continue;
      }
    }
    result.samples.push_back(positive);

    // negatives
    for (int k = 0; k < cfg.n2; ++k) {
      RelationSample neg = original;
      neg.polarity = Polarity::Negative;
      neg.paraphrases.clear();
      bool mutate_dst = rng.bounded(2) == 0;
      if (mutate_dst) {
        neg.dst_name = fabricate_absent_name(original.dst_name, name_set, rng);
        neg.dst_file.clear();
        neg.dst_id.clear();
        neg.fabricated_name = neg.dst_name;
      } else {
        neg.src_name = fabricate_absent_name(original.src_name, name_set, rng);
        neg.src_file.clear();
        neg.src_id.clear();
        neg.fabricated_name = neg.src_name;
      }
      neg.statement = render_relation(neg.src_kind, neg.src_name, neg.kind,
                                      neg.dst_kind, neg.dst_name);
      neg.id = relation_sample_id(neg);

      const std::string real_name = mutate_dst ? neg.src_name : neg.dst_name;
      GenRequest req;
      req.role = GenRole::NegativeNaturalize;
      req.mode = GenMode::Chat;
      req.sampling.max_attempts = cfg.max_attempts;
      req.prompt = std::string(prompts::kNegativeNaturalize) +
                   prompt_field_line("STATEMENT", neg.statement);
      try {
        TraceResult r = rejection_sample(gateway, req, [&](const Candidate& c) {
          return contains(c.content, neg.fabricated_name) &&
                 contains(c.content, real_name);
        });
        if (!r.accepted) {
          result.skipped.push_back({neg.id, "augmentation", false,
                                    "negative naturalization dropped an "
                                    "entity name"});
          continue;
        }
        neg.statement = trim(r.response);
        result.samples.push_back(std::move(neg));
      } catch (const TransportError& ex) {
        result.skipped.push_back({neg.id, "augmentation", false, ex.what()});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ground-truth context assembly.
// ---------------------------------------------------------------------------

// Positives: complete contents of the enclosing files of both endpoints.
// Negatives: the sorted inventory of all entity names sharing the statement's
// two slot kinds (functions and methods form one group).
inline ContextBundle assemble_relation_context(const RelationSample& sample,
                                               const CodeGraph& graph) {
  ContextBundle bundle;
  if (sample.polarity == Polarity::Positive) {
    bundle.kind = ContextKind::FileContents;
    std::vector<std::string> paths{sample.src_file};
    if (sample.dst_file != sample.src_file) paths.push_back(sample.dst_file);
    for (const auto& p : paths) {
      const Entity* f = graph.find_file(p);
      if (!f)
        throw std::runtime_error(
            "assemble_relation_context: file missing from graph: " + p);
      bundle.items.push_back({p, f->body_text});
    }
    return bundle;
  }
  bundle.kind = ContextKind::EntityNameList;
  auto slot_group = [](EntityKind k) -> std::set<EntityKind> {
    if (k == EntityKind::Function || k == EntityKind::Method)
      return {EntityKind::Function, EntityKind::Method};
    return {k};
  };
  std::set<EntityKind> wanted = slot_group(sample.src_kind);
  std::set<EntityKind> dst_group = slot_group(sample.dst_kind);
  wanted.insert(dst_group.begin(), dst_group.end());
  std::set<std::pair<std::string, std::string>> names;
  for (const auto& e : graph.entities())
    if (wanted.count(e.kind)) names.insert({e.name, to_string(e.kind)});
  for (const auto& [name, kind] : names) bundle.items.push_back({kind, name});
  return bundle;
}

// Instruction and ground-truth response used for trace generation over
// relation samples.
inline std::string relation_instruction(const RelationSample& s,
                                        const std::string& statement) {
  return "Judge whether the following statement about the codebase is true "
         "or false, and justify briefly: " +
         statement;
  (void)s;
}

inline std::string relation_reference(const RelationSample& s,
                                      const std::string& statement) {
  if (s.polarity == Polarity::Positive) return "True. " + statement + ".";
  return "False. The entity " + s.fabricated_name +
         " does not exist in this codebase.";
}

}  // namespace forge
