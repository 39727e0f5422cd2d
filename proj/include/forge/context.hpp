#pragma once

#include <string>
#include <vector>

#include "forge/util.hpp"

#include "json.hpp"

namespace forge {

// Ground-truth-level evidence handed to the generator: whole files, an
// entity-name inventory, or dependency-closure code.
enum class ContextKind { FileContents, EntityNameList, DependencyClosureCode };

inline std::string to_string(ContextKind k) {
  switch (k) {
    case ContextKind::FileContents: return "file_contents";
    case ContextKind::EntityNameList: return "entity_name_list";
    case ContextKind::DependencyClosureCode: return "dependency_closure_code";
  }
  return "?";
}

inline ContextKind context_kind_from(std::string_view s) {
  if (s == "file_contents") return ContextKind::FileContents;
  if (s == "entity_name_list") return ContextKind::EntityNameList;
  if (s == "dependency_closure_code") return ContextKind::DependencyClosureCode;
  throw std::invalid_argument("unknown context kind: " + std::string(s));
}

struct ContextItem {
  std::string label;
  std::string text;
};

struct ContextBundle {
  ContextKind kind = ContextKind::FileContents;
  std::vector<ContextItem> items;

  bool empty() const { return items.empty(); }

  std::string digest() const {
    Fnv1a64 h;
    h.field(forge::to_string(kind));
    for (const auto& it : items) h.field(it.label).field(it.text);
    return h.hex();
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : items)
      arr.push_back({{"label", it.label}, {"text", it.text}});
    return {{"kind", forge::to_string(kind)}, {"items", arr}};
  }

  static ContextBundle from_json(const nlohmann::json& j) {
    ContextBundle b;
    b.kind = context_kind_from(j.at("kind").get<std::string>());
    for (const auto& it : j.at("items"))
      b.items.push_back({it.at("label"), it.at("text")});
    return b;
  }
};

// Outcome of one quality gate for one sample, machine-readable.
struct FilterVerdict {
  std::string sample_id;
  std::string stage;  // "rule", "consistency", "execution", "parse", ...
  bool pass = false;
  std::string reason;  // first violation, or "" on pass

  nlohmann::json to_json() const {
    return {{"sample_id", sample_id},
            {"stage", stage},
            {"pass", pass},
            {"reason", reason}};
  }

  static FilterVerdict from_json(const nlohmann::json& j) {
    return {j.at("sample_id"), j.at("stage"), j.at("pass"), j.at("reason")};
  }
};

}  // namespace forge
