#pragma once

#include <string>
#include <vector>

#include "forge/context.hpp"
#include "forge/graph.hpp"
#include "forge/util.hpp"

#include "json.hpp"

namespace forge {

// One supervised-fine-tuning training instance, any of the three families.
struct SftRecord {
  std::string id;
  std::string kind;  // "relation" | "composition" | "utilization"
  std::string instruction;
  ContextBundle context;
  std::string reasoning_trace;
  std::string response;
  nlohmann::json metadata = nlohmann::json::object();
  bool general = false;  // marks mixed-in general-domain records

  nlohmann::json to_json() const {
    return {{"id", id},
            {"kind", kind},
            {"instruction", instruction},
            {"context", context.to_json()},
            {"reasoning_trace", reasoning_trace},
            {"response", response},
            {"metadata", metadata},
            {"general", general}};
  }

  static SftRecord from_json(const nlohmann::json& j) {
    SftRecord r;
    r.id = j.at("id");
    r.kind = j.at("kind");
    r.instruction = j.at("instruction");
    r.context = ContextBundle::from_json(j.at("context"));
    r.reasoning_trace = j.at("reasoning_trace");
    r.response = j.at("response");
    r.metadata = j.value("metadata", nlohmann::json::object());
    r.general = j.value("general", false);
    return r;
  }
};

inline constexpr int kSftFormatVersion = 1;
inline constexpr int kVerdictFormatVersion = 1;

inline std::string serialize_sft_corpus(const std::vector<SftRecord>& records) {
  std::string out;
  out += nlohmann::json{{"format", "sft"},
                        {"version", kSftFormatVersion},
                        {"records", records.size()}}
             .dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

inline std::string serialize_verdicts(const std::vector<FilterVerdict>& v) {
  std::string out;
  out += nlohmann::json{{"format", "verdicts"},
                        {"version", kVerdictFormatVersion},
                        {"records", v.size()}}
             .dump();
  out += '\n';
  for (const auto& item : v) {
    out += item.to_json().dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus validation.
// ---------------------------------------------------------------------------

struct Violation {
  size_t line = 0;  // 1-based line in the corpus file
  std::string message;
};

// Schema-checks every record of an SFT corpus file and verifies the record
// invariants: accepted records carry non-empty traces and responses, and
// every provenance entity id resolves in the companion graph when one is
// supplied.
inline std::vector<Violation> validate_corpus(const std::string& text,
                                              const CodeGraph* graph = nullptr) {
  std::vector<Violation> out;
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) {
    out.push_back({0, "empty corpus file"});
    return out;
  }
  nlohmann::json header = nlohmann::json::parse(lines[0], nullptr, false);
  if (!header.is_object() || header.value("format", "") != "sft") {
    out.push_back({1, "missing or wrong corpus header"});
    return out;
  }
  if (header.value("version", 0) != kSftFormatVersion)
    out.push_back({1, "unsupported corpus version"});

  std::set<std::string> seen_ids;
  for (size_t i = 1; i < lines.size(); ++i) {
    const size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
    if (!j.is_object()) {
      out.push_back({line_no, "not a JSON object"});
      continue;
    }
    if (j.value("general", false)) continue;  // external general-domain record
    for (const char* field :
         {"id", "kind", "instruction", "context", "reasoning_trace",
          "response", "metadata"}) {
      if (!j.contains(field))
        out.push_back({line_no, std::string("missing field: ") + field});
    }
    if (!j.contains("id") || !j.contains("kind")) continue;
    std::string kind = j.value("kind", "");
    if (kind != "relation" && kind != "composition" && kind != "utilization")
      out.push_back({line_no, "unknown record kind: " + kind});
    std::string id = j.value("id", "");
    if (!seen_ids.insert(id).second)
      out.push_back({line_no, "duplicate record id: " + id});
    if (j.contains("reasoning_trace") &&
        trim(j.value("reasoning_trace", "")).empty())
      out.push_back({line_no, "empty reasoning_trace on accepted record"});
    if (j.contains("response") && trim(j.value("response", "")).empty())
      out.push_back({line_no, "empty response on accepted record"});
    if (j.contains("context")) {
      nlohmann::json ctx = j["context"];
      if (!ctx.is_object() || !ctx.contains("kind") || !ctx.contains("items"))
        out.push_back({line_no, "malformed context bundle"});
    }
    if (graph && j.contains("metadata") && j["metadata"].is_object() &&
        j["metadata"].contains("provenance")) {
      for (const auto& pid : j["metadata"]["provenance"]) {
        if (!pid.is_string() || !graph->find(pid.get<std::string>()))
          out.push_back({line_no,
                         "provenance id does not resolve: " +
                             (pid.is_string() ? pid.get<std::string>()
                                              : pid.dump())});
      }
    }
  }
  return out;
}

}  // namespace forge
