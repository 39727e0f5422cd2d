#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "forge/cpt.hpp"
#include "forge/frontend.hpp"
#include "forge/gateway.hpp"
#include "forge/sandbox.hpp"
#include "forge/sft_composition.hpp"
#include "forge/sft_relation.hpp"
#include "forge/sft_utilization.hpp"

#include "json.hpp"

namespace forge {

enum class GatewayMode { Stub, Replay, Http };

inline GatewayMode gateway_mode_from(std::string_view s) {
  if (s == "stub") return GatewayMode::Stub;
  if (s == "replay" || s == "mock") return GatewayMode::Replay;
  if (s == "http") return GatewayMode::Http;
  throw std::invalid_argument("unknown gateway mode: " + std::string(s));
}

struct GatewayConfig {
  GatewayMode mode = GatewayMode::Stub;
  std::string endpoint;
  std::string reasoning_model = "reasoning-default";
  std::string chat_model = "chat-default";
  std::string api_key;
  double temperature = 0.7;
  int max_attempts = 4;  // K
  int concurrency = 4;
  std::string transcript_path;      // replay source
  std::string record_transcript_to;  // optional capture file
};

struct MixConfig {
  std::string general_cpt_path;
  double cpt_ratio = 0.0;
  std::string general_sft_path;
  double sft_ratio = 0.0;
  std::uint64_t seed = 0;
};

struct FilterFilesConfig {
  std::string builtins_cpp_file;     // extends the embedded allowlist
  std::string builtins_python_file;
};

// Every module configuration in one versioned document,
// schema-validated before any stage runs.
struct PipelineConfig {
  int version = 1;
  FrontendConfig frontend;
  CptConfig cpt;
  GatewayConfig gateway;
  RelationConfig relation;
  CompositionConfig composition;
  UtilizationConfig utilization;
  SandboxConfig sandbox;
  TestMatcherConfig test_matcher;
  MixConfig mix;
  FilterFilesConfig filters;
  std::uint64_t seed = 1;

  void validate() const {
    frontend.validate();
    cpt.validate();
    if (gateway.max_attempts < 1)
      throw std::invalid_argument("gateway.max_attempts must be >= 1");
    if (gateway.concurrency < 1)
      throw std::invalid_argument("gateway.concurrency must be >= 1");
    if (gateway.mode == GatewayMode::Http && gateway.endpoint.empty())
      throw std::invalid_argument("http gateway requires an endpoint");
    if (gateway.mode == GatewayMode::Replay && gateway.transcript_path.empty())
      throw std::invalid_argument("replay gateway requires transcript_path");
    if (relation.n1 < 0 || relation.n2 < 0)
      throw std::invalid_argument("relation counts must be non-negative");
    if (composition.difficulty_min < 1 ||
        composition.difficulty_max < composition.difficulty_min)
      throw std::invalid_argument("composition difficulty range invalid");
    if (utilization.max_repair_iters < 0)
      throw std::invalid_argument("max_repair_iters must be non-negative");
    if (mix.cpt_ratio < 0 || mix.cpt_ratio >= 1 || mix.sft_ratio < 0 ||
        mix.sft_ratio >= 1)
      throw std::invalid_argument("mix ratios must be in [0, 1)");
    if (sandbox.limits.wall_time_s < 1)
      throw std::invalid_argument("sandbox wall time must be positive");
  }
};

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  PipelineConfig cfg;
  detail::read_if(j, "version", cfg.version);
  if (cfg.version != 1)
    throw std::invalid_argument("unsupported config version");
  detail::read_if(j, "seed", cfg.seed);
  if (j.contains("language"))
    cfg.frontend.language = language_from(j.at("language").get<std::string>());

  if (j.contains("frontend")) {
    const auto& f = j.at("frontend");
    detail::read_if(f, "include_roots", cfg.frontend.include_roots);
    detail::read_if(f, "exclude_globs", cfg.frontend.exclude_globs);
    detail::read_if(f, "follow_symlinks", cfg.frontend.follow_symlinks);
  }
  if (j.contains("cpt")) {
    const auto& c = j.at("cpt");
    detail::read_if(c, "context_limit", cfg.cpt.context_limit);
    detail::read_if(c, "max_paths_per_root", cfg.cpt.max_paths_per_root);
    detail::read_if(c, "emit_tail_window", cfg.cpt.emit_tail_window);
    if (c.contains("pointer_mode"))
      cfg.cpt.pointer_mode =
          pointer_mode_from(c.at("pointer_mode").get<std::string>());
    detail::read_if(c, "seed", cfg.cpt.seed);
  }
  if (j.contains("gateway")) {
    const auto& g = j.at("gateway");
    if (g.contains("mode"))
      cfg.gateway.mode = gateway_mode_from(g.at("mode").get<std::string>());
    detail::read_if(g, "endpoint", cfg.gateway.endpoint);
    detail::read_if(g, "reasoning_model", cfg.gateway.reasoning_model);
    detail::read_if(g, "chat_model", cfg.gateway.chat_model);
    detail::read_if(g, "temperature", cfg.gateway.temperature);
    detail::read_if(g, "max_attempts", cfg.gateway.max_attempts);
    detail::read_if(g, "concurrency", cfg.gateway.concurrency);
    detail::read_if(g, "transcript_path", cfg.gateway.transcript_path);
    detail::read_if(g, "record_transcript_to",
                    cfg.gateway.record_transcript_to);
  }
  if (j.contains("relation")) {
    const auto& r = j.at("relation");
    detail::read_if(r, "n1", cfg.relation.n1);
    detail::read_if(r, "n2", cfg.relation.n2);
    detail::read_if(r, "per_kind_cap", cfg.relation.per_kind_cap);
    detail::read_if(r, "seed", cfg.relation.seed);
  }
  if (j.contains("composition")) {
    const auto& c = j.at("composition");
    if (c.contains("formats")) {
      cfg.composition.formats.clear();
      for (const auto& f : c.at("formats"))
        cfg.composition.formats.push_back(
            task_format_from(f.get<std::string>()));
    }
    detail::read_if(c, "difficulty_min", cfg.composition.difficulty_min);
    detail::read_if(c, "difficulty_max", cfg.composition.difficulty_max);
    detail::read_if(c, "seed", cfg.composition.seed);
  }
  if (j.contains("utilization")) {
    const auto& u = j.at("utilization");
    detail::read_if(u, "max_repair_iters", cfg.utilization.max_repair_iters);
    detail::read_if(u, "seed", cfg.utilization.seed);
  }
  if (j.contains("sandbox")) {
    const auto& s = j.at("sandbox");
    detail::read_if(s, "cpp_compile_cmd", cfg.sandbox.cpp_compile_cmd);
    detail::read_if(s, "python_cmd", cfg.sandbox.python_cmd);
    detail::read_if(s, "wall_time_s", cfg.sandbox.limits.wall_time_s);
    detail::read_if(s, "output_cap_bytes", cfg.sandbox.limits.output_cap_bytes);
  }
  if (j.contains("test_matcher")) {
    const auto& t = j.at("test_matcher");
    detail::read_if(t, "name_prefixes", cfg.test_matcher.name_prefixes);
    detail::read_if(t, "path_markers", cfg.test_matcher.path_markers);
  }
  if (j.contains("mix")) {
    const auto& m = j.at("mix");
    detail::read_if(m, "general_cpt_path", cfg.mix.general_cpt_path);
    detail::read_if(m, "cpt_ratio", cfg.mix.cpt_ratio);
    detail::read_if(m, "general_sft_path", cfg.mix.general_sft_path);
    detail::read_if(m, "sft_ratio", cfg.mix.sft_ratio);
    detail::read_if(m, "seed", cfg.mix.seed);
  }
  if (j.contains("filters")) {
    const auto& f = j.at("filters");
    detail::read_if(f, "builtins_cpp_file", cfg.filters.builtins_cpp_file);
    detail::read_if(f, "builtins_python_file",
                    cfg.filters.builtins_python_file);
    if (!cfg.filters.builtins_cpp_file.empty())
      install_builtin_file(Language::Cpp, cfg.filters.builtins_cpp_file);
    if (!cfg.filters.builtins_python_file.empty())
      install_builtin_file(Language::Python,
                           cfg.filters.builtins_python_file);
  }

  // Environment overrides: gateway endpoint and credentials only.
  if (const char* ep = std::getenv("FORGE_GATEWAY_ENDPOINT"))
    cfg.gateway.endpoint = ep;
  if (const char* key = std::getenv("FORGE_GATEWAY_API_KEY"))
    cfg.gateway.api_key = key;

  cfg.validate();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(nlohmann::json::parse(read_file(path)));
}

// Owns the configured transport plus the optional transcript recorder that
// wraps it. Callers talk to get().
struct GatewayHandle {
  std::unique_ptr<Gateway> transport;
  std::unique_ptr<Gateway> recorder;
  Gateway& get() { return recorder ? *recorder : *transport; }
};

inline GatewayHandle make_gateway(const GatewayConfig& cfg) {
  GatewayOptions opts;
  opts.concurrency = cfg.concurrency;
  GatewayHandle handle;
  switch (cfg.mode) {
    case GatewayMode::Stub:
      handle.transport = std::make_unique<StubGateway>(opts);
      break;
    case GatewayMode::Replay:
      handle.transport =
          std::make_unique<TranscriptGateway>(cfg.transcript_path, opts);
      break;
    case GatewayMode::Http: {
      HttpGatewayConfig http;
      http.endpoint = cfg.endpoint;
      http.reasoning_model = cfg.reasoning_model;
      http.chat_model = cfg.chat_model;
      http.api_key = cfg.api_key;
      handle.transport = std::make_unique<HttpGateway>(http, opts);
      break;
    }
  }
  if (!cfg.record_transcript_to.empty())
    handle.recorder = std::make_unique<RecordingGateway>(
        *handle.transport, cfg.record_transcript_to, opts);
  return handle;
}

}  // namespace forge
