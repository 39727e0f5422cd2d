#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "forge/context.hpp"
#include "forge/prompts.hpp"
#include "forge/util.hpp"

#include "json.hpp"

namespace forge {

enum class GenRole {
  Paraphrase,
  NegativeNaturalize,
  TaskDesign,
  TraceGeneration,
  Decompose,
  Repair,
  Judge
};

enum class GenMode { Chat, Reasoning };

inline std::string to_string(GenRole r) {
  switch (r) {
    case GenRole::Paraphrase: return "paraphrase";
    case GenRole::NegativeNaturalize: return "negative_naturalize";
    case GenRole::TaskDesign: return "task_design";
    case GenRole::TraceGeneration: return "trace_generation";
    case GenRole::Decompose: return "decompose";
    case GenRole::Repair: return "repair";
    case GenRole::Judge: return "judge";
  }
  return "?";
}

inline std::string to_string(GenMode m) {
  return m == GenMode::Chat ? "chat" : "reasoning";
}

struct SamplingParams {
  double temperature = 0.7;
  int max_attempts = 4;  // K
  std::uint64_t seed = 0;
};

struct GenRequest {
  GenRole role = GenRole::TraceGeneration;
  std::string prompt;
  ContextBundle context;
  SamplingParams sampling;
  GenMode mode = GenMode::Reasoning;
  // Ground-truth hint for offline stubs and scripted tests. Never sent over
  // the wire and excluded from transcript digests.
  std::string reference;

  void validate() const {
    if (sampling.max_attempts < 1)
      throw std::invalid_argument("sampling.max_attempts must be >= 1");
    if (role == GenRole::TraceGeneration && mode != GenMode::Reasoning)
      throw std::invalid_argument("trace_generation requires reasoning mode");
    if (role == GenRole::Judge && mode != GenMode::Chat)
      throw std::invalid_argument("judge requires chat mode");
  }
};

struct Candidate {
  std::string reasoning;
  std::string content;
};

struct TraceResult {
  std::string reasoning_trace;
  std::string response;
  int attempt_index = 0;
  bool accepted = false;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transcript key: everything that identifies a generation slot, including
// the attempt index (rejection sampling draws differ per attempt).
inline std::string request_digest(const GenRequest& req, int attempt) {
  return Fnv1a64()
      .field(to_string(req.role))
      .field(to_string(req.mode))
      .field(req.prompt)
      .field(req.context.digest())
      .field(std::to_string(attempt))
      .hex();
}

// ---------------------------------------------------------------------------
// Structured prompt fields. Builders embed machine-readable fields so both
// real models and the deterministic stub can read the same prompts.
// ---------------------------------------------------------------------------

inline std::string prompt_field_line(const std::string& key,
                                     const std::string& value) {
  return key + ": " + value + "\n";
}

inline std::string prompt_section(const std::string& key,
                                  const std::string& body) {
  return "<<<" + key + "\n" + body + (ends_with(body, "\n") ? "" : "\n") +
         key + ">>>\n";
}

inline std::string get_prompt_field(const std::string& prompt,
                                    const std::string& key) {
  for (const auto& line : split_lines(prompt))
    if (starts_with(line, key + ": ")) return line.substr(key.size() + 2);
  return "";
}

inline std::string get_prompt_section(const std::string& prompt,
                                      const std::string& key) {
  const std::string open = "<<<" + key + "\n";
  const std::string close = "\n" + key + ">>>";
  size_t b = prompt.find(open);
  if (b == std::string::npos) return "";
  b += open.size();
  size_t e = prompt.find(close, b);
  if (e == std::string::npos) return "";
  return prompt.substr(b, e - b);
}

// ---------------------------------------------------------------------------
// Gateway interface.
// ---------------------------------------------------------------------------

struct GatewayOptions {
  int concurrency = 4;       // bound on in-flight requests
  int transport_retries = 2; // per generation call
  int backoff_ms = 50;
};

// The single boundary to generation models. All other modules are pure
// given the candidate texts a gateway returns.
class Gateway {
 public:
  explicit Gateway(GatewayOptions opts = {}) : opts_(opts), slots_(opts.concurrency) {}
  virtual ~Gateway() = default;

  Candidate generate(const GenRequest& req, int attempt) {
    SlotGuard guard(*this);
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++calls_;
    }
    return do_generate(req, attempt);
  }

  std::int64_t call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }

  const GatewayOptions& options() const { return opts_; }

 protected:
  virtual Candidate do_generate(const GenRequest& req, int attempt) = 0;

 private:
  struct SlotGuard {
    Gateway& gw;
    explicit SlotGuard(Gateway& g) : gw(g) {
      std::unique_lock<std::mutex> lock(gw.mu_);
      gw.cv_.wait(lock, [&] { return gw.slots_ > 0; });
      --gw.slots_;
    }
    ~SlotGuard() {
      {
        std::lock_guard<std::mutex> lock(gw.mu_);
        ++gw.slots_;
      }
      gw.cv_.notify_one();
    }
  };

  GatewayOptions opts_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int slots_;
  std::int64_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// HTTP transport (chat-completion style).
// ---------------------------------------------------------------------------

struct HttpGatewayConfig {
  std::string endpoint;         // "http://host:port"
  std::string reasoning_model;  // used in reasoning mode
  std::string chat_model;       // used in chat mode
  std::string api_key;          // optional bearer token
};

}  // namespace forge

// httplib pulled in only for the HTTP transport
#include "httplib.h"

namespace forge {

class HttpGateway final : public Gateway {
 public:
  HttpGateway(HttpGatewayConfig cfg, GatewayOptions opts = {})
      : Gateway(opts), cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty())
      throw std::invalid_argument("HttpGateway: endpoint required");
  }

 protected:
  Candidate do_generate(const GenRequest& req, int /*attempt*/) override {
    nlohmann::json payload{
        {"model", req.mode == GenMode::Reasoning ? cfg_.reasoning_model
                                                 : cfg_.chat_model},
        {"temperature", req.sampling.temperature},
        {"messages",
         nlohmann::json::array(
             {{{"role", "user"}, {"content", render_user_message(req)}}})}};
    httplib::Client client(cfg_.endpoint);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
      headers.insert({"Authorization", "Bearer " + cfg_.api_key});
    auto res = client.Post("/v1/chat/completions", headers, payload.dump(),
                           "application/json");
    if (!res)
      throw TransportError("gateway endpoint unreachable: " + cfg_.endpoint);
    if (res->status != 200)
      throw TransportError("gateway returned status " +
                           std::to_string(res->status));
    nlohmann::json body = nlohmann::json::parse(res->body);
    const auto& msg = body.at("choices").at(0).at("message");
    Candidate c;
    c.content = msg.value("content", "");
    c.reasoning = msg.value("reasoning_content", "");
    return c;
  }

 private:
  // The reference field is intentionally not rendered.
  static std::string render_user_message(const GenRequest& req) {
    std::string out = req.prompt;
    if (!req.context.empty()) {
      out += "\nContext (" + to_string(req.context.kind) + "):\n";
      for (const auto& item : req.context.items)
        out += "### " + item.label + "\n" + item.text + "\n";
    }
    return out;
  }

  HttpGatewayConfig cfg_;
};

// ---------------------------------------------------------------------------
// Transcript replay and recording: the deterministic mock for offline runs.
// Transcript files are line-delimited {"digest", "reasoning", "content"}.
// ---------------------------------------------------------------------------

class TranscriptGateway final : public Gateway {
 public:
  explicit TranscriptGateway(const std::filesystem::path& path,
                             GatewayOptions opts = {})
      : Gateway(opts) {
    for (const auto& line : split_lines(read_file(path))) {
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      table_[j.at("digest")] = {j.value("reasoning", ""),
                                j.value("content", "")};
    }
  }

 protected:
  Candidate do_generate(const GenRequest& req, int attempt) override {
    auto it = table_.find(request_digest(req, attempt));
    if (it == table_.end())
      throw TransportError("no transcript entry for request digest " +
                           request_digest(req, attempt));
    return it->second;
  }

 private:
  std::map<std::string, Candidate> table_;
};

class RecordingGateway final : public Gateway {
 public:
  RecordingGateway(Gateway& inner, const std::filesystem::path& path,
                   GatewayOptions opts = {})
      : Gateway(opts), inner_(inner), out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open transcript for write");
  }

 protected:
  Candidate do_generate(const GenRequest& req, int attempt) override {
    Candidate c = inner_.generate(req, attempt);
    std::lock_guard<std::mutex> lock(mu_);
    out_ << nlohmann::json{{"digest", request_digest(req, attempt)},
                           {"reasoning", c.reasoning},
                           {"content", c.content}}
                .dump()
         << "\n";
    out_.flush();
    return c;
  }

 private:
  Gateway& inner_;
  std::mutex mu_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Deterministic stub: synthesizes schema-correct replies from the structured
// prompt fields alone. Used for offline fixture runs and transcripts.
// ---------------------------------------------------------------------------

class StubGateway final : public Gateway {
 public:
  explicit StubGateway(GatewayOptions opts = {}) : Gateway(opts) {}

 protected:
  Candidate do_generate(const GenRequest& req, int attempt) override {
    switch (req.role) {
      case GenRole::Paraphrase: return paraphrase(req);
      case GenRole::NegativeNaturalize:
        return {"", get_prompt_field(req.prompt, "STATEMENT")};
      case GenRole::TaskDesign: return task_design(req);
      case GenRole::TraceGeneration: return trace(req);
      case GenRole::Decompose: return decompose(req);
      case GenRole::Repair: return repair(req);
      case GenRole::Judge: return judge(req);
    }
    throw TransportError("stub: unknown role");
    (void)attempt;
  }

 private:
  static Candidate paraphrase(const GenRequest& req) {
    std::string statement = get_prompt_field(req.prompt, "STATEMENT");
    int n = 5;
    std::string count = get_prompt_field(req.prompt, "COUNT");
    if (!count.empty()) n = std::stoi(count);
    static const char* shapes[] = {
        "It holds that %s.",
        "%s, as the implementation shows.",
        "Within this repository, %s.",
        "Reading the sources confirms that %s.",
        "%s; the relevant definitions agree."};
    std::string out;
    for (int k = 0; k < n; ++k) {
      std::string shape = shapes[static_cast<size_t>(k) % 5];
      size_t at = shape.find("%s");
      std::string line = shape.substr(0, at) + statement +
                         shape.substr(at + 2);
      if (k >= 5) line += " (variant " + std::to_string(k + 1) + ")";
      out += std::to_string(k + 1) + ". " + line + "\n";
    }
    return {"", out};
  }

  static Candidate task_design(const GenRequest& req) {
    nlohmann::json apis = nlohmann::json::parse(
        get_prompt_field(req.prompt, "APIS"), nullptr, false);
    if (!apis.is_array() || apis.empty())
      return {"", "cannot design a task without APIs"};
    std::string format = get_prompt_field(req.prompt, "FORMAT");
    std::string lang = get_prompt_field(req.prompt, "LANGUAGE");
    int difficulty = 1;
    std::string d = get_prompt_field(req.prompt, "DIFFICULTY");
    if (!d.empty()) difficulty = std::stoi(d);

    std::vector<std::string> names;
    for (const auto& a : apis) names.push_back(a.at("name"));
    std::string statement =
        "Combine " + join(names, ", ") +
        " as the codebase intends to complete the scenario below.";

    std::string answer;
    if (format == "question_answer") {
      answer = "The scenario chains " + join(names, ", ") +
               " in declaration order; each call feeds the next.";
    } else {
      for (size_t i = 0; i < apis.size(); ++i) {
        const auto& a = apis[i];
        int arity = a.value("arity", 0);
        std::vector<std::string> args;
        for (int k = 0; k < arity; ++k)
          args.push_back(std::to_string(k + 1));
        std::string call =
            a.at("name").get<std::string>() + "(" + join(args, ", ") + ")";
        if (lang == "python")
          answer += "r" + std::to_string(i) + " = " + call + "\n";
        else
          answer += "auto r" + std::to_string(i) + " = " + call + ";\n";
      }
    }
    nlohmann::json criteria = nlohmann::json::array();
    for (int k = 0; k < difficulty; ++k) {
      const auto& a = apis[static_cast<size_t>(k) % apis.size()];
      criteria.push_back(
          {{"point", "Uses " + a.at("name").get<std::string>() +
                         " with the right shape"},
           {"entity", a.at("id")}});
    }
    nlohmann::json reply{{"statement", statement},
                         {"reference_answer", answer},
                         {"grading_criteria", criteria}};
    return {"", reply.dump()};
  }

  static Candidate trace(const GenRequest& req) {
    std::string reasoning =
        "Walked the provided context (" + req.context.digest() +
        "), matched every referenced entity to its definition, and derived "
        "the answer from those definitions.";
    if (!req.reference.empty()) return {reasoning, req.reference};
    return {reasoning,
            "Based on the provided context, the referenced entities resolve "
            "and the stated behavior follows."};
  }

  static Candidate decompose(const GenRequest& req) {
    std::string body = get_prompt_section(req.prompt, "TEST_BODY");
    std::string name = get_prompt_field(req.prompt, "TEST_NAME");
    std::string lang = get_prompt_field(req.prompt, "LANGUAGE");
    if (name.empty()) name = "case";
    std::string fn = name + "_scenario";

    std::vector<std::string> setup, conditions;
    for (const auto& raw : split_lines(body)) {
      std::string line = trim(raw);
      if (line.empty()) continue;
      if (lang == "python" ? starts_with(line, "assert ")
                           : starts_with(line, "assert(") ||
                                 starts_with(line, "assert (")) {
        std::string cond;
        if (lang == "python") {
          cond = trim(line.substr(7));
        } else {
          size_t open = line.find('(');
          size_t close = line.rfind(')');
          if (open == std::string::npos || close == std::string::npos ||
              close <= open)
            continue;
          cond = trim(line.substr(open + 1, close - open - 1));
        }
        if (!cond.empty()) conditions.push_back(cond);
      } else {
        setup.push_back(raw);
      }
    }
    if (conditions.empty()) return {"", "no assertions found"};

    std::string functional, assertions, instruction;
    std::string joined;
    for (size_t i = 0; i < conditions.size(); ++i) {
      if (i) joined += lang == "python" ? " and " : " && ";
      joined += "(" + conditions[i] + ")";
    }
    if (lang == "python") {
      functional = "def " + fn + "():\n";
      for (const auto& s : setup) functional += "    " + trim(s) + "\n";
      functional += "    return " + joined + "\n";
      assertions = "assert " + fn + "()";
      instruction = "# Returns True when the " + name +
                    " scenario behaves as the codebase intends.";
    } else {
      functional = "bool " + fn + "() {\n";
      for (const auto& s : setup) functional += "  " + trim(s) + "\n";
      functional += "  return " + joined + ";\n}\n";
      assertions = "assert(" + fn + "());";
      instruction = "// Returns true when the " + name +
                    " scenario behaves as the codebase intends.";
    }
    nlohmann::json reply{{"functional_code", functional},
                         {"assertions", assertions},
                         {"instruction", instruction}};
    return {"", reply.dump()};
  }

  static Candidate repair(const GenRequest& req) {
    if (!req.reference.empty()) return {"", req.reference};
    // no fix known: return the code unchanged
    nlohmann::json reply{
        {"functional_code", get_prompt_section(req.prompt, "FUNCTIONAL")},
        {"assertions", get_prompt_section(req.prompt, "ASSERTIONS")}};
    return {"applied no change; diagnostics did not localize a fix",
            reply.dump()};
  }

  static Candidate judge(const GenRequest& req) {
    auto normalize = [](std::string s) {
      std::string out;
      for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
      return out;
    };
    std::string ref = normalize(get_prompt_section(req.prompt, "REFERENCE"));
    std::string cand = normalize(get_prompt_section(req.prompt, "CANDIDATE"));
    bool same = !ref.empty() && !cand.empty() &&
                (ref == cand || contains(cand, ref) || contains(ref, cand));
    if (same) return {"", "CONSISTENT: candidate matches the reference."};
    return {"", "INCONSISTENT: candidate diverges from the reference."};
  }
};

// ---------------------------------------------------------------------------
// Rejection sampling and consistency judging.
// ---------------------------------------------------------------------------

using Acceptor = std::function<bool(const Candidate&)>;

// Draws up to K candidates and returns the first accepted one (trace and
// response embedded). When every draw is rejected the last candidate is
// returned with accepted=false for diagnostics. Transport errors are retried
// with linear backoff up to the gateway's bound, then surfaced.
inline TraceResult rejection_sample(Gateway& gateway, const GenRequest& req,
                                    const Acceptor& accept) {
  req.validate();
  Candidate last;
  for (int attempt = 1; attempt <= req.sampling.max_attempts; ++attempt) {
    Candidate cand;
    int failures = 0;
    while (true) {
      try {
        cand = gateway.generate(req, attempt);
        break;
      } catch (const TransportError&) {
        if (++failures > gateway.options().transport_retries) throw;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(gateway.options().backoff_ms * failures));
      }
    }
    last = cand;
    if (accept(cand)) return {cand.reasoning, cand.content, attempt, true};
  }
  return {last.reasoning, last.content, req.sampling.max_attempts, false};
}

struct ConsistencyVerdict {
  bool consistent = false;
  std::string rationale;
};

// Binary semantic-consistency check through the chat-mode judge. Fails
// closed: malformed output or transport trouble rejects the sample.
inline ConsistencyVerdict judge_consistency(Gateway& gateway,
                                            const std::string& reference,
                                            const std::string& candidate) {
  if (reference.empty() || candidate.empty())
    throw std::invalid_argument(
        "judge_consistency: reference and candidate must be non-empty");
  GenRequest req;
  req.role = GenRole::Judge;
  req.mode = GenMode::Chat;
  req.sampling.max_attempts = 1;
  req.prompt = std::string(prompts::kJudge) +
               prompt_section("REFERENCE", reference) +
               prompt_section("CANDIDATE", candidate);
  Candidate c;
  try {
    c = gateway.generate(req, 1);
  } catch (const TransportError& ex) {
    return {false, std::string("judge unavailable: ") + ex.what()};
  }
  std::string first;
  for (const auto& line : split_lines(c.content)) {
    first = trim(line);
    if (!first.empty()) break;
  }
  if (starts_with(first, "INCONSISTENT"))
    return {false, first};
  if (starts_with(first, "CONSISTENT"))
    return {true, first};
  return {false, "malformed judge output: " + first};
}

}  // namespace forge
