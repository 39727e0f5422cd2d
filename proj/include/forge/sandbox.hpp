#pragma once

#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "forge/graph.hpp"
#include "forge/util.hpp"

namespace forge {

struct ExecLimits {
  int wall_time_s = 60;
  std::int64_t output_cap_bytes = 64ll * 1024 * 1024;
};

struct ExecOutcome {
  std::string task_id;
  int attempt_index = 0;
  bool compiled = false;
  bool tests_passed = false;  // implies compiled
  bool timed_out = false;
  std::string stderr_digest;
  std::string stderr_text;  // capped; feeds the repair loop
  double wall_time = 0.0;
};

struct SandboxConfig {
  // {src} and {bin} are substituted with the source and output paths
  std::string cpp_compile_cmd = "g++ -std=c++17 -O0 {src} -o {bin}";
  std::string python_cmd = "python3";
  ExecLimits limits;
  std::filesystem::path work_root;  // empty: system temp
};

namespace detail {

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stderr_text;
  double seconds = 0.0;
};

inline RunResult run_command(const std::string& cmd,
                             const std::filesystem::path& cwd, int timeout_s,
                             std::int64_t output_cap) {
  namespace fs = std::filesystem;
  const fs::path err_file = cwd / "__stderr.txt";
  const fs::path out_file = cwd / "__stdout.txt";
  std::string full = "cd '" + cwd.string() + "' && timeout " +
                     std::to_string(timeout_s) + "s " + cmd + " > '" +
                     out_file.string() + "' 2> '" + err_file.string() + "'";
  auto start = std::chrono::steady_clock::now();
  int status = std::system(full.c_str());
  auto end = std::chrono::steady_clock::now();

  RunResult r;
  r.seconds = std::chrono::duration<double>(end - start).count();
  int exit_code = -1;
  if (status != -1) {
    if (WIFEXITED(status)) exit_code = WEXITSTATUS(status);
    else exit_code = 128;
  }
  r.exit_code = exit_code;
  r.timed_out = exit_code == 124;  // timeout(1) convention
  if (fs::exists(err_file)) {
    std::string text = read_file(err_file);
    if (static_cast<std::int64_t>(text.size()) > output_cap)
      text.resize(static_cast<size_t>(output_cap));
    r.stderr_text = std::move(text);
  }
  return r;
}

inline std::string substitute(std::string tmpl, const std::string& key,
                              const std::string& value) {
  size_t pos;
  while ((pos = tmpl.find(key)) != std::string::npos)
    tmpl.replace(pos, key.size(), value);
  return tmpl;
}

}  // namespace detail

struct AttemptSpec {
  std::string task_id;
  int attempt_index = 0;
  Language language = Language::Cpp;
  std::string code;   // implementation under test
  std::string tests;  // assertions / test driver
  bool compile_only = false;
};

// Compiles and runs one attempt in a disposable working directory under
// wall-time and output-size limits. Two concurrent attempts never share a
// directory; a registry asserts it.
class Sandbox {
 public:
  explicit Sandbox(SandboxConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.work_root.empty())
      cfg_.work_root = std::filesystem::temp_directory_path() / "forge_sandbox";
  }

  const SandboxConfig& config() const { return cfg_; }

  ExecOutcome run_attempt(const AttemptSpec& spec) {
    namespace fs = std::filesystem;
    // pid + serial: unique across concurrent processes sharing a work root
    const std::string dir_name =
        spec.task_id + "_a" + std::to_string(spec.attempt_index) + "_p" +
        std::to_string(::getpid()) + "_" + std::to_string(next_serial());
    const fs::path dir = cfg_.work_root / dir_name;

    DirLease lease(*this, dir.string());
    fs::create_directories(dir);

    ExecOutcome out;
    out.task_id = spec.task_id;
    out.attempt_index = spec.attempt_index;

    std::string program = spec.code;
    if (!program.empty() && program.back() != '\n') program += '\n';
    std::string tests = spec.tests;
    if (spec.language == Language::Cpp) {
      if (!contains(program, "int main") && !contains(tests, "int main")) {
        // hoist preprocessor lines above the generated main
        std::string headers, body;
        for (const auto& line : split_lines(tests)) {
          if (starts_with(trim(line), "#")) headers += line + "\n";
          else body += line + "\n";
        }
        tests = headers + "int main() {\n" + body + "return 0;\n}\n";
      }
      write_file(dir / "attempt.cpp", program + "\n" + tests);
      std::string compile = detail::substitute(
          detail::substitute(cfg_.cpp_compile_cmd, "{src}", "attempt.cpp"),
          "{bin}", "attempt_bin");
      auto c = detail::run_command(compile, dir, cfg_.limits.wall_time_s,
                                   cfg_.limits.output_cap_bytes);
      out.wall_time += c.seconds;
      if (c.exit_code == 127)
        throw std::runtime_error("toolchain missing: " + cfg_.cpp_compile_cmd);
      if (c.exit_code != 0) {
        out.compiled = false;
        out.timed_out = c.timed_out;
        out.stderr_text = c.stderr_text;
        out.stderr_digest = fnv1a_hex(c.stderr_text);
        fs::remove_all(dir);
        return out;
      }
      out.compiled = true;
      if (spec.compile_only) {
        fs::remove_all(dir);
        return out;
      }
      auto r = detail::run_command("./attempt_bin", dir,
                                   cfg_.limits.wall_time_s,
                                   cfg_.limits.output_cap_bytes);
      out.wall_time += r.seconds;
      out.timed_out = r.timed_out;
      out.tests_passed = r.exit_code == 0;
      out.stderr_text = r.stderr_text;
      out.stderr_digest = fnv1a_hex(r.stderr_text);
      fs::remove_all(dir);
      return out;
    }

    // Python: "compilation" is a syntax check in an isolated interpreter.
    write_file(dir / "attempt.py", program + "\n" + tests);
    auto c = detail::run_command(cfg_.python_cmd + " -m py_compile attempt.py",
                                 dir, cfg_.limits.wall_time_s,
                                 cfg_.limits.output_cap_bytes);
    out.wall_time += c.seconds;
    if (c.exit_code == 127)
      throw std::runtime_error("toolchain missing: " + cfg_.python_cmd);
    if (c.exit_code != 0) {
      out.compiled = false;
      out.timed_out = c.timed_out;
      out.stderr_text = c.stderr_text;
      out.stderr_digest = fnv1a_hex(c.stderr_text);
      fs::remove_all(dir);
      return out;
    }
    out.compiled = true;
    if (spec.compile_only) {
      fs::remove_all(dir);
      return out;
    }
    auto r = detail::run_command(cfg_.python_cmd + " attempt.py", dir,
                                 cfg_.limits.wall_time_s,
                                 cfg_.limits.output_cap_bytes);
    out.wall_time += r.seconds;
    out.timed_out = r.timed_out;
    out.tests_passed = r.exit_code == 0;
    out.stderr_text = r.stderr_text;
    out.stderr_digest = fnv1a_hex(r.stderr_text);
    fs::remove_all(dir);
    return out;
  }

 private:
  struct DirLease {
    Sandbox& sandbox;
    std::string dir;
    DirLease(Sandbox& s, std::string d) : sandbox(s), dir(std::move(d)) {
      std::lock_guard<std::mutex> lock(s.mu_);
      if (!s.active_dirs_.insert(dir).second)
        throw std::runtime_error("sandbox directory already in use: " + dir);
    }
    ~DirLease() {
      std::lock_guard<std::mutex> lock(sandbox.mu_);
      sandbox.active_dirs_.erase(dir);
    }
  };

  std::uint64_t next_serial() {
    std::lock_guard<std::mutex> lock(mu_);
    return serial_++;
  }

  SandboxConfig cfg_;
  std::mutex mu_;
  std::set<std::string> active_dirs_;
  std::uint64_t serial_ = 0;
};

// ---------------------------------------------------------------------------
// Execution metrics.
// ---------------------------------------------------------------------------

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const {
    return den == 0 ? 0.0
                    : static_cast<double>(num) / static_cast<double>(den);
  }
  std::string str() const {
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

inline std::map<std::string, std::vector<ExecOutcome>> group_outcomes(
    const std::vector<ExecOutcome>& outcomes) {
  std::map<std::string, std::vector<ExecOutcome>> by_task;
  for (const auto& o : outcomes) by_task[o.task_id].push_back(o);
  for (auto& [task, list] : by_task)
    std::sort(list.begin(), list.end(),
              [](const ExecOutcome& a, const ExecOutcome& b) {
                return a.attempt_index < b.attempt_index;
              });
  return by_task;
}

namespace detail {

template <typename Pred>
Fraction fraction_at_k(
    const std::map<std::string, std::vector<ExecOutcome>>& by_task, int k,
    Pred pred, const char* metric) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  Fraction f;
  f.den = static_cast<std::int64_t>(by_task.size());
  for (const auto& [task, attempts] : by_task) {
    if (static_cast<int>(attempts.size()) < k)
      throw std::invalid_argument(std::string(metric) + ": task " + task +
                                  " has " + std::to_string(attempts.size()) +
                                  " attempts, needs at least " +
                                  std::to_string(k));
    for (int i = 0; i < k; ++i)
      if (pred(attempts[static_cast<size_t>(i)])) {
        ++f.num;
        break;
      }
  }
  return f;
}

}  // namespace detail

// Fraction of tasks with any of the first k attempts compiling.
inline Fraction compilation_at_k(
    const std::map<std::string, std::vector<ExecOutcome>>& by_task, int k) {
  return detail::fraction_at_k(
      by_task, k, [](const ExecOutcome& o) { return o.compiled; },
      "compilation@k");
}

// Fraction of tasks with any of the first k attempts passing all tests.
inline Fraction pass_at_k(
    const std::map<std::string, std::vector<ExecOutcome>>& by_task, int k) {
  return detail::fraction_at_k(
      by_task, k, [](const ExecOutcome& o) { return o.tests_passed; },
      "pass@k");
}

}  // namespace forge
