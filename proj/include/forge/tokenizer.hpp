#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace forge {

// Token counting is pluggable so a model-specific tokenizer can be dropped in
// behind the same interface. The shipped counter is a documented
// approximation: ceil(bytes / 4). Context budgets only need a consistent
// measure, not the exact vocabulary of any particular model.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::int64_t count(std::string_view text) const = 0;
  // Largest prefix (in bytes) whose token count does not exceed `budget`.
  virtual size_t prefix_bytes(std::string_view text,
                              std::int64_t budget) const = 0;
};

class ApproxTokenCounter final : public TokenCounter {
 public:
  std::int64_t count(std::string_view text) const override {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
  }

  size_t prefix_bytes(std::string_view text,
                      std::int64_t budget) const override {
    if (budget <= 0) return 0;
    const size_t cap = static_cast<size_t>(budget) * 4;
    return text.size() < cap ? text.size() : cap;
  }
};

inline const TokenCounter& default_token_counter() {
  static ApproxTokenCounter counter;
  return counter;
}

}  // namespace forge
