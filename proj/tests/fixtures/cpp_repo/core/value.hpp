#pragma once

#include <string>

namespace calc {

// Maximum magnitude accepted by validate().
const double kMaxMagnitude = 1000000.0;

class Value {
 public:
  Value(double amount, std::string unit) : amount_(amount), unit_(unit) {}

  double amount() const { return amount_; }
  const std::string& unit() const { return unit_; }

  Value scaled(double factor) const { return Value(amount_ * factor, unit_); }

 private:
  double amount_;
  std::string unit_;
};

inline bool validate(const Value& v) {
  double m = v.amount();
  if (m < 0) m = -m;
  return m <= kMaxMagnitude;
}

}  // namespace calc
