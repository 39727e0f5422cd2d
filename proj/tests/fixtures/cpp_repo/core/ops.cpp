#include "ops.hpp"

namespace calc {

Value add(const Value& a, const Value& b) {
  return Value(a.amount() + b.amount(), a.unit());
}

Value scale_by_two(const Value& v) { return v.scaled(2.0); }

}  // namespace calc
