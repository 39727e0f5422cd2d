#pragma once

#include "value.hpp"

namespace calc {

Value add(const Value& a, const Value& b);
Value scale_by_two(const Value& v);

inline double magnitude(const Value& v) {
  double m = v.amount();
  if (m < 0) m = -m;
  return m;
}

}  // namespace calc
