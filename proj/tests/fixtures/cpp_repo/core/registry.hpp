#pragma once

#include <string>
#include <vector>

#include "value.hpp"

namespace calc {

class Registry {
 public:
  void record(const Value& v);
  double total() const;
  int count() const { return static_cast<int>(entries_.size()); }

 private:
  std::vector<double> entries_;
};

}  // namespace calc
