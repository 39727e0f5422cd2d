#include <cassert>

#include "../core/registry.hpp"

namespace {

void test_record_and_total() {
  calc::Registry registry;
  registry.record(calc::Value(1.5, "kg"));
  registry.record(calc::Value(2.5, "kg"));
  assert(registry.total() == 4.0);
  assert(registry.count() == 2);
}

void test_record_rejects_huge_values() {
  calc::Registry registry;
  registry.record(calc::Value(2000000.0, "kg"));
  assert(registry.count() == 0);
}

}  // namespace

int main() {
  test_record_and_total();
  test_record_rejects_huge_values();
  return 0;
}
