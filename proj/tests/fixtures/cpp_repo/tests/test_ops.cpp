#include <cassert>

#include "../core/ops.hpp"

namespace {

calc::Value make_meters(double amount) { return calc::Value(amount, "m"); }

void test_add_accumulates() {
  calc::Value a = make_meters(2.0);
  calc::Value b = make_meters(3.5);
  calc::Value sum = calc::add(a, b);
  assert(sum.amount() == 5.5);
  assert(sum.unit() == "m");
}

void test_scale_by_two_doubles() {
  calc::Value v = make_meters(4.0);
  assert(calc::scale_by_two(v).amount() == 8.0);
}

void test_magnitude_is_absolute() {
  calc::Value v = make_meters(-3.0);
  assert(calc::magnitude(v) == 3.0);
}

}  // namespace

int main() {
  test_add_accumulates();
  test_scale_by_two_doubles();
  test_magnitude_is_absolute();
  return 0;
}
