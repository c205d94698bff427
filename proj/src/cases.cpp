#include "trackinspect/cases.hpp"

#include <stdexcept>

namespace trackinspect {

static TestCase make_case(int number, const char* description,
                          std::initializer_list<const char*> labels) {
  TestCase c;
  c.number = number;
  c.description = description;
  for (const char* l : labels) c.defects.insert(parse_component_label(l));
  return c;
}

const std::vector<TestCase>& standard_test_cases() {
  static const std::vector<TestCase> cases = {
      make_case(1, "Standard good track", {}),
      make_case(2, "1 screw, 1 washer, 1 block, 1 connector missing",
                {"1-9S", "1-9W", "9B", "1-9C"}),
      make_case(3, "2 screws, 2 washers, 2 blocks, 2 connectors missing",
                {"1-5S", "2-5S", "1-5W", "2-5W", "5B", "9B", "1-9C", "2-9C"}),
      make_case(4, "1 screw missing", {"1-7S"}),
      make_case(5, "2 screws missing", {"1-7S", "2-4S"}),
      make_case(6, "1 washer missing", {"1-3W"}),
      make_case(7, "2 washers missing", {"1-3W", "2-7W"}),
      make_case(8, "1 block missing", {"1B"}),
      make_case(9, "2 blocks missing", {"2B", "6B"}),
      make_case(10, "1 connector missing", {"1-1C"}),
      make_case(11, "2 connectors missing", {"2-1C", "2-9C"}),
      make_case(12, "1 screw, 1 washer, 1 connector missing",
                {"1-3S", "1-3W", "2-1C"}),
      make_case(13, "2 screws, 2 washers missing",
                {"1-7S", "2-4S", "1-7W", "2-4W"}),
      make_case(14, "2 screws, 2 washers, 1 block missing",
                {"1-8S", "2-8S", "1-8W", "2-8W", "8B"}),
      make_case(15, "2 screws, 2 washers, 1 block, 1 connector missing",
                {"1-8S", "2-8S", "1-8W", "2-8W", "8B", "2-1C"}),
  };
  return cases;
}

const TestCase& test_case(int number) {
  if (number < 1 || number > 15)
    throw std::invalid_argument("test case number must be 1..15, got " +
                                std::to_string(number));
  return standard_test_cases()[static_cast<size_t>(number - 1)];
}

}  // namespace trackinspect
