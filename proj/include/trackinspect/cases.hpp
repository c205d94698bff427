#pragma once
#include <string>
#include <vector>

#include "trackinspect/labels.hpp"

namespace trackinspect {

// One of the 15 canonical scenarios laid out on the model track.  Case 1 is
// the intact track; cases 2..15 remove 42 components in total.
struct TestCase {
  int number = 0;
  std::string description;
  DefectSet defects;
};

const std::vector<TestCase>& standard_test_cases();
const TestCase& test_case(int number);  // throws on numbers outside 1..15

}  // namespace trackinspect
