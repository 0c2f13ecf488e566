#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace sparsefo {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  // Instance counts divided by this factor (at least one instance each); 1 is the full suite.
  int shrink = 1;
  std::set<int> only;  // empty: all ten
  std::function<void(const CriterionResult&)> on_result;
};

// The ten acceptance properties. Exceptions inside a criterion count as a failure.
std::vector<CriterionResult> run_suite(const SuiteOptions& opt = {});
std::string format_result(const CriterionResult& r);

}  // namespace sparsefo
