#include <iostream>

#include "sparsefo/generate.hpp"
#include "sparsefo/selftest.hpp"

int main(int argc, char** argv) {
  sparsefo::SuiteOptions opt;
  opt.seed = sparsefo::default_seed(opt.seed);
  for (int i = 1; i < argc; ++i) opt.only.insert(std::atoi(argv[i]));
  opt.on_result = [](const sparsefo::CriterionResult& r) { std::cout << sparsefo::format_result(r) << std::endl; };
  auto results = sparsefo::run_suite(opt);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << "summary criteria=" << results.size() << " failed=" << failed << std::endl;
  return failed ? 1 : 0;
}
