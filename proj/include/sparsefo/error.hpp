#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparsefo {

// Malformed input: bad file, bad formula, unknown symbol, arity mismatch.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A step or size budget ran out before the answer was known.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kDefaultBudget = 10'000'000;

class Budget {
 public:
  explicit Budget(std::int64_t steps = kDefaultBudget, const char* what = "step budget")
      : left_(steps), what_(what) {}
  void charge(std::int64_t n = 1) {
    left_ -= n;
    if (left_ < 0) throw BudgetExceeded(std::string(what_) + " exhausted");
  }
  std::int64_t left() const { return left_; }

 private:
  std::int64_t left_;
  const char* what_;
};

}  // namespace sparsefo
