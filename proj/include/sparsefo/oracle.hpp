#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sparsefo/error.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

using Valuation = std::map<std::string, int>;

// Brute-force Tarskian evaluation, compiled once per (structure, formula).
// Quantifier blocks are searched by backtracking with early conjunct checks,
// and quantified subformulas are memoised on the values of their free variables.
class Evaluator {
 public:
  Evaluator(const RelationalStructure& a, const Formula& f, std::vector<std::string> free_order,
            std::int64_t budget = kDefaultBudget);
  ~Evaluator();
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  // values[i] is the value of free_order[i].
  bool operator()(const std::vector<int>& values);
  std::int64_t steps() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool eval(const RelationalStructure& a, const Formula& f, const Valuation& val = {},
          std::int64_t budget = kDefaultBudget);

struct TuplePredicate {
  std::vector<std::string> vars;
  int n = 0;
  std::vector<char> bits;  // indexed by the tuple read as a base-n number

  bool contains(const std::vector<int>& t) const;
  std::set<std::vector<int>> tuples() const;
  std::size_t count() const;
  bool operator==(const TuplePredicate& o) const { return vars == o.vars && n == o.n && bits == o.bits; }
};

std::size_t tuple_index(const std::vector<int>& t, int n);
std::vector<int> tuple_at(std::size_t index, int arity, int n);

TuplePredicate satisfying_tuples(const RelationalStructure& a, const Formula& f, const std::vector<std::string>& vars,
                                 std::int64_t budget = kDefaultBudget);

// Classes of u under rank-q equivalence of (A, pinned, u). Atomic types are taken
// over the given function words (innermost first); the empty word is always included.
std::vector<std::vector<int>> q_type_partition(const RelationalStructure& a, int q, const std::vector<int>& pinned,
                                               const std::set<std::vector<std::string>>& words = {{}},
                                               std::int64_t budget = kDefaultBudget);

// Canonical ids of the coloured subtrees of a forest; equal ids iff isomorphic.
std::vector<int> subtree_codes(const RootedForest& f);
bool subtree_iso(const RootedForest& f, int a, int b);

}  // namespace sparsefo
