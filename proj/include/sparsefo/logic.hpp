#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sparsefo/structures.hpp"

namespace sparsefo {

// A variable with unary functions applied to it, innermost first:
// {x, {f, g}} is g(f(x)).
struct Term {
  std::string var;
  std::vector<std::string> funcs;

  Term() = default;
  Term(std::string v) : var(std::move(v)) {}  // NOLINT
  Term(std::string v, std::vector<std::string> fs) : var(std::move(v)), funcs(std::move(fs)) {}
  bool operator==(const Term& o) const { return var == o.var && funcs == o.funcs; }
  bool operator<(const Term& o) const { return var != o.var ? var < o.var : funcs < o.funcs; }
};

Term apply_fn(const std::string& f, int times, Term t);

enum class Kind { True, False, Atom, Eq, Not, And, Or, Exists, Forall };

struct Node;
using Formula = std::shared_ptr<const Node>;

struct Node {
  Kind kind;
  std::string name;                // relation or flag name for Atom
  std::vector<Term> terms;         // Atom arguments, or the two sides of Eq
  std::vector<Formula> kids;       // Not: 1, And/Or: >= 2, quantifiers: 1
  std::vector<std::string> vars;   // quantifier block
  std::size_t hash = 0;
};

Formula f_true();
Formula f_false();
Formula atom(const std::string& rel, std::vector<Term> args);
Formula flag(const std::string& name);
Formula eq(const Term& a, const Term& b);
Formula neq(const Term& a, const Term& b);
Formula neg(const Formula& f);
// n-ary connectives: flattened, constants absorbed, duplicates removed, sorted.
Formula conj(std::vector<Formula> fs);
Formula disj(std::vector<Formula> fs);
Formula conj(const Formula& a, const Formula& b);
Formula disj(const Formula& a, const Formula& b);
Formula implies(const Formula& a, const Formula& b);
Formula exists(std::vector<std::string> vars, const Formula& body);
Formula forall(std::vector<std::string> vars, const Formula& body);
Formula exists(const std::string& v, const Formula& body);
Formula forall(const std::string& v, const Formula& body);

// Total structural order used to sort connective arguments.
int compare(const Formula& a, const Formula& b);
bool equal(const Formula& a, const Formula& b);

struct Signature {
  std::map<std::string, int> relations;  // arity 0 = flag
  std::set<std::string> functions;
  bool has(const std::string& s) const { return relations.count(s) || functions.count(s); }
};

Signature signature_of(const RelationalStructure& a);
Signature graph_signature(const std::string& edge = "E");
Signature forest_signature(const RootedForest& f, const std::string& fn = "parent");
// Union; throws InputError on an arity clash.
Signature merge(const Signature& a, const Signature& b);

// Throws InputError with a character offset on syntax errors, unknown symbols
// and arity mismatches.
Formula parse_formula(const std::string& text, const Signature& sig);
std::string print_formula(const Formula& f);
std::string print_term(const Term& t);

std::set<std::string> free_vars(const Formula& f);
std::set<std::string> all_vars(const Formula& f);
// Symbols used by the formula (relations with arity, functions).
Signature symbols_of(const Formula& f);
std::size_t formula_size(const Formula& f);
// Every function word (innermost first) applied to a variable in the formula, plus the empty word.
std::set<std::vector<std::string>> function_words(const Formula& f);

Formula nnf(const Formula& f);
int quantifier_rank(const Formula& f);
int alternation_rank(const Formula& f);
// Number of nested quantifier blocks; a block is a maximal run of directly nested
// quantifiers of one kind. nullopt if some block has more than m variables.
std::optional<int> batched_qrank(const Formula& f, int m);
int max_block_size(const Formula& f);

// Deterministic fresh names: base_1, base_2, ... skipping anything in `avoid`.
class FreshNames {
 public:
  explicit FreshNames(std::set<std::string> avoid = {}) : avoid_(std::move(avoid)) {}
  std::string next(const std::string& base);
  void reserve(const std::set<std::string>& names) { avoid_.insert(names.begin(), names.end()); }

 private:
  std::set<std::string> avoid_;
  std::map<std::string, int> counter_;
};

// Capture-avoiding substitution of terms for free variables.
Formula substitute(const Formula& f, const std::map<std::string, Term>& sub);
// Renames every bound variable apart from each other and from `avoid`.
Formula rename_bound(const Formula& f, FreshNames& fresh);

// Boolean combination of prenex formulas with at most q blocks each.
// Throws PreconditionError if alternation_rank(f) > q - 1.
// Prenex conversion assumes a nonempty universe.
Formula to_bsigma(const Formula& f, int q);
bool is_prenex(const Formula& f);

// Canonical batched form: quantifier blocks get variable names determined by
// their depth, syntactically equal subformulas are merged, and every boolean
// combination is rewritten as the DNF of its truth table over its distinct
// maximal subformulas. Throws BudgetExceeded past `max_atoms` distinct subformulas
// in one boolean combination. Checks that f is m-batched with at most k free variables.
Formula normalize_batched(const Formula& f, int m, int k, const Signature& sig, int max_atoms = 14);

// dist(x, y) <= r as one existential block over r-1 fresh path variables.
Formula dist_le(const std::string& x, const std::string& y, int r, FreshNames& fresh, const std::string& edge = "E");

struct Interpretation {
  std::vector<std::string> params;
  std::string x = "x";                 // free variable of domain and colour formulas
  std::string x1 = "x1", x2 = "x2";    // free variables of the edge formula
  Formula domain;
  Formula edge;
  std::map<std::string, Formula> colors;
  std::string edge_name = "E";
};

// phi over {E, colours}; result has the interpretation parameters free.
Formula rewrite_under_interpretation(const Formula& phi, const Interpretation& in);

// Ball of radius r around y0 with y1..ym deleted.
Interpretation ball_minus_interpretation(int r, int m);
// Ball of radius r around y0 with the edges at y1..ym deleted.
Interpretation ball_star_interpretation(int r, int m);

struct InterpretedStructure {
  RelationalStructure structure;
  std::vector<int> to_old;  // element of the result -> element of the input
};
InterpretedStructure apply_interpretation(const Interpretation& in, const RelationalStructure& a,
                                          const std::vector<int>& params);

}  // namespace sparsefo
