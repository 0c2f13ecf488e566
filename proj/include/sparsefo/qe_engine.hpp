#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sparsefo/error.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/oracle.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

// DFS forest, roots at the smallest vertex of each component.
RootedForest dfs_elimination_forest(const Graph& g);
// Every edge joins an ancestor and a descendant.
bool is_elimination_forest(const Graph& g, const RootedForest& f);

// R_h(a) holds iff R(parent^h1(a), ..., parent^hk(a)), for every h with entries
// below hbound and at least one 0. Unary relations and flags are copied as they are.
struct EncodedRelations {
  RootedForest forest;
  int hbound = 1;
  std::map<std::string, int> arity;  // encoded relations (arity >= 2)
  std::set<std::string> nonempty;    // predicate names with at least one member
};
std::string encoded_name(const std::string& rel, const std::vector<int>& h);
// Offset tuples of length k with entries below hbound and at least one 0, in lexicographic order.
std::vector<std::vector<int>> offset_tuples(int k, int hbound);
// Only relations in `only` are encoded when it is nonempty. Throws PreconditionError when a
// tuple of an encoded relation is not on a root path of f.
EncodedRelations encode_relations(const RelationalStructure& a, const RootedForest& f, int hbound,
                                  const std::set<std::string>& only = {});
// R(t1..tk) becomes OR_i OR_h (R_h(t_i) & AND_j fn^hj(t_i) = t_j). With `prune`, atoms of
// predicates outside enc.nonempty are dropped.
Formula rewrite_atoms_forest(const Formula& phi, const EncodedRelations& enc, const std::string& fn,
                             bool prune = true);

struct QeStats {
  int stages = 0;
  int pieces = 0;
  int max_forest_depth = 0;
  std::size_t labels = 0;
  std::size_t max_literals = 0;
};

struct QeResult {
  std::vector<std::string> free_vars;
  Signature signature;             // new symbols: unary predicates, unary functions, flags
  Formula formula;                 // quantifier-free
  RelationalStructure structure;   // input plus the new symbols
  QeStats stats;
};

struct TdQeOptions {
  std::optional<RootedForest> forest;  // elimination forest; DFS of the Gaifman graph if absent
  std::string fn;                      // function of the input equal to the forest; empty: add one
  std::string prefix = "q";
  std::vector<std::string> free_order;
};

// phi = exists y. psi with psi quantifier-free. Functions other than the forest's are
// turned into graph relations over extra existential variables. With d >= 0 the forest
// depth must be at most 2^d.
QeResult td_qe(const Formula& phi, const RelationalStructure& a, int d = -1, const TdQeOptions& opt = {});

struct LtdColoring {
  int palette = 0;
  std::vector<int> color;
  int p = 0;
};

// Exact decision of treedepth <= k by vertex removal over components.
bool treedepth_at_most(const Graph& g, int k, std::int64_t budget = kDefaultBudget);
int treedepth_exact(const Graph& g, std::int64_t budget = kDefaultBudget);
// Every nonempty D with |D| <= p induces a subgraph of treedepth <= |D|.
bool verify_ltd_coloring(const Graph& g, const LtdColoring& chi, int p, std::int64_t budget = kDefaultBudget);
LtdColoring level_coloring(const RootedForest& f, int p);
// Elimination forest from repeatedly removing a vertex that best splits its component.
RootedForest centered_elimination_forest(const Graph& g);
// Smallest of the DFS and centred level colourings, then colour classes merged while the
// verifier accepts. Falls back to one colour per vertex.
LtdColoring low_treedepth_coloring(const Graph& g, int p, std::int64_t budget = kDefaultBudget);

struct BeQeOptions {
  TdQeOptions td;                   // forest and fn are used only when the whole palette is one range
  std::size_t max_ranges = 20000;
};

// Disjunction over colour ranges D with |D| = min(p, palette) of td_qe on the substructure
// coloured by D, guarded by a membership predicate per range. Results are superimposed.
// Requires p >= |x y|.
QeResult existential_qe_be(const Formula& phi, const RelationalStructure& a, const LtdColoring& chi,
                           const BeQeOptions& opt = {});

struct FullQeOptions {
  std::string prefix = "s";
  std::vector<std::string> free_order;
};

// Any first-order formula: negations flip, connectives superimpose, and each quantifier block
// is eliminated after its body. All stages share one elimination forest.
QeResult full_qe(const Formula& phi, const RelationalStructure& a, const FullQeOptions& opt = {});

bool model_check_qe(const RelationalStructure& a, const Formula& phi);

// Pointwise evaluation of a quantifier-free result.
class QueryAnswerer {
 public:
  explicit QueryAnswerer(QeResult r);
  bool operator()(const std::vector<int>& tuple) const;
  const std::vector<std::string>& free_vars() const { return r_->free_vars; }
  const QeResult& result() const { return *r_; }

 private:
  std::shared_ptr<const QeResult> r_;
  std::shared_ptr<Evaluator> ev_;
};
QueryAnswerer query_structure(QeResult r);

// One minimal representative per rank-q class of (A, pinned, u), atomic types taken over `words`.
std::vector<int> selector(const RelationalStructure& a, int q, const std::vector<int>& pinned,
                          const std::set<std::vector<std::string>>& words = {{}}, std::int64_t budget = kDefaultBudget);
bool model_check_selector(const RelationalStructure& a, const Formula& phi, std::int64_t budget = kDefaultBudget);

}  // namespace sparsefo
