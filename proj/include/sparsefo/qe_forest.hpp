#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sparsefo/logic.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

// Valuation bits of one node: bit i set iff the node belongs to letter i.
using Letters = std::uint64_t;
// Multiset of states as (state, count) pairs sorted by state, counts >= 1.
using StateMultiset = std::vector<std::pair<int, int>>;

// Pointwise min(count, k); entries are merged and sorted first.
StateMultiset trim(int k, StateMultiset a);
// Test hook: while set, trim caps every count at 1.
void set_trim_fault(bool on);
StateMultiset multiset_of(const std::vector<int>& states, int k);

// Bottom-up automaton over trees whose nodes carry letter sets. Transitions are
// computed on demand and kept in a sparse table keyed by (trimmed multiset, letters).
class TreeValuationAutomaton {
 public:
  TreeValuationAutomaton(std::vector<std::string> letters, int threshold, bool deterministic);
  virtual ~TreeValuationAutomaton() = default;
  TreeValuationAutomaton(const TreeValuationAutomaton&) = delete;
  TreeValuationAutomaton& operator=(const TreeValuationAutomaton&) = delete;

  const std::vector<std::string>& letters() const { return letters_; }
  int threshold() const { return threshold_; }
  bool deterministic() const { return deterministic_; }

  // Successor states, sorted. The multiset is trimmed at the threshold first.
  const std::vector<int>& successors(const StateMultiset& a, Letters b) const;
  // Deterministic automata only.
  int step(const StateMultiset& a, Letters b) const;

  virtual bool accepting(int q) const = 0;
  // States from which no accepting run continues.
  virtual bool dead(int) const { return false; }
  // Resources a state uses; child states with overlapping footprints never combine.
  virtual std::uint64_t footprint(int) const { return 0; }
  // Number of distinct footprint bits; 0 when footprints are unused.
  virtual int footprint_width() const { return 0; }
  virtual int state_count() const = 0;
  virtual std::string describe(int q) const { return std::to_string(q); }

  std::size_t transitions_stored() const { return table_.size(); }
  // (k+1)^|Q| * 2^|X| * |Q| over the states created so far, saturating.
  double size_measure() const;
  // Header, accepting states, state descriptions and every stored transition.
  std::string dump() const;

 protected:
  virtual std::vector<int> compute(const StateMultiset& a, Letters b) const = 0;
  // Lookups bypass the table when false (cheap hand-built automata).
  bool memoize_ = true;

 private:
  std::vector<std::string> letters_;
  int threshold_;
  bool deterministic_;
  mutable std::map<std::pair<StateMultiset, Letters>, std::vector<int>> table_;
  mutable std::vector<int> scratch_;
};

using Automaton = std::shared_ptr<const TreeValuationAutomaton>;

struct ExplicitTransition {
  StateMultiset children;  // trimmed at the threshold
  Letters letters = 0;
  int target = 0;
};
// Finite presentation given as a table. For a deterministic automaton a missing
// key is an error (std::logic_error); for a nondeterministic one it has no successors.
Automaton make_explicit_automaton(std::vector<std::string> letters, int threshold, bool deterministic,
                                  int states, std::vector<int> accepting, std::vector<ExplicitTransition> delta);

enum class ProductKind { Union, Intersection };
Automaton product(const Automaton& a, const Automaton& b, ProductKind kind);
// Deterministic only: same runs, accepting states flipped.
Automaton complement(const Automaton& a);
// Forgets the letters in `hidden`: (A, B \ hidden, q) for every transition (A, B, q).
Automaton project(const Automaton& a, Letters hidden);
// Powerset construction.
Automaton determinize(const Automaton& a);

// Tree with one root (parent[root] == root) and the letters of each node.
struct LabelledTree {
  std::vector<int> parent;
  std::vector<Letters> letters;
  int root() const;
  std::vector<std::vector<int>> children() const;
  std::vector<int> bottom_up() const;  // every node after all of its children
};

// Unique run of a deterministic automaton.
std::vector<int> run(const TreeValuationAutomaton& a, const LabelledTree& t);
bool accepts(const TreeValuationAutomaton& a, const LabelledTree& t);

// Letter layout used for forests: free variables, bound variables, colours, flags,
// then "root" (the node is a root of the forest) and "top" (the added root of the tree).
struct ForestAlphabet {
  std::vector<std::string> free_vars;
  std::vector<std::string> bound_vars;
  std::vector<std::string> colors;
  std::vector<std::string> flags;

  std::vector<std::string> names() const;
  int var_letter(const std::string& v) const;
  int color_letter(const std::string& c) const;
  int flag_letter(const std::string& f) const;
  int root_letter() const;
  int top_letter() const;
  Letters var_mask() const;
  Letters bound_mask() const;
};

struct CompiledExistential {
  ForestAlphabet alphabet;
  Automaton product;  // deterministic, over all variables
  Automaton nfa;      // bound variables projected away
  int literals = 0;
};

// phi = exists y. psi(x, y) with psi quantifier-free over parent, colours and flags.
// The forest is read through an added top node whose children are the forest roots;
// flags are letters of the top node. Throws InputError on other symbols and
// PreconditionError on quantifiers inside psi. Function powers are clamped to d-1.
CompiledExistential automaton_from_existential(const Formula& phi, int d, const std::string& fn = "parent",
                                               std::vector<std::string> free_order = {});

// Tree of the forest plus the top node (index f.size()), with variables placed as given.
LabelledTree forest_tree(const RootedForest& f, const ForestAlphabet& al,
                         const std::map<std::string, int>& placement = {});

struct NodeLabel {
  Letters letters = 0;
  int state = 0;
  StateMultiset counts;  // children's states of the empty-valuation run, capped
  auto operator<=>(const NodeLabel&) const = default;
};

// Run on the empty valuation and the capped child-state counts of every node.
// The cap is free_vars + threshold(a).
std::vector<NodeLabel> count_star_labels(const TreeValuationAutomaton& a, const LabelledTree& t, int free_vars);

// Atomic type of a tuple in the relabelled forest: the label of every ancestor of
// every entry and where each pair of entries meets.
struct AtomicType {
  int top_label = -1;
  std::vector<std::vector<int>> chains;  // chains[u][i]: label of parent^i(a_u), up to its root
  // meet[u][w] (u < w): steps from a_u and a_w up to their lowest common ancestor, {-1,-1} if none
  std::vector<std::vector<std::pair<int, int>>> meet;
  auto operator<=>(const AtomicType&) const = default;
};

struct ForestQeOptions {
  std::string fn = "parent";
  std::string prefix = "q";           // names of new predicates and flags
  std::vector<std::string> free_order;  // default: sorted free variables
};

struct ForestQeResult {
  std::vector<std::string> free_vars;
  std::string forest_fn = "parent";
  Signature signature;   // new unary predicates and flags
  Formula formula;       // quantifier-free; the rejected types negated when there are fewer of them
  RootedForest forest;   // input forest plus the new labels
  CompiledExistential compiled;
  Automaton dfa;
  std::vector<NodeLabel> labels;        // label id -> content
  std::vector<std::string> label_names; // label id -> predicate name (flag name for the top label)
  std::vector<int> node_label;          // node -> label id; last entry is the top node
  int count_cap = 0;
  std::vector<AtomicType> accepted;     // sorted
};

// Throws PreconditionError if depth(f) > d or phi is not existential.
ForestQeResult forest_qe(const Formula& phi, int d, const RootedForest& f, const ForestQeOptions& opt = {});
AtomicType atomic_type(const ForestQeResult& hat, const std::vector<int>& tuple);
// Acceptance decided from the type and the label table alone.
bool reconstruct_run(const ForestQeResult& hat, const AtomicType& t);
// [x has type t] as a quantifier-free formula over the new labels.
Formula type_formula(const ForestQeResult& hat, const AtomicType& t);

}  // namespace sparsefo
