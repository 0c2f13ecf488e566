#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sparsefo/logic.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

using Rng = std::mt19937_64;

// Seed from SPARSEFO_SEED when set, else the fallback.
std::uint64_t default_seed(std::uint64_t fallback = 20240601);

int uniform_int(Rng& rng, int lo, int hi);  // inclusive
bool coin(Rng& rng, double p);

Graph random_gnp(int n, double p, Rng& rng);
Graph random_bounded_degree(int n, int max_degree, int tries, Rng& rng);
Graph random_tree(int n, Rng& rng);
// Forest with at most max_depth levels; each node gets each colour with probability colour_p.
RootedForest random_forest(int n, int max_depth, const std::vector<std::string>& colors, double colour_p, Rng& rng);
// <=r-subdivision of a random tree of depth d with branching in [1, kmax].
Subdivision random_subdivided_tree(int d, int kmax, int r, Rng& rng);
Subdivision random_subdivision(const Graph& h, int r, Rng& rng);

struct FormulaShape {
  std::vector<std::string> free;   // free variables that must stay free
  int qrank = 2;                   // quantifier rank bound
  int max_alternation = 2;
  int max_block = 1;               // variables per quantifier node
  int size = 4;                    // rough number of connective/atom nodes
  bool forest_terms = false;       // allow parent^i terms
  int max_exponent = 2;
  std::string function = "parent";
};

// Random formula over the relations of sig (functions only when forest_terms).
Formula random_formula(const Signature& sig, const FormulaShape& shape, Rng& rng);
// Random existential formula: exists block over `bound` variables of a quantifier-free matrix.
Formula random_existential(const Signature& sig, const std::vector<std::string>& free,
                           const std::vector<std::string>& bound, int literals, bool forest_terms, int max_exponent,
                           Rng& rng, const std::string& function = "parent");

// Coloured G(n,p), bounded-degree graph, tree or coloured forest with a parent function,
// each with unary C1 and a flag F.
struct MixedInstance {
  RelationalStructure structure;
  Signature signature;
  bool forest_terms = false;
  std::string family;
};
MixedInstance random_mixed_instance(Rng& rng, int max_n);
// Sentence of quantifier rank in [1, max_qrank], alternation rank <= 2, blocks of <= 2 variables.
Formula random_mc_formula(const MixedInstance& in, int max_qrank, Rng& rng);

}  // namespace sparsefo
