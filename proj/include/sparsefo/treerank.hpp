#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sparsefo/error.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

struct SubdivisionQuery {
  int d = 1;
  int k = 1;
  int r = 0;
  std::int64_t budget = kDefaultBudget;
};

enum class SearchStatus { Found, NotFound, BudgetExhausted };

struct SubdivisionSearch {
  SearchStatus status = SearchStatus::NotFound;
  Embedding embedding;  // valid when Found
};

// Looks for an <=r-subdivision of the tree t (rooted at t_root) in g, optionally
// with the root of t mapped to root_at. Backtracking with degree pruning,
// sibling symmetry breaking and a cache of rooted subtree failures.
SubdivisionSearch find_subdivision(const Graph& g, const Graph& t, int r, std::optional<int> root_at = std::nullopt,
                                   std::int64_t budget = kDefaultBudget, int t_root = 0);

// S^d_{k,r}(g): roots of <=r-subdivisions of T^d_k. Throws BudgetExceeded.
std::vector<int> subdivision_roots(const Graph& g, const SubdivisionQuery& q);

struct ReachableCenter {
  int center = -1;
  std::vector<std::vector<int>> paths;  // each from center to a distinct vertex of S
};

// Vertex with t internally disjoint paths of length <= r to distinct members of s.
// Guaranteed when |s| >= t^r + 1. Throws PreconditionError if radius(g) > r.
std::optional<ReachableCenter> many_reachable_center(const Graph& g, const std::vector<int>& s, int t, int r);

// h(d,k,l) = k * l^(d-1).
std::int64_t ramsey_branching(int d, int k, int l);

// Subtree of the tree rooted at `root` isomorphic to T^d_k with one colour per level.
// colour[v] in 1..l. Every non-leaf needs h(d,k,l) children and all leaves lie at depth d.
// Returns the chosen nodes; `parent` of the input restricted to them is the tree.
std::vector<int> monochromatic_level_subtree(const RootedForest& t, int root, const std::vector<int>& colour, int k,
                                             int l);

struct CanonicalSubdivision {
  std::vector<int> lengths;      // r_1 .. r_{d-1}, long-edge lengths per level
  std::vector<int> tree_nodes;   // chosen nodes of the subdivided tree
  std::vector<int> host_vertices;  // vertices of the host spanned by the extracted subdivision
};

// host is a subdivision of `tree` (depth d) with the given embedding; extracts a
// (r_1..r_{d-1})-subdivision of T^d_k. Throws InputError on a malformed embedding.
CanonicalSubdivision canonical_subdivision_extract(const RootedForest& tree, const Graph& host, const Embedding& emb,
                                                   int k, int r);

// Repeatedly deletes vertices of degree < k/2. nullopt when nothing survives.
std::optional<InducedSubgraph> peel_min_degree(const Graph& g, int k);

// Greedy leaf-by-leaf embedding of a tree into a graph of minimum degree >= |t|.
Embedding embed_tree_min_degree(const Graph& g, const Graph& t);

struct DepthProfile {
  int depth = 0;          // largest d found
  bool exact = true;      // false when the budget ran out before d+1 was refuted
  std::optional<Embedding> witness;  // for T^depth_k
};

// Largest d <= max_d such that g contains an <=r-subdivision of T^d_k.
DepthProfile depth_profile(const Graph& g, int r, int k, int max_d, std::int64_t budget = kDefaultBudget);

}  // namespace sparsefo
