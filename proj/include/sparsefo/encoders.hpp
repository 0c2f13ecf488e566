#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsefo/logic.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

// tower(0, x) = x, tower(h+1, x) = 2^tower(h, x); saturates at UINT64_MAX.
std::uint64_t tower(int h, std::uint64_t x);

// Colour i of a forest over [m], 1-based.
std::string color_name(int i);

// Depth 1: a single leaf coloured in [m]. Depth i > 1: a root whose children carry
// pairwise non-isomorphic trees of depth i-1 (possibly none).
struct TreeOverM {
  RootedForest tree;  // node 0 is the root
  int depth = 1;
  std::string code;   // leaf: colour index; otherwise "(" sorted child codes ")"
};

// All tower(d-1, m) trees of depth d over [m], sorted by code.
// Throws BudgetExceeded when tower(d-1, m) > cap.
std::vector<TreeOverM> enumerate_trees_over_m(int d, int m, std::uint64_t cap = 1 << 16);

// Appends t below `parent` (a new root when parent < 0); returns the copy's root.
int append_tree(RootedForest& f, const RootedForest& t, int parent);

// xi(x, y) holds iff the subtrees at x and y are isomorphic, for nodes whose subtrees
// have depth at most d and whose children carry pairwise non-isomorphic subtrees.
Formula xi_formula(int d, int m, const std::string& x = "x", const std::string& y = "y",
                   const std::string& fn = "parent");

struct GraphEncoding {
  RootedForest forest;  // over [m], depth d+2, function "parent"
  Formula formula;
  int m = 1;
  int d = 1;
  std::vector<int> vertex_root;               // vertex -> root of its gadget
  std::vector<std::pair<int, int>> edges;     // edge gadget i encodes edges[i]
  std::vector<int> edge_root;
  std::vector<int> vertex_tree;               // vertex -> index among the trees of depth d+1
};

// G |= phi iff forest |= formula. phi is over E and equality. m is least with n <= tower(d, m).
GraphEncoding encode_graph(const Graph& g, const Formula& phi, int d, std::uint64_t cap = 1 << 16);

struct UncoloredForest {
  RootedForest rooted;  // no colours; pendants are children of their node
  Graph graph;
  Formula formula;      // over E
  std::vector<std::string> colors;  // colour i+1 in the pendant code
  int depth = 1;
  std::vector<int> pendants;        // per original node
  int original = 0;                 // nodes below this index are the input's
};

// Pendants per node: i+2 for colour i, plus m+4 for a root or m+3 for an uncoloured
// non-root. Quantifiers range over nodes of degree >= 3. Throws PreconditionError on a
// node with two colours.
UncoloredForest uncolor_forest(const RootedForest& f, const Formula& phi, const std::string& fn = "parent");

// Degree != 2 as a formula over E.
Formula principal_formula(const std::string& x, FreshNames& fresh, const std::string& edge = "E");
// Walk of length r+1 from x to y that never steps straight back. Between principal
// vertices of a uniform subdivision with r >= 1 internal vertices per edge, it follows one
// subdivided edge.
Formula uniform_path_formula(const std::string& x, const std::string& y, int r, FreshNames& fresh,
                             const std::string& edge = "E");

struct SubdividedSentence {
  Subdivision subdivision;
  Formula formula;
};
// Every edge becomes a path with r internal vertices; quantifiers are restricted to
// principal vertices and E to such paths. Throws PreconditionError on a degree-2 vertex.
SubdividedSentence subdivide_with_formula(const Graph& g, const Formula& phi, int r);

struct Reduction {
  GraphEncoding encoding;
  UncoloredForest uncolored;
  std::optional<int> r;
  Graph graph;                  // final plain forest
  Formula formula;
  std::vector<int> principal;   // node of the uncoloured forest -> node of graph
};

// encode_graph, uncolor_forest, then with r >= 1 every edge becomes a path with r internal
// vertices and the formula is relativised to principal vertices.
Reduction assemble_reduction(const Graph& g, const Formula& phi, int d, std::optional<int> r = std::nullopt,
                             std::uint64_t cap = 1 << 16);

}  // namespace sparsefo
