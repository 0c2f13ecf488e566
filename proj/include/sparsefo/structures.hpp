#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sparsefo {

// Simple undirected graph on vertices 0..n-1 with sorted adjacency lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n) : adj_(n) {}

  int size() const { return static_cast<int>(adj_.size()); }
  int edge_count() const { return edges_; }
  const std::vector<int>& neighbors(int v) const { return adj_.at(v); }
  int degree(int v) const { return static_cast<int>(adj_.at(v).size()); }
  bool adjacent(int u, int v) const;
  bool has_vertex(int v) const { return v >= 0 && v < size(); }

  // Returns false if the edge was already present. Loops are rejected.
  bool add_edge(int u, int v);
  int add_vertex();

  std::vector<std::pair<int, int>> edges() const;
  int max_degree() const;

  bool operator==(const Graph& o) const { return adj_ == o.adj_; }

 private:
  std::vector<std::vector<int>> adj_;
  int edges_ = 0;
};

Graph make_path(int n);
Graph make_cycle(int n);
Graph make_complete(int n);
Graph make_star(int leaves);

// Distance value that may be infinite. Never encoded as a magic integer.
struct Radius {
  bool infinite = false;
  int value = 0;
  static Radius inf() { return {true, 0}; }
  static Radius of(int v) { return {false, v}; }
  bool operator==(const Radius& o) const { return infinite == o.infinite && (infinite || value == o.value); }
  std::string str() const { return infinite ? "inf" : std::to_string(value); }
};

// BFS distances from v; -1 marks unreachable vertices.
std::vector<int> bfs_distances(const Graph& g, int v, int limit = -1);
std::vector<int> ball(const Graph& g, int v, int r);
Radius eccentricity(const Graph& g, int v);
Radius radius(const Graph& g);
Graph isolate(const Graph& g, const std::vector<int>& s);
std::vector<std::vector<int>> components(const Graph& g);

// Induced subgraph on `keep` (any order); vertex i of the result is keep_sorted[i].
struct InducedSubgraph {
  Graph graph;
  std::vector<int> to_old;
  std::vector<int> to_new;  // -1 when dropped
};
InducedSubgraph induced_subgraph(const Graph& g, std::vector<int> keep);
InducedSubgraph remove_vertices(const Graph& g, const std::vector<int>& drop);

// Canonical key of a graph up to isomorphism. Computed with colour refinement
// and individualisation. If the search tree exceeds `leaf_cap`, the key is
// still a faithful encoding of the graph but may not be canonical.
std::string graph_canonical_key(const Graph& g, int leaf_cap = 4096);

// Rooted forest. parent[root] == root.
struct RootedForest {
  std::vector<int> parent;
  std::map<std::string, std::set<int>> colors;
  std::map<std::string, bool> flags;

  int size() const { return static_cast<int>(parent.size()); }
  bool is_root(int v) const { return parent.at(v) == v; }
  std::vector<int> roots() const;
  std::vector<std::vector<int>> children() const;
  // 1 for roots.
  std::vector<int> node_depths() const;
  // Max number of vertices on a root-to-leaf path; 0 for the empty forest.
  int depth() const;
  bool has_color(const std::string& c, int v) const;
  // Throws InputError if the parent map is not a forest.
  void validate() const;
};

RootedForest build_tdk(int d, int k);
RootedForest build_fdk(int d, int k, int copies);
Graph forest_graph(const RootedForest& f);
// Tree rooted at `root`, parent pointers by BFS. Graph must be a tree on its component.
RootedForest root_tree(const Graph& g, int root);

// Witness that G contains a subdivision of H.
struct Embedding {
  std::vector<int> principal;  // H vertex -> G vertex
  // Keyed by H edge (u,v) with u < v; the full G path principal(u) ... principal(v).
  std::map<std::pair<int, int>, std::vector<int>> paths;
};

// Checks that emb witnesses an <=r-subdivision of h inside g (r < 0: no length bound).
bool verify_embedding(const Graph& h, const Graph& g, const Embedding& emb, int r, std::string* why = nullptr);

struct Subdivision {
  Graph graph;
  Embedding embedding;
};
// lengths: number of edges of the replacing path, keyed by (u,v) with u < v; missing edges get 1.
Subdivision subdivide(const Graph& h, const std::map<std::pair<int, int>, int>& lengths);
Subdivision subdivide_uniform(const Graph& h, int length);
// level_lengths[i] is the path length for edges whose child is at depth i+2.
Subdivision subdivide_levels(const RootedForest& t, const std::vector<int>& level_lengths);

// General relational structure over universe 0..n-1.
struct Relation {
  int arity = 0;
  std::set<std::vector<int>> tuples;
  bool contains(const std::vector<int>& t) const { return tuples.count(t) > 0; }
};

struct RelationalStructure {
  int n = 0;
  std::map<std::string, Relation> relations;
  std::map<std::string, std::vector<int>> functions;

  bool flag(const std::string& name) const;
  void set_flag(const std::string& name, bool value);
  void add_unary(const std::string& name, const std::set<int>& members);
  void validate() const;
};

RelationalStructure graph_structure(const Graph& g, const std::string& edge = "E");
RelationalStructure forest_structure(const RootedForest& f, const std::string& fn = "parent");
Graph gaifman_graph(const RelationalStructure& a);

}  // namespace sparsefo
