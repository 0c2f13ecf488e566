#include "sparsefo/structures.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "sparsefo/error.hpp"

namespace sparsefo {

bool Graph::adjacent(int u, int v) const {
  const auto& a = adj_.at(u);
  return std::binary_search(a.begin(), a.end(), v);
}

bool Graph::add_edge(int u, int v) {
  if (!has_vertex(u) || !has_vertex(v)) throw InputError("edge endpoint out of range");
  if (u == v) throw InputError("self-loop " + std::to_string(u));
  auto& a = adj_[u];
  auto it = std::lower_bound(a.begin(), a.end(), v);
  if (it != a.end() && *it == v) return false;
  a.insert(it, v);
  auto& b = adj_[v];
  b.insert(std::lower_bound(b.begin(), b.end(), u), u);
  ++edges_;
  return true;
}

int Graph::add_vertex() {
  adj_.emplace_back();
  return size() - 1;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < size(); ++u)
    for (int v : adj_[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

int Graph::max_degree() const {
  int m = 0;
  for (const auto& a : adj_) m = std::max(m, static_cast<int>(a.size()));
  return m;
}

Graph make_path(int n) {
  Graph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

Graph make_cycle(int n) {
  Graph g = make_path(n);
  if (n >= 3) g.add_edge(n - 1, 0);
  return g;
}

Graph make_complete(int n) {
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

Graph make_star(int leaves) {
  Graph g(leaves + 1);
  for (int i = 1; i <= leaves; ++i) g.add_edge(0, i);
  return g;
}

std::vector<int> bfs_distances(const Graph& g, int v, int limit) {
  if (!g.has_vertex(v)) throw InputError("unknown vertex " + std::to_string(v));
  std::vector<int> dist(g.size(), -1);
  std::deque<int> q{v};
  dist[v] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    if (limit >= 0 && dist[u] == limit) continue;
    for (int w : g.neighbors(u))
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

std::vector<int> ball(const Graph& g, int v, int r) {
  auto dist = bfs_distances(g, v, r);
  std::vector<int> out;
  for (int u = 0; u < g.size(); ++u)
    if (dist[u] >= 0) out.push_back(u);
  return out;
}

Radius eccentricity(const Graph& g, int v) {
  auto dist = bfs_distances(g, v);
  int e = 0;
  for (int d : dist) {
    if (d < 0) return Radius::inf();
    e = std::max(e, d);
  }
  return Radius::of(e);
}

Radius radius(const Graph& g) {
  if (g.size() == 0) return Radius::of(0);
  Radius best = Radius::inf();
  for (int v = 0; v < g.size(); ++v) {
    Radius e = eccentricity(g, v);
    if (e.infinite) return Radius::inf();
    if (best.infinite || e.value < best.value) best = e;
  }
  return best;
}

Graph isolate(const Graph& g, const std::vector<int>& s) {
  std::vector<char> in(g.size(), 0);
  for (int v : s) {
    if (!g.has_vertex(v)) throw InputError("unknown vertex " + std::to_string(v));
    in[v] = 1;
  }
  Graph out(g.size());
  for (auto [u, v] : g.edges())
    if (!in[u] && !in[v]) out.add_edge(u, v);
  return out;
}

std::vector<std::vector<int>> components(const Graph& g) {
  std::vector<int> comp(g.size(), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < g.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> c{s};
    comp[s] = static_cast<int>(out.size());
    for (size_t i = 0; i < c.size(); ++i)
      for (int w : g.neighbors(c[i]))
        if (comp[w] < 0) {
          comp[w] = comp[s];
          c.push_back(w);
        }
    std::sort(c.begin(), c.end());
    out.push_back(std::move(c));
  }
  return out;
}

InducedSubgraph induced_subgraph(const Graph& g, std::vector<int> keep) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  InducedSubgraph out;
  out.to_new.assign(g.size(), -1);
  for (size_t i = 0; i < keep.size(); ++i) {
    if (!g.has_vertex(keep[i])) throw InputError("unknown vertex " + std::to_string(keep[i]));
    out.to_new[keep[i]] = static_cast<int>(i);
  }
  out.to_old = keep;
  out.graph = Graph(static_cast<int>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i)
    for (int w : g.neighbors(keep[i]))
      if (out.to_new[w] > static_cast<int>(i)) out.graph.add_edge(static_cast<int>(i), out.to_new[w]);
  return out;
}

InducedSubgraph remove_vertices(const Graph& g, const std::vector<int>& drop) {
  std::vector<char> gone(g.size(), 0);
  for (int v : drop) gone.at(v) = 1;
  std::vector<int> keep;
  for (int v = 0; v < g.size(); ++v)
    if (!gone[v]) keep.push_back(v);
  return induced_subgraph(g, keep);
}

namespace {

// Equitable refinement of an ordered partition given as colour per vertex.
// Colours are renumbered so that the result depends only on the input colours.
std::vector<int> refine(const Graph& g, std::vector<int> col) {
  int n = g.size();
  int ncol = col.empty() ? 0 : *std::max_element(col.begin(), col.end()) + 1;
  while (true) {
    std::vector<std::pair<std::vector<int>, int>> sig(n);
    for (int v = 0; v < n; ++v) {
      std::vector<int> s{col[v]};
      std::vector<int> nb;
      for (int w : g.neighbors(v)) nb.push_back(col[w]);
      std::sort(nb.begin(), nb.end());
      s.insert(s.end(), nb.begin(), nb.end());
      sig[v] = {std::move(s), v};
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return sig[a].first < sig[b].first; });
    std::vector<int> next(n);
    int c = -1;
    for (int i = 0; i < n; ++i) {
      if (i == 0 || sig[order[i]].first != sig[order[i - 1]].first) ++c;
      next[order[i]] = c;
    }
    if (c + 1 == ncol) return next;
    ncol = c + 1;
    col = std::move(next);
  }
}

std::string key_for_order(const Graph& g, const std::vector<int>& col) {
  int n = g.size();
  std::vector<int> pos(n);
  for (int v = 0; v < n; ++v) pos[col[v]] = v;
  std::string key = std::to_string(n) + ":";
  key.reserve(key.size() + n * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) key.push_back(g.adjacent(pos[i], pos[j]) ? '1' : '0');
  return key;
}

void canon_search(const Graph& g, const std::vector<int>& col, std::string& best, int& leaves, int cap) {
  int n = g.size();
  std::vector<int> size(n, 0);
  for (int c : col) ++size[c];
  int target = -1;
  for (int c = 0; c < n; ++c)
    if (size[c] > 1 && (target < 0 || size[c] < size[target])) target = c;
  if (target < 0) {
    std::string k = key_for_order(g, col);
    if (best.empty() || k < best) best = std::move(k);
    ++leaves;
    return;
  }
  std::vector<int> tried;
  for (int v = 0; v < n; ++v) {
    if (col[v] != target) continue;
    if (leaves >= cap && !best.empty()) return;
    // Twins with the same neighbourhood outside each other give the same subtree.
    bool twin = false;
    for (int u : tried) {
      std::vector<int> a = g.neighbors(u), b = g.neighbors(v);
      a.erase(std::remove(a.begin(), a.end(), v), a.end());
      b.erase(std::remove(b.begin(), b.end(), u), b.end());
      if (a == b) {
        twin = true;
        break;
      }
    }
    if (twin) continue;
    tried.push_back(v);
    std::vector<int> c2(n);
    for (int w = 0; w < n; ++w) c2[w] = 2 * col[w] + (col[w] > target || (col[w] == target && w != v) ? 1 : 0);
    canon_search(g, refine(g, c2), best, leaves, cap);
  }
}

}  // namespace

std::string graph_canonical_key(const Graph& g, int leaf_cap) {
  if (g.size() == 0) return "0:";
  std::string best;
  int leaves = 0;
  canon_search(g, refine(g, std::vector<int>(g.size(), 0)), best, leaves, leaf_cap);
  return best;
}

std::vector<int> RootedForest::roots() const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (is_root(v)) out.push_back(v);
  return out;
}

std::vector<std::vector<int>> RootedForest::children() const {
  std::vector<std::vector<int>> ch(size());
  for (int v = 0; v < size(); ++v)
    if (!is_root(v)) ch[parent[v]].push_back(v);
  return ch;
}

std::vector<int> RootedForest::node_depths() const {
  std::vector<int> d(size(), 0);
  for (int v = 0; v < size(); ++v) {
    int steps = 1;
    int u = v;
    while (parent[u] != u) {
      u = parent[u];
      if (++steps > size()) throw InputError("parent map has a cycle");
    }
    d[v] = steps;
  }
  return d;
}

int RootedForest::depth() const {
  auto d = node_depths();
  return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

bool RootedForest::has_color(const std::string& c, int v) const {
  auto it = colors.find(c);
  return it != colors.end() && it->second.count(v) > 0;
}

void RootedForest::validate() const {
  for (int v = 0; v < size(); ++v)
    if (parent[v] < 0 || parent[v] >= size()) throw InputError("parent out of range at node " + std::to_string(v));
  node_depths();
  for (const auto& [name, set] : colors)
    for (int v : set)
      if (v < 0 || v >= size()) throw InputError("colour " + name + " names unknown node");
}

RootedForest build_fdk(int d, int k, int copies) {
  if (d < 1) throw PreconditionError("tree depth must be at least 1");
  if (k < 1) throw PreconditionError("branching must be at least 1");
  RootedForest f;
  for (int c = 0; c < copies; ++c) {
    int root = f.size();
    f.parent.push_back(root);
    std::vector<int> level{root};
    for (int depth = 2; depth <= d; ++depth) {
      std::vector<int> next;
      for (int p : level)
        for (int i = 0; i < k; ++i) {
          next.push_back(f.size());
          f.parent.push_back(p);
        }
      level = std::move(next);
    }
  }
  return f;
}

RootedForest build_tdk(int d, int k) { return build_fdk(d, k, 1); }

Graph forest_graph(const RootedForest& f) {
  Graph g(f.size());
  for (int v = 0; v < f.size(); ++v)
    if (!f.is_root(v)) g.add_edge(v, f.parent[v]);
  return g;
}

RootedForest root_tree(const Graph& g, int root) {
  RootedForest f;
  f.parent.assign(g.size(), -1);
  std::deque<int> q{root};
  f.parent[root] = root;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int w : g.neighbors(u))
      if (f.parent[w] < 0) {
        f.parent[w] = u;
        q.push_back(w);
      }
  }
  for (int v = 0; v < g.size(); ++v)
    if (f.parent[v] < 0) f.parent[v] = v;
  return f;
}

bool verify_embedding(const Graph& h, const Graph& g, const Embedding& emb, int r, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (static_cast<int>(emb.principal.size()) != h.size()) return fail("principal map has wrong size");
  std::vector<char> used(g.size(), 0);
  for (int p : emb.principal) {
    if (!g.has_vertex(p)) return fail("principal vertex out of range");
    if (used[p]) return fail("principal map not injective");
    used[p] = 1;
  }
  auto hedges = h.edges();
  if (emb.paths.size() != hedges.size()) return fail("path count differs from edge count");
  for (auto [u, v] : hedges) {
    auto it = emb.paths.find({u, v});
    if (it == emb.paths.end()) return fail("missing path for an edge");
    const auto& path = it->second;
    if (path.size() < 2) return fail("path too short");
    if (path.front() != emb.principal[u] || path.back() != emb.principal[v]) return fail("path endpoints wrong");
    if (r >= 0 && static_cast<int>(path.size()) - 2 > r) return fail("path longer than allowed");
    for (size_t i = 0; i + 1 < path.size(); ++i)
      if (!g.adjacent(path[i], path[i + 1])) return fail("path uses a non-edge");
    for (size_t i = 1; i + 1 < path.size(); ++i) {
      if (!g.has_vertex(path[i]) || used[path[i]]) return fail("paths not internally disjoint");
      used[path[i]] = 1;
    }
  }
  return true;
}

Subdivision subdivide(const Graph& h, const std::map<std::pair<int, int>, int>& lengths) {
  Subdivision s;
  s.graph = Graph(h.size());
  s.embedding.principal.resize(h.size());
  std::iota(s.embedding.principal.begin(), s.embedding.principal.end(), 0);
  for (auto [u, v] : h.edges()) {
    int len = 1;
    auto it = lengths.find({u, v});
    if (it != lengths.end()) len = it->second;
    if (len < 1) throw PreconditionError("subdivision length must be positive");
    std::vector<int> path{u};
    for (int i = 1; i < len; ++i) path.push_back(s.graph.add_vertex());
    path.push_back(v);
    for (size_t i = 0; i + 1 < path.size(); ++i) s.graph.add_edge(path[i], path[i + 1]);
    s.embedding.paths[{u, v}] = std::move(path);
  }
  return s;
}

Subdivision subdivide_uniform(const Graph& h, int length) {
  std::map<std::pair<int, int>, int> lengths;
  for (auto e : h.edges()) lengths[e] = length;
  return subdivide(h, lengths);
}

Subdivision subdivide_levels(const RootedForest& t, const std::vector<int>& level_lengths) {
  Graph h = forest_graph(t);
  auto depth = t.node_depths();
  std::map<std::pair<int, int>, int> lengths;
  for (int v = 0; v < t.size(); ++v) {
    if (t.is_root(v)) continue;
    size_t idx = static_cast<size_t>(depth[v] - 2);
    if (idx >= level_lengths.size()) throw PreconditionError("missing level length");
    lengths[{std::min(v, t.parent[v]), std::max(v, t.parent[v])}] = level_lengths[idx];
  }
  return subdivide(h, lengths);
}

bool RelationalStructure::flag(const std::string& name) const {
  auto it = relations.find(name);
  if (it == relations.end() || it->second.arity != 0) throw InputError("unknown flag " + name);
  return !it->second.tuples.empty();
}

void RelationalStructure::set_flag(const std::string& name, bool value) {
  Relation r;
  r.arity = 0;
  if (value) r.tuples.insert(std::vector<int>{});
  relations[name] = std::move(r);
}

void RelationalStructure::add_unary(const std::string& name, const std::set<int>& members) {
  Relation r;
  r.arity = 1;
  for (int v : members) r.tuples.insert({v});
  relations[name] = std::move(r);
}

void RelationalStructure::validate() const {
  for (const auto& [name, rel] : relations)
    for (const auto& t : rel.tuples) {
      if (static_cast<int>(t.size()) != rel.arity) throw InputError("tuple of wrong arity in " + name);
      for (int x : t)
        if (x < 0 || x >= n) throw InputError("tuple outside universe in " + name);
    }
  for (const auto& [name, f] : functions) {
    if (static_cast<int>(f.size()) != n) throw InputError("function " + name + " is not total");
    for (int x : f)
      if (x < 0 || x >= n) throw InputError("function " + name + " leaves universe");
  }
}

RelationalStructure graph_structure(const Graph& g, const std::string& edge) {
  RelationalStructure a;
  a.n = g.size();
  Relation e;
  e.arity = 2;
  for (auto [u, v] : g.edges()) {
    e.tuples.insert({u, v});
    e.tuples.insert({v, u});
  }
  a.relations[edge] = std::move(e);
  return a;
}

RelationalStructure forest_structure(const RootedForest& f, const std::string& fn) {
  RelationalStructure a;
  a.n = f.size();
  a.functions[fn] = f.parent;
  for (const auto& [name, set] : f.colors) a.add_unary(name, set);
  for (const auto& [name, value] : f.flags) a.set_flag(name, value);
  return a;
}

Graph gaifman_graph(const RelationalStructure& a) {
  Graph g(a.n);
  for (const auto& [name, rel] : a.relations)
    for (const auto& t : rel.tuples)
      for (size_t i = 0; i < t.size(); ++i)
        for (size_t j = i + 1; j < t.size(); ++j)
          if (t[i] != t[j]) g.add_edge(t[i], t[j]);
  for (const auto& [name, f] : a.functions)
    for (int x = 0; x < a.n; ++x)
      if (f[x] != x) g.add_edge(x, f[x]);
  return g;
}

}  // namespace sparsefo
