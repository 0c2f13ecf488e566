#include "sparsefo/treerank.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

namespace sparsefo {

namespace {

void require_tree(const Graph& t, int root) {
  if (t.size() == 0) throw PreconditionError("pattern tree is empty");
  if (!t.has_vertex(root)) throw PreconditionError("pattern root out of range");
  if (t.edge_count() != t.size() - 1 || components(t).size() != 1) throw PreconditionError("pattern is not a tree");
}

// Backtracking search for rooted subdivisions of subtrees of a fixed pattern tree.
class Searcher {
 public:
  Searcher(const Graph& g, const Graph& t, int t_root, int r, Budget& budget)
      : g_(g), t_(t), r_(r), budget_(budget) {
    int nt = t.size();
    parent_.assign(nt, -1);
    children_.assign(nt, {});
    std::vector<int> order{t_root};
    parent_[t_root] = t_root;
    for (size_t i = 0; i < order.size(); ++i)
      for (int w : t.neighbors(order[i]))
        if (parent_[w] < 0) {
          parent_[w] = order[i];
          children_[order[i]].push_back(w);
          order.push_back(w);
        }
    size_.assign(nt, 1);
    code_.assign(nt, 0);
    std::map<std::vector<int>, int> intern;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int v = *it;
      std::vector<int> kids;
      for (int c : children_[v]) {
        size_[v] += size_[c];
        kids.push_back(code_[c]);
      }
      std::sort(kids.begin(), kids.end());
      code_[v] = intern.emplace(kids, static_cast<int>(intern.size())).first->second;
    }
    for (auto& ch : children_)
      std::sort(ch.begin(), ch.end(), [&](int a, int b) {
        if (size_[a] != size_[b]) return size_[a] > size_[b];
        if (code_[a] != code_[b]) return code_[a] < code_[b];
        return a < b;
      });
    memo_.assign(intern.size(), std::vector<signed char>(g.size(), -1));
  }

  int root_degree(int v) const { return static_cast<int>(children_[v].size()); }

  bool feasible(int v, int x) {
    if (children_[v].empty()) return true;
    auto& m = memo_[code_[v]][x];
    if (m < 0) m = rooted(v, x, nullptr) ? 1 : 0;
    return m == 1;
  }

  // Embeds the subtree of v with v at x, avoiding nothing else.
  bool rooted(int v, int x, Embedding* out) {
    if (g_.degree(x) < root_degree(v)) return false;
    State s;
    s.img.assign(t_.size(), -1);
    s.first.assign(t_.size(), -1);
    s.path.assign(t_.size(), {});
    s.used.assign(g_.size(), 0);
    s.img[v] = x;
    s.used[x] = 1;
    preorder(v, s.order);
    s.order.erase(s.order.begin());
    if (!place(s, 0)) return false;
    if (out) {
      out->principal.assign(t_.size(), -1);
      for (int c = 0; c < t_.size(); ++c) out->principal[c] = s.img[c];
      for (int c : s.order) {
        int p = parent_[c];
        auto path = s.path[c];
        if (p > c) std::reverse(path.begin(), path.end());
        out->paths[{std::min(p, c), std::max(p, c)}] = path;
      }
    }
    return true;
  }

 private:
  struct State {
    std::vector<int> order, img, first;
    std::vector<std::vector<int>> path;
    std::vector<char> used;
  };

  void preorder(int v, std::vector<int>& out) const {
    out.push_back(v);
    for (int c : children_[v]) preorder(c, out);
  }

  bool place(State& s, size_t i) {
    if (i == s.order.size()) return true;
    int c = s.order[i];
    int p = parent_[c];
    int a = s.img[p];
    const auto& sib = children_[p];
    int idx = static_cast<int>(std::find(sib.begin(), sib.end(), c) - sib.begin());
    int lo = -1;
    for (int j = idx - 1; j >= 0; --j)
      if (code_[sib[j]] == code_[c]) {
        lo = s.first[sib[j]];
        break;
      }
    int free_nb = 0;
    for (int y : g_.neighbors(a))
      if (!s.used[y]) ++free_nb;
    if (free_nb < static_cast<int>(sib.size()) - idx) return false;
    int need = static_cast<int>(children_[c].size()) + 1;
    std::vector<int> path{a};
    return extend(s, i, c, need, lo, path);
  }

  bool extend(State& s, size_t i, int c, int need, int lo, std::vector<int>& path) {
    int u = path.back();
    int len = static_cast<int>(path.size());  // edges after the next step
    for (int y : g_.neighbors(u)) {
      if (s.used[y]) continue;
      if (len == 1 && y <= lo) continue;
      budget_.charge();
      path.push_back(y);
      if (g_.degree(y) >= need && feasible(c, y)) {
        s.img[c] = y;
        s.first[c] = path[1];
        s.path[c] = path;
        s.used[y] = 1;  // interior vertices are already marked
        if (place(s, i + 1)) return true;
        s.used[y] = 0;
        s.img[c] = -1;
      }
      if (len < r_ + 1) {
        s.used[y] = 1;
        bool ok = extend(s, i, c, need, lo, path);
        s.used[y] = 0;
        if (ok) return true;
      }
      path.pop_back();
    }
    return false;
  }

  const Graph& g_;
  const Graph& t_;
  int r_;
  Budget& budget_;
  std::vector<int> parent_, size_, code_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<signed char>> memo_;
};

void check_witness(const Graph& t, const Graph& g, const Embedding& emb, int r) {
  std::string why;
  if (!verify_embedding(t, g, emb, r, &why)) throw std::logic_error("subdivision witness rejected: " + why);
}

}  // namespace

SubdivisionSearch find_subdivision(const Graph& g, const Graph& t, int r, std::optional<int> root_at,
                                   std::int64_t budget, int t_root) {
  require_tree(t, t_root);
  if (r < 0) throw PreconditionError("negative subdivision bound");
  if (root_at && !g.has_vertex(*root_at)) throw InputError("root vertex out of range");
  Budget b(budget, "subdivision search budget");
  Searcher s(g, t, t_root, r, b);
  SubdivisionSearch out;
  try {
    std::vector<int> roots;
    if (root_at) {
      roots.push_back(*root_at);
    } else {
      for (int x = 0; x < g.size(); ++x) roots.push_back(x);
    }
    for (int x : roots) {
      Embedding emb;
      if (s.rooted(t_root, x, &emb)) {
        check_witness(t, g, emb, r);
        out.status = SearchStatus::Found;
        out.embedding = std::move(emb);
        return out;
      }
    }
  } catch (const BudgetExceeded&) {
    out.status = SearchStatus::BudgetExhausted;
    return out;
  }
  out.status = SearchStatus::NotFound;
  return out;
}

std::vector<int> subdivision_roots(const Graph& g, const SubdivisionQuery& q) {
  if (q.d < 1 || q.k < 1 || q.r < 0 || q.budget <= 0) throw PreconditionError("bad subdivision query");
  Graph t = forest_graph(build_tdk(q.d, q.k));
  Budget b(q.budget, "subdivision search budget");
  Searcher s(g, t, 0, q.r, b);
  std::vector<int> out;
  for (int x = 0; x < g.size(); ++x)
    if (g.degree(x) >= s.root_degree(0) && s.feasible(0, x)) out.push_back(x);
  return out;
}

std::optional<ReachableCenter> many_reachable_center(const Graph& g, const std::vector<int>& s, int t, int r) {
  if (t < 1 || r < 0) throw PreconditionError("t must be positive and r nonnegative");
  if (g.size() == 0) return std::nullopt;
  int center = -1;
  for (int v = 0; v < g.size() && center < 0; ++v) {
    Radius e = eccentricity(g, v);
    if (!e.infinite && e.value <= r) center = v;
  }
  if (center < 0) throw PreconditionError("graph radius exceeds r");
  std::vector<char> in_s(g.size(), 0);
  for (int v : s) {
    if (!g.has_vertex(v)) throw InputError("vertex out of range");
    in_s[v] = 1;
  }
  RootedForest bfs = root_tree(g, center);
  auto kids = bfs.children();
  auto depth = bfs.node_depths();
  std::vector<int> order{center};
  for (size_t i = 0; i < order.size(); ++i)
    for (int c : kids[order[i]]) order.push_back(c);
  // nearest member of S in each subtree
  std::vector<int> near(g.size(), -1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    if (in_s[v]) {
      near[v] = v;
      continue;
    }
    for (int c : kids[v]) {
      int w = near[c];
      if (w >= 0 && (near[v] < 0 || depth[w] < depth[near[v]] || (depth[w] == depth[near[v]] && w < near[v])))
        near[v] = w;
    }
  }
  for (int u = 0; u < g.size(); ++u) {
    std::vector<int> hits;
    for (int c : kids[u])
      if (near[c] >= 0) hits.push_back(c);
    if (static_cast<int>(hits.size()) < t) continue;
    std::sort(hits.begin(), hits.end());
    ReachableCenter out;
    out.center = u;
    for (int i = 0; i < t; ++i) {
      std::vector<int> path;
      for (int w = near[hits[i]]; w != u; w = bfs.parent[w]) path.push_back(w);
      path.push_back(u);
      std::reverse(path.begin(), path.end());
      out.paths.push_back(std::move(path));
    }
    return out;
  }
  return std::nullopt;
}

std::int64_t ramsey_branching(int d, int k, int l) {
  if (d < 1 || k < 1 || l < 1) throw PreconditionError("h(d,k,l) needs positive arguments");
  const std::int64_t cap = std::numeric_limits<std::int64_t>::max() / 4;
  std::int64_t h = k;
  for (int i = 1; i < d; ++i) h = h > cap / l ? cap : h * l;
  return h;
}

std::vector<int> monochromatic_level_subtree(const RootedForest& t, int root, const std::vector<int>& colour, int k,
                                             int l) {
  if (static_cast<int>(colour.size()) != t.size()) throw InputError("colouring size mismatch");
  if (root < 0 || root >= t.size() || !t.is_root(root)) throw InputError("not a root");
  auto kids = t.children();
  auto depth = t.node_depths();
  std::vector<int> nodes{root};
  int d = 1;
  for (size_t i = 0; i < nodes.size(); ++i) {
    int v = nodes[i];
    d = std::max(d, depth[v]);
    if (colour[v] < 1 || colour[v] > l) throw PreconditionError("colour outside 1..l");
    for (int c : kids[v]) nodes.push_back(c);
  }
  std::int64_t h = ramsey_branching(d, k, l);
  for (int v : nodes) {
    if (kids[v].empty() && depth[v] != d) throw PreconditionError("leaves must all lie at the last level");
    if (!kids[v].empty() && static_cast<std::int64_t>(kids[v].size()) < h)
      throw PreconditionError("branching below h(d,k,l)");
  }
  struct Part {
    std::vector<int> colours, nodes;
  };
  auto solve = [&](auto&& self, int v) -> Part {
    Part out{{colour[v]}, {v}};
    if (kids[v].empty()) return out;
    std::map<std::vector<int>, std::vector<Part>> groups;
    for (int c : kids[v]) {
      Part p = self(self, c);
      groups[p.colours].push_back(std::move(p));
    }
    for (auto& [vec, parts] : groups) {
      if (static_cast<int>(parts.size()) < k) continue;
      out.colours.insert(out.colours.end(), vec.begin(), vec.end());
      for (int i = 0; i < k; ++i) out.nodes.insert(out.nodes.end(), parts[i].nodes.begin(), parts[i].nodes.end());
      return out;
    }
    throw std::logic_error("no monochromatic group of size k");
  };
  auto part = solve(solve, root);
  std::sort(part.nodes.begin(), part.nodes.end());
  return part.nodes;
}

CanonicalSubdivision canonical_subdivision_extract(const RootedForest& tree, const Graph& host, const Embedding& emb,
                                                   int k, int r) {
  tree.validate();
  auto roots = tree.roots();
  if (roots.size() != 1) throw InputError("expected a single rooted tree");
  std::string why;
  if (!verify_embedding(forest_graph(tree), host, emb, r, &why)) throw InputError("malformed subdivision: " + why);
  int root = roots[0];
  std::vector<int> colour(tree.size(), 1);
  for (int v = 0; v < tree.size(); ++v)
    if (v != root) {
      int p = tree.parent[v];
      colour[v] = static_cast<int>(emb.paths.at({std::min(p, v), std::max(p, v)}).size()) - 1;
    }
  CanonicalSubdivision out;
  out.tree_nodes = monochromatic_level_subtree(tree, root, colour, k, r + 1);
  auto depth = tree.node_depths();
  int d = tree.depth();
  out.lengths.assign(std::max(0, d - 1), 0);
  std::vector<int> host_set;
  for (int v : out.tree_nodes) {
    host_set.push_back(emb.principal[v]);
    if (v == root) continue;
    out.lengths[depth[v] - 2] = colour[v];
    int p = tree.parent[v];
    const auto& path = emb.paths.at({std::min(p, v), std::max(p, v)});
    host_set.insert(host_set.end(), path.begin() + 1, path.end() - 1);
  }
  std::sort(host_set.begin(), host_set.end());
  out.host_vertices = std::move(host_set);
  return out;
}

std::optional<InducedSubgraph> peel_min_degree(const Graph& g, int k) {
  int n = g.size();
  std::vector<int> deg(n);
  std::vector<char> gone(n, 0);
  std::deque<int> q;
  for (int v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    if (2 * deg[v] < k) {
      gone[v] = 1;
      q.push_back(v);
    }
  }
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : g.neighbors(v))
      if (!gone[w] && 2 * --deg[w] < k) {
        gone[w] = 1;
        q.push_back(w);
      }
  }
  std::vector<int> keep;
  for (int v = 0; v < n; ++v)
    if (!gone[v]) keep.push_back(v);
  if (keep.empty()) return std::nullopt;
  return induced_subgraph(g, keep);
}

Embedding embed_tree_min_degree(const Graph& g, const Graph& t) {
  require_tree(t, 0);
  int nt = t.size();
  if (g.size() == 0) throw PreconditionError("host graph is empty");
  for (int v = 0; v < g.size(); ++v)
    if (g.degree(v) < nt - 1) throw PreconditionError("host minimum degree below |T| - 1");
  Embedding emb;
  emb.principal.assign(nt, -1);
  std::vector<char> used(g.size(), 0);
  std::vector<int> order{0};
  emb.principal[0] = 0;
  used[0] = 1;
  for (size_t i = 0; i < order.size(); ++i) {
    int p = order[i];
    for (int c : t.neighbors(p)) {
      if (emb.principal[c] >= 0) continue;
      int a = emb.principal[p], pick = -1;
      for (int y : g.neighbors(a))
        if (!used[y]) {
          pick = y;
          break;
        }
      if (pick < 0) throw std::logic_error("greedy tree embedding stuck");
      used[pick] = 1;
      emb.principal[c] = pick;
      std::vector<int> path{a, pick};
      if (p > c) std::reverse(path.begin(), path.end());
      emb.paths[{std::min(p, c), std::max(p, c)}] = path;
      order.push_back(c);
    }
  }
  check_witness(t, g, emb, 0);
  return emb;
}

DepthProfile depth_profile(const Graph& g, int r, int k, int max_d, std::int64_t budget) {
  if (k < 1 || r < 0 || max_d < 1) throw PreconditionError("bad depth profile query");
  DepthProfile out;
  if (g.size() == 0) return out;
  out.depth = 1;
  Embedding single;
  single.principal = {0};
  out.witness = single;
  for (int d = 2; d <= max_d; ++d) {
    auto res = find_subdivision(g, forest_graph(build_tdk(d, k)), r, std::nullopt, budget);
    if (res.status == SearchStatus::Found) {
      out.depth = d;
      out.witness = res.embedding;
      continue;
    }
    if (res.status == SearchStatus::BudgetExhausted) out.exact = false;
    break;
  }
  return out;
}

}  // namespace sparsefo
