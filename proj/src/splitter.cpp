#include "sparsefo/splitter.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>

#include "sparsefo/treerank.hpp"

namespace sparsefo {

namespace {

constexpr std::int64_t kSat = std::numeric_limits<std::int64_t>::max();

std::int64_t sat_add(std::int64_t a, std::int64_t b) { return a > kSat - b ? kSat : a + b; }
std::int64_t sat_mul(std::int64_t a, std::int64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > kSat / b ? kSat : a * b;
}
std::int64_t sat_pow(std::int64_t a, int e) {
  std::int64_t out = 1;
  for (int i = 0; i < e; ++i) out = sat_mul(out, a);
  return out;
}

std::string round_msg(int round, const std::string& what) { return "round " + std::to_string(round) + ": " + what; }

// Calls f on every subset of {0..n-1} of size exactly k, in lexicographic order; stops when f returns true.
template <class F>
bool for_each_subset(int n, int k, F&& f) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (f(idx)) return true;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

GameState initial_state(const Graph& g, int r, int m) {
  if (r < 0) throw PreconditionError("negative radius");
  if (m < 1) throw PreconditionError("batch size must be positive");
  GameState s;
  s.r = r;
  s.m = m;
  s.graph = g;
  s.to_orig.resize(g.size());
  for (int v = 0; v < g.size(); ++v) s.to_orig[v] = v;
  return s;
}

GameState next_state(const GameState& s, int center, const std::vector<int>& removal) {
  if (!s.graph.has_vertex(center)) throw PreconditionError(round_msg(s.round, "Localiser picked a missing vertex"));
  auto b = ball(s.graph, center, s.r);
  std::set<int> drop;
  for (int v : removal) {
    if (!std::binary_search(b.begin(), b.end(), v))
      throw PreconditionError(round_msg(s.round, "Splitter removed a vertex outside the ball"));
    if (!drop.insert(v).second) throw PreconditionError(round_msg(s.round, "Splitter removed a vertex twice"));
  }
  GameRound rec;
  rec.center = s.to_orig[center];
  for (int v : b) rec.ball.push_back(s.to_orig[v]);
  for (int v : drop) rec.removed.push_back(s.to_orig[v]);
  std::vector<int> keep;
  for (int v : b)
    if (!drop.count(v)) keep.push_back(v);
  auto sub = induced_subgraph(s.graph, keep);
  GameState out;
  out.r = s.r;
  out.m = s.m;
  out.graph = std::move(sub.graph);
  for (int v : sub.to_old) out.to_orig.push_back(s.to_orig[v]);
  out.round = s.round + 1;
  out.transcript = s.transcript;
  out.transcript.push_back(std::move(rec));
  return out;
}

GameResult play_game(const Graph& g, int r, int m, const SplitterStrategy& splitter,
                     const LocaliserStrategy& localiser, int max_rounds) {
  GameState s = initial_state(g, r, m);
  GameResult res;
  while (s.graph.size() > 0 && s.round < max_rounds) {
    int v = localiser(s);
    if (!s.graph.has_vertex(v)) throw PreconditionError(round_msg(s.round, "Localiser picked a missing vertex"));
    auto b = induced_subgraph(s.graph, ball(s.graph, v, r));
    auto removal = splitter(s, v, b);
    int batch = static_cast<int>(removal.size());
    res.max_batch = std::max(res.max_batch, batch);
    int round = s.round;
    s = next_state(s, v, removal);
    if (batch > m) {
      res.oversize_round = round;
      break;
    }
  }
  res.splitter_won = s.graph.size() == 0 && !res.oversize_round;
  res.rounds = s.round;
  res.transcript = s.transcript;
  return res;
}

LocaliserStrategy greedy_localiser() {
  return [](const GameState& s) {
    int best = 0;
    std::size_t size = 0;
    for (int v = 0; v < s.graph.size(); ++v) {
      auto b = ball(s.graph, v, s.r);
      if (b.size() > size) {
        size = b.size();
        best = v;
      }
    }
    return best;
  };
}

SplitterStrategy greedy_splitter() {
  return [](const GameState& s, int, const InducedSubgraph& b) {
    std::vector<int> order(b.graph.size());
    for (int i = 0; i < b.graph.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return b.graph.degree(x) > b.graph.degree(y); });
    order.resize(std::min<std::size_t>(order.size(), s.m));
    std::vector<int> out;
    for (int i : order) out.push_back(b.to_old[i]);
    return out;
  };
}

SplitterAudit audit_splitter(const Graph& g, int r, int m, const SplitterStrategy& splitter, int max_rounds) {
  SplitterAudit audit;
  auto rec = [&](auto&& self, const GameState& s) -> void {
    if (s.graph.size() == 0 || s.round > max_rounds) {
      int len = s.graph.size() == 0 ? s.round : max_rounds + 1;
      if (len > audit.worst_rounds || audit.worst_line.empty()) {
        audit.worst_rounds = std::max(audit.worst_rounds, len);
        audit.worst_line = s.transcript;
      }
      return;
    }
    for (int v = 0; v < s.graph.size(); ++v) {
      auto b = induced_subgraph(s.graph, ball(s.graph, v, r));
      auto removal = splitter(s, v, b);
      audit.max_batch = std::max(audit.max_batch, static_cast<int>(removal.size()));
      self(self, next_state(s, v, removal));
      if (audit.worst_rounds > max_rounds) return;
    }
  };
  rec(rec, initial_state(g, r, m));
  return audit;
}

int audit_localiser(const Graph& g, int r, int m, const LocaliserStrategy& localiser, int cap, std::int64_t budget) {
  Budget b(budget, "localiser audit budget");
  auto rec = [&](auto&& self, const GameState& s) -> int {
    if (s.graph.size() == 0 || s.round >= cap) return s.round;
    int v = localiser(s);
    auto ball_vs = ball(s.graph, v, r);
    int n = static_cast<int>(ball_vs.size());
    int best = cap;
    for (int k = 0; k <= std::min(m, n) && best > s.round + 1; ++k) {
      for_each_subset(n, k, [&](const std::vector<int>& idx) {
        b.charge();
        std::vector<int> removal;
        for (int i : idx) removal.push_back(ball_vs[i]);
        best = std::min(best, self(self, next_state(s, v, removal)));
        return best <= s.round + 1;
      });
    }
    return best;
  };
  return rec(rec, initial_state(g, r, m));
}

namespace {

class RankSolver {
 public:
  RankSolver(int r, int m, std::int64_t budget) : r_(r), m_(m), budget_(budget, "game rank budget") {}

  int rank(const Graph& g) {
    if (g.size() == 0) return 0;
    int best = 0;
    for (const auto& comp : components(g)) best = std::max(best, connected(induced_subgraph(g, comp).graph));
    return best;
  }

 private:
  int connected(const Graph& g) {
    auto key = graph_canonical_key(g);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    int best = 1;
    for (int v = 0; v < g.size(); ++v) {
      auto b = ball(g, v, r_);
      int n = static_cast<int>(b.size());
      if (n <= m_) continue;  // one round
      auto bg = induced_subgraph(g, b).graph;
      // Removing more never hurts Splitter, so batches of exactly m suffice.
      int val = std::numeric_limits<int>::max();
      for_each_subset(n, m_, [&](const std::vector<int>& idx) {
        budget_.charge();
        val = std::min(val, 1 + rank(remove_vertices(bg, idx).graph));
        return val <= best;
      });
      best = std::max(best, val);
    }
    memo_.emplace(std::move(key), best);
    return best;
  }

  int r_, m_;
  Budget budget_;
  std::unordered_map<std::string, int> memo_;
};

}  // namespace

std::optional<int> game_rank_exact(const Graph& g, int r, int m, int cap, std::int64_t budget) {
  if (r < 0 || m < 1) throw PreconditionError("game needs r >= 0 and m >= 1");
  RankSolver solver(r, m, budget);
  int d = solver.rank(g);
  if (d > cap) return std::nullopt;
  return d;
}

StrategyConstants strategy_constants(int d, int r, std::int64_t k) {
  if (d < 1 || r < 1 || k < 1) throw PreconditionError("strategy constants need d, r, k >= 1");
  StrategyConstants c;
  if (d >= 2) {
    // vertices and edges of T^{d-1}_k
    std::int64_t vertices = 0, level = 1;
    for (int i = 0; i < d - 1; ++i) {
      vertices = sat_add(vertices, level);
      level = sat_mul(level, k);
    }
    c.z = sat_add(vertices, sat_mul(r - 1, vertices - 1));
  }
  c.t = sat_mul(k, sat_add(c.z, r));
  c.k_prime = sat_add(c.t, r);
  c.c = sat_pow(c.t, r);
  return c;
}

std::int64_t winning_batch_size(int d, int r, std::int64_t k) {
  if (d < 1 || k < 1) throw PreconditionError("m(d,r,k) needs d, k >= 1");
  if (r == 0) return 1;
  if (d == 1) {
    std::int64_t sum = 0;
    for (int i = 0; i <= r; ++i) sum = sat_add(sum, sat_pow(k - 1, i));
    return sum;
  }
  auto c = strategy_constants(d + 1, r, k);
  return std::max(c.c, winning_batch_size(d - 1, r, c.k_prime));
}

SplitterStrategy splitter_strategy_first_moves(int d, int r, std::int64_t k) {
  if (d < 1 || r < 0 || k < 1) throw PreconditionError("strategy needs d, k >= 1 and r >= 0");
  // ks[j] is the branching excluded at the start of round j
  std::vector<std::int64_t> ks{k};
  if (r >= 1)
    for (int j = 0; j + 1 < d; ++j) ks.push_back(strategy_constants(d - j + 1, r, ks[j]).k_prime);
  return [d, r, ks](const GameState& s, int, const InducedSubgraph& b) {
    int j = s.round;
    int dj = d - j;
    std::vector<int> out;
    if (r == 0 || dj <= 1) {
      out = b.to_old;
      return out;
    }
    std::int64_t next = ks[j + 1];
    if (next > b.graph.size()) return out;  // no vertex has that many neighbours
    auto roots = subdivision_roots(b.graph, {dj, static_cast<int>(next), r - 1});
    for (int v : roots) out.push_back(b.to_old[v]);
    return out;
  };
}

namespace {

struct Branches {
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> vertices;  // host vertices of the branch entering each node
  std::vector<int> principal;
  int root = 0;
};

Branches branch_table(const RootedForest& tree, const Embedding& emb) {
  Branches b;
  b.parent = tree.parent;
  b.children = tree.children();
  b.principal = emb.principal;
  b.root = tree.roots().at(0);
  int n = tree.size();
  b.vertices.assign(n, {});
  auto depth = tree.node_depths();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return depth[x] > depth[y]; });
  for (int v : order) {
    auto& vs = b.vertices[v];
    vs.push_back(emb.principal[v]);
    if (v != b.root) {
      int p = tree.parent[v];
      const auto& path = emb.paths.at({std::min(p, v), std::max(p, v)});
      vs.insert(vs.end(), path.begin() + 1, path.end() - 1);
    }
    for (int c : b.children[v]) {
      vs.insert(vs.end(), b.vertices[c].begin(), b.vertices[c].end());
    }
  }
  return b;
}

}  // namespace

LocaliserStrategy localiser_strategy_subdivision(const RootedForest& tree, const Embedding& emb, const Graph& host) {
  tree.validate();
  if (tree.roots().size() != 1) throw InputError("expected a single tree");
  std::string why;
  if (!verify_embedding(forest_graph(tree), host, emb, -1, &why)) throw InputError("invalid embedding: " + why);
  auto table = std::make_shared<Branches>(branch_table(tree, emb));
  return [table](const GameState& s) {
    std::unordered_map<int, int> cur;
    for (int v = 0; v < static_cast<int>(s.to_orig.size()); ++v) cur[s.to_orig[v]] = v;
    auto fallback = [&] { return 0; };
    int node = -1;
    if (s.transcript.empty()) {
      node = table->root;
      auto it = cur.find(table->principal[node]);
      return it == cur.end() ? fallback() : it->second;
    }
    int prev = s.transcript.back().center;
    for (int v = 0; v < static_cast<int>(table->principal.size()); ++v)
      if (table->principal[v] == prev) node = v;
    if (node < 0) return fallback();
    for (int c : table->children[node]) {
      bool intact = true;
      for (int h : table->vertices[c]) intact = intact && cur.count(h);
      if (intact) return cur.at(table->principal[c]);
    }
    return fallback();
  };
}

bool localiser_guarantee_applies(const RootedForest& tree, const Embedding& emb, int radius, int m, int r) {
  int d = tree.depth() - 1;
  if (d < 1 || radius < d * (r + 1)) return false;
  auto depth = tree.node_depths();
  auto kids = tree.children();
  for (int v = 0; v < tree.size(); ++v)
    if (depth[v] <= d && static_cast<int>(kids[v].size()) < m + 1) return false;
  for (const auto& [e, path] : emb.paths)
    if (static_cast<int>(path.size()) - 2 > r) return false;
  return true;
}

int rank_block_bound(int r, int m) { return std::max(m + 1, r); }

namespace {

// Rank_1: no vertex has m+1 vertices within distance r, witnessed by a rooted tree of depth <= r.
Formula rank_one(int r, int m) {
  std::vector<std::string> z;
  for (int i = 0; i <= m; ++i) z.push_back("z" + std::to_string(i));
  std::vector<Formula> distinct;
  for (int i = 0; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) distinct.push_back(neq(z[i], z[j]));
  std::vector<Formula> trees;
  std::vector<int> p(m + 1, 0);
  // every map {1..m} -> {0..m} that is a tree rooted at 0 of depth <= r
  auto rec = [&](auto&& self, int i) -> void {
    if (i > m) {
      std::vector<Formula> edges;
      for (int v = 1; v <= m; ++v) {
        int depth = 0;
        for (int w = v; w != 0 && depth <= m; w = p[w]) ++depth;
        if (depth > r || depth > m) return;
      }
      for (int v = 1; v <= m; ++v) edges.push_back(atom("E", {z[v], z[p[v]]}));
      trees.push_back(conj(std::move(edges)));
      return;
    }
    for (int q = 0; q <= m; ++q) {
      if (q == i) continue;
      p[i] = q;
      self(self, i + 1);
    }
  };
  rec(rec, 1);
  if (trees.empty()) {
    // r = 0: all of z equal to z0, which contradicts distinctness
    for (int v = 1; v <= m; ++v) trees.push_back(eq(z[v], z[0]));
    distinct.push_back(conj(std::move(trees)));
  } else {
    distinct.push_back(disj(std::move(trees)));
  }
  return neg(exists(z, conj(std::move(distinct))));
}

Interpretation rank_interpretation(int r, int m) {
  Interpretation in = ball_star_interpretation(r, m);
  // keep one quantifier level in the domain guard so every level costs the same
  if (r <= 1) in.domain = exists("w_pad", conj(eq(Term("w_pad"), Term(in.x)), substitute(in.domain, {{in.x, Term("w_pad")}})));
  return in;
}

}  // namespace

Formula rankdown_formula(int d, int r, int m) {
  if (d < 1 || r < 0 || m < 1) throw PreconditionError("rank sentences need d, m >= 1 and r >= 0");
  return rewrite_under_interpretation(rank_sentence(d, r, m), rank_interpretation(r, m));
}

Formula rank_sentence(int d, int r, int m) {
  if (d < 1 || r < 0 || m < 1) throw PreconditionError("rank sentences need d, m >= 1 and r >= 0");
  if (d == 1) return rank_one(r, m);
  Formula down = rankdown_formula(d - 1, r, m);
  std::string u = "u" + std::to_string(d);
  std::vector<std::string> s;
  std::map<std::string, Term> sub{{"y0", Term(u)}};
  for (int i = 1; i <= m; ++i) {
    s.push_back("s" + std::to_string(d) + "_" + std::to_string(i));
    sub["y" + std::to_string(i)] = Term(s.back());
  }
  return forall(u, exists(s, substitute(down, sub)));
}

}  // namespace sparsefo
