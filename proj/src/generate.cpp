#include "sparsefo/generate.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

#include "sparsefo/error.hpp"

namespace sparsefo {

std::uint64_t default_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv("SPARSEFO_SEED")) {
    char* end = nullptr;
    auto v = std::strtoull(s, &end, 10);
    if (end && *end == '\0' && end != s) return v;
  }
  return fallback;
}

int uniform_int(Rng& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

bool coin(Rng& rng, double p) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p; }

Graph random_gnp(int n, double p, Rng& rng) {
  Graph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng, p)) g.add_edge(u, v);
  return g;
}

Graph random_bounded_degree(int n, int max_degree, int tries, Rng& rng) {
  Graph g(n);
  if (n < 2) return g;
  for (int i = 0; i < tries; ++i) {
    int u = uniform_int(rng, 0, n - 1), v = uniform_int(rng, 0, n - 1);
    if (u == v || g.degree(u) >= max_degree || g.degree(v) >= max_degree) continue;
    g.add_edge(u, v);
  }
  return g;
}

Graph random_tree(int n, Rng& rng) {
  Graph g(n);
  for (int v = 1; v < n; ++v) g.add_edge(v, uniform_int(rng, 0, v - 1));
  return g;
}

RootedForest random_forest(int n, int max_depth, const std::vector<std::string>& colors, double colour_p, Rng& rng) {
  if (max_depth < 1) throw PreconditionError("forest depth must be positive");
  RootedForest f;
  std::vector<int> depth;
  for (int v = 0; v < n; ++v) {
    std::vector<int> hosts;
    for (int u = 0; u < v; ++u)
      if (depth[u] < max_depth) hosts.push_back(u);
    if (hosts.empty() || coin(rng, 0.15)) {
      f.parent.push_back(v);
      depth.push_back(1);
    } else {
      int p = hosts[uniform_int(rng, 0, static_cast<int>(hosts.size()) - 1)];
      f.parent.push_back(p);
      depth.push_back(depth[p] + 1);
    }
  }
  for (const auto& c : colors) {
    auto& set = f.colors[c];
    for (int v = 0; v < n; ++v)
      if (coin(rng, colour_p)) set.insert(v);
  }
  return f;
}

Subdivision random_subdivision(const Graph& h, int r, Rng& rng) {
  std::map<std::pair<int, int>, int> lengths;
  for (auto e : h.edges()) lengths[e] = uniform_int(rng, 1, r + 1);
  return subdivide(h, lengths);
}

Subdivision random_subdivided_tree(int d, int kmax, int r, Rng& rng) {
  Graph t(1);
  std::vector<int> level{0};
  for (int depth = 2; depth <= d; ++depth) {
    std::vector<int> next;
    for (int p : level) {
      int k = uniform_int(rng, 1, kmax);
      for (int i = 0; i < k; ++i) {
        int c = t.add_vertex();
        t.add_edge(p, c);
        next.push_back(c);
      }
    }
    level = std::move(next);
  }
  return random_subdivision(t, r, rng);
}

namespace {

Term random_term(const std::vector<std::string>& scope, bool forest, int max_exp, const std::string& fn, Rng& rng) {
  Term t(scope[uniform_int(rng, 0, static_cast<int>(scope.size()) - 1)]);
  if (forest) t = apply_fn(fn, uniform_int(rng, 0, max_exp), t);
  return t;
}

Formula random_literal(const Signature& sig, const std::vector<std::string>& scope, bool forest, int max_exp,
                       const std::string& fn, Rng& rng) {
  std::vector<std::pair<std::string, int>> rels(sig.relations.begin(), sig.relations.end());
  if (scope.empty()) {
    std::vector<std::string> flags;
    for (const auto& [name, ar] : rels)
      if (ar == 0) flags.push_back(name);
    if (flags.empty()) return coin(rng, 0.5) ? f_true() : f_false();
    Formula a = flag(flags[uniform_int(rng, 0, static_cast<int>(flags.size()) - 1)]);
    return coin(rng, 0.4) ? neg(a) : a;
  }
  int pick = uniform_int(rng, 0, static_cast<int>(rels.size()));
  Formula a;
  if (pick == static_cast<int>(rels.size())) {
    a = eq(random_term(scope, forest, max_exp, fn, rng), random_term(scope, forest, max_exp, fn, rng));
  } else {
    std::vector<Term> args;
    for (int i = 0; i < rels[pick].second; ++i) args.push_back(random_term(scope, forest, max_exp, fn, rng));
    a = atom(rels[pick].first, std::move(args));
  }
  return coin(rng, 0.4) ? neg(a) : a;
}

}  // namespace

Formula random_formula(const Signature& sig, const FormulaShape& shape, Rng& rng) {
  int counter = 0;
  // polarity-adjusted kind of the last quantifier on the branch: 0 none, 1 exists, 2 forall
  std::function<Formula(int, std::vector<std::string>, int, int, bool, int)> gen =
      [&](int q, std::vector<std::string> scope, int last, int alts, bool negated, int size) -> Formula {
    if (size <= 1 || (q == 0 && size <= 2)) {
      return random_literal(sig, scope, shape.forest_terms, shape.max_exponent, shape.function, rng);
    }
    int choice = uniform_int(rng, 0, 9);
    if (q > 0 && choice < 5) {
      int want = uniform_int(rng, 1, 2);
      int eff = negated ? 3 - want : want;
      if (last != 0 && eff != last && alts + 1 > shape.max_alternation) {
        eff = last;
        want = negated ? 3 - eff : eff;
      }
      int nalts = alts + (last != 0 && eff != last ? 1 : 0);
      int k = uniform_int(rng, 1, std::min(shape.max_block, q));
      std::vector<std::string> vars;
      for (int i = 0; i < k; ++i) vars.push_back("v" + std::to_string(counter++));
      auto inner = scope;
      inner.insert(inner.end(), vars.begin(), vars.end());
      Formula body = gen(q - k, inner, eff, nalts, negated, size - 1);
      return want == 1 ? exists(vars, body) : forall(vars, body);
    }
    if (choice < 7) return neg(gen(q, scope, last, alts, !negated, size - 1));
    int left = uniform_int(rng, 1, std::max(1, size - 2));
    Formula a = gen(q, scope, last, alts, negated, left);
    Formula b = gen(q, scope, last, alts, negated, std::max(1, size - 1 - left));
    return coin(rng, 0.5) ? conj(a, b) : disj(a, b);
  };
  return gen(shape.qrank, shape.free, 0, 0, false, shape.size);
}

Formula random_existential(const Signature& sig, const std::vector<std::string>& free,
                           const std::vector<std::string>& bound, int literals, bool forest_terms, int max_exponent,
                           Rng& rng, const std::string& function) {
  std::vector<std::string> scope = free;
  scope.insert(scope.end(), bound.begin(), bound.end());
  std::function<Formula(int)> gen = [&](int k) -> Formula {
    if (k <= 1) return random_literal(sig, scope, forest_terms, max_exponent, function, rng);
    int left = uniform_int(rng, 1, k - 1);
    Formula a = gen(left), b = gen(k - left);
    return coin(rng, 0.65) ? conj(a, b) : disj(a, b);
  };
  return exists(bound, gen(literals));
}

MixedInstance random_mixed_instance(Rng& rng, int max_n) {
  MixedInstance in;
  const int n = uniform_int(rng, 1, max_n);
  auto colour = [&](const Graph& g) {
    auto a = graph_structure(g);
    std::set<int> c1;
    for (int v = 0; v < n; ++v)
      if (coin(rng, 0.4)) c1.insert(v);
    a.add_unary("C1", c1);
    return a;
  };
  switch (uniform_int(rng, 0, 3)) {
    case 0: in.structure = colour(random_gnp(n, 0.3, rng)); in.family = "gnp"; break;
    case 1: in.structure = colour(random_bounded_degree(n, 3, 40, rng)); in.family = "bounded-degree"; break;
    case 2: in.structure = colour(random_tree(n, rng)); in.family = "tree"; break;
    default:
      in.structure = forest_structure(random_forest(n, 4, {"C1"}, 0.4, rng));
      in.forest_terms = true;
      in.family = "forest";
  }
  in.structure.set_flag("F", coin(rng, 0.5));
  in.signature = signature_of(in.structure);
  return in;
}

Formula random_mc_formula(const MixedInstance& in, int max_qrank, Rng& rng) {
  FormulaShape shape;
  shape.qrank = uniform_int(rng, 1, max_qrank);
  shape.max_alternation = 2;
  shape.max_block = uniform_int(rng, 1, 2);
  shape.size = uniform_int(rng, 3, 7);
  shape.forest_terms = in.forest_terms;
  return random_formula(in.signature, shape, rng);
}

}  // namespace sparsefo
