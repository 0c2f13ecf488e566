#include "sparsefo/encoders.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "sparsefo/error.hpp"

namespace sparsefo {

std::uint64_t tower(int h, std::uint64_t x) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  for (int i = 0; i < h; ++i) {
    if (x >= 64) return kMax;
    x = std::uint64_t{1} << x;
  }
  return x;
}

std::string color_name(int i) { return "C" + std::to_string(i); }

int append_tree(RootedForest& f, const RootedForest& t, int parent) {
  const int base = f.size();
  for (int v = 0; v < t.size(); ++v) {
    int p = t.parent[v];
    if (p == v) f.parent.push_back(parent < 0 ? base + v : parent);
    else f.parent.push_back(base + p);
  }
  for (const auto& [c, nodes] : t.colors) {
    auto& dst = f.colors[c];
    for (int v : nodes) dst.insert(base + v);
  }
  for (int v = 0; v < t.size(); ++v)
    if (t.parent[v] == v) return base + v;
  return base;
}

std::vector<TreeOverM> enumerate_trees_over_m(int d, int m, std::uint64_t cap) {
  if (d < 1 || m < 1) throw PreconditionError("trees over [m] need d >= 1 and m >= 1");
  if (tower(d - 1, static_cast<std::uint64_t>(m)) > cap)
    throw BudgetExceeded("tower(" + std::to_string(d - 1) + ", " + std::to_string(m) + ") exceeds the cap");
  std::vector<TreeOverM> level;
  for (int c = 1; c <= m; ++c) {
    TreeOverM t;
    t.tree.parent = {0};
    for (int i = 1; i <= m; ++i) t.tree.colors[color_name(i)];
    t.tree.colors[color_name(c)].insert(0);
    t.code = std::to_string(c);
    level.push_back(std::move(t));
  }
  std::sort(level.begin(), level.end(), [](const auto& a, const auto& b) { return a.code < b.code; });
  for (int depth = 2; depth <= d; ++depth) {
    std::vector<TreeOverM> next;
    const std::uint64_t subsets = std::uint64_t{1} << level.size();
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      TreeOverM t;
      t.depth = depth;
      t.tree.parent = {0};
      for (int i = 1; i <= m; ++i) t.tree.colors[color_name(i)];
      std::vector<std::string> codes;
      for (std::size_t i = 0; i < level.size(); ++i) {
        if (!(mask >> i & 1)) continue;
        append_tree(t.tree, level[i].tree, 0);
        codes.push_back(level[i].code);
      }
      std::sort(codes.begin(), codes.end());
      t.code = "(";
      for (std::size_t i = 0; i < codes.size(); ++i) t.code += (i ? "," : "") + codes[i];
      t.code += ")";
      next.push_back(std::move(t));
    }
    std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.code < b.code; });
    level = std::move(next);
  }
  return level;
}

namespace {

Formula child_of(const std::string& c, const std::string& p, const std::string& fn) {
  return conj(eq(Term(c, {fn}), Term(p)), neq(Term(c), Term(p)));
}

Formula same_colors(const std::string& x, const std::string& y, int m) {
  std::vector<Formula> parts;
  for (int i = 1; i <= m; ++i) {
    auto a = atom(color_name(i), {Term(x)});
    auto b = atom(color_name(i), {Term(y)});
    parts.push_back(disj(conj(a, b), conj(neg(a), neg(b))));
  }
  return conj(parts);
}

Formula xi_rec(int h, int m, const std::string& x, const std::string& y, const std::string& fn, FreshNames& fresh) {
  if (h == 0) return f_false();
  const std::string x1 = fresh.next("a"), y1 = fresh.next("b");
  auto forth = forall(x1, implies(child_of(x1, x, fn), exists(y1, conj(child_of(y1, y, fn), xi_rec(h - 1, m, x1, y1, fn, fresh)))));
  const std::string x2 = fresh.next("a"), y2 = fresh.next("b");
  auto back = forall(y2, implies(child_of(y2, y, fn), exists(x2, conj(child_of(x2, x, fn), xi_rec(h - 1, m, x2, y2, fn, fresh)))));
  return conj({same_colors(x, y, m), forth, back});
}

// Quantifiers guarded per variable, atoms and equalities replaced by `leaf`.
Formula relativize(const Formula& f, const std::function<Formula(const Node&)>& leaf,
                   const std::function<Formula(const std::string&)>& guard) {
  switch (f->kind) {
    case Kind::True:
    case Kind::False:
      return f;
    case Kind::Atom:
    case Kind::Eq:
      return leaf(*f);
    case Kind::Not:
      return neg(relativize(f->kids[0], leaf, guard));
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> kids;
      for (const auto& k : f->kids) kids.push_back(relativize(k, leaf, guard));
      return f->kind == Kind::And ? conj(kids) : disj(kids);
    }
    case Kind::Exists:
    case Kind::Forall: {
      std::vector<Formula> gs;
      for (const auto& v : f->vars) gs.push_back(guard(v));
      auto body = relativize(f->kids[0], leaf, guard);
      return f->kind == Kind::Exists ? exists(f->vars, conj(conj(gs), body)) : forall(f->vars, implies(conj(gs), body));
    }
  }
  return f;
}

void require_plain_terms(const Node& n) {
  for (const auto& t : n.terms)
    if (!t.funcs.empty()) throw InputError("function term " + print_term(t) + " in a graph formula");
}

// At least k distinct neighbours of x satisfying `pred` (given the neighbour's name).
Formula at_least_neighbors(const std::string& x, int k, FreshNames& fresh, const std::string& edge,
                           const std::function<Formula(const std::string&)>& pred) {
  if (k <= 0) return f_true();
  std::vector<std::string> ys;
  std::vector<Formula> parts;
  for (int i = 0; i < k; ++i) {
    ys.push_back(fresh.next("n"));
    parts.push_back(atom(edge, {Term(x), Term(ys.back())}));
    if (pred) parts.push_back(pred(ys.back()));
    for (int j = 0; j < i; ++j) parts.push_back(neq(Term(ys[j]), Term(ys[i])));
  }
  return exists(ys, conj(parts));
}

// Builds the formulas reading an uncoloured forest.
struct PendantReader {
  int m = 0;
  int depth = 1;
  std::string edge = "E";
  FreshNames* fresh = nullptr;

  Formula degree_one(const std::string& y) const { return neg(at_least_neighbors(y, 2, *fresh, edge, nullptr)); }
  Formula original(const std::string& x) const { return at_least_neighbors(x, 3, *fresh, edge, nullptr); }
  Formula pendants_in(const std::string& z, const std::vector<int>& counts) const {
    std::vector<Formula> parts;
    auto leaf = [this](const std::string& y) { return degree_one(y); };
    for (int k : counts)
      parts.push_back(conj(at_least_neighbors(z, k, *fresh, edge, leaf), neg(at_least_neighbors(z, k + 1, *fresh, edge, leaf))));
    return disj(parts);
  }
  Formula root(const std::string& z) const {
    return at_least_neighbors(z, m + 4, *fresh, edge, [this](const std::string& y) { return degree_one(y); });
  }
  Formula color(const std::string& z, int c) const { return pendants_in(z, {c + 2, m + 6 + c}); }
  // v is reached from u by one step and then climbs to a root without returning to u.
  Formula up(const std::string& v, const std::string& u) const {
    std::vector<Formula> alts{root(v)};
    for (int j = 1; j < depth; ++j) {
      std::vector<std::string> ws{u, v};
      std::vector<std::string> bound;
      std::vector<Formula> parts;
      for (int i = 0; i < j; ++i) {
        bound.push_back(fresh->next("w"));
        ws.push_back(bound.back());
        const std::size_t t = ws.size() - 1;
        parts.push_back(atom(edge, {Term(ws[t - 1]), Term(ws[t])}));
        parts.push_back(neq(Term(ws[t]), Term(ws[t - 2])));
      }
      parts.push_back(root(bound.back()));
      alts.push_back(exists(bound, conj(parts)));
    }
    return disj(alts);
  }
  Formula parent(const std::string& u, const std::string& v) const {
    auto r = root(u);
    return disj(conj(r, eq(Term(u), Term(v))), conj({neg(r), atom(edge, {Term(u), Term(v)}), up(v, u)}));
  }
};

}  // namespace

Formula xi_formula(int d, int m, const std::string& x, const std::string& y, const std::string& fn) {
  if (d < 1) throw PreconditionError("xi needs d >= 1");
  FreshNames fresh({x, y});
  return xi_rec(d, m, x, y, fn, fresh);
}

GraphEncoding encode_graph(const Graph& g, const Formula& phi, int d, std::uint64_t cap) {
  if (d < 1) throw PreconditionError("encode_graph needs d >= 1");
  const int n = g.size();
  GraphEncoding out;
  out.d = d;
  out.m = 1;
  while (tower(d, static_cast<std::uint64_t>(out.m)) < static_cast<std::uint64_t>(n)) ++out.m;
  const int m = out.m;
  auto trees = enumerate_trees_over_m(d + 1, m, cap);

  RootedForest& f = out.forest;
  for (int i = 1; i <= m; ++i) f.colors[color_name(i)];
  for (int v = 0; v < n; ++v) {
    const int r = f.size();
    f.parent.push_back(r);
    append_tree(f, trees[static_cast<std::size_t>(v)].tree, r);
    out.vertex_root.push_back(r);
    out.vertex_tree.push_back(v);
  }
  for (auto [u, v] : g.edges()) {
    const int r = f.size();
    f.parent.push_back(r);
    append_tree(f, trees[static_cast<std::size_t>(u)].tree, r);
    append_tree(f, trees[static_cast<std::size_t>(v)].tree, r);
    out.edges.emplace_back(u, v);
    out.edge_root.push_back(r);
  }

  FreshNames fresh(all_vars(phi));
  const std::string fn = "parent";
  auto vertex_guard = [&](const std::string& x) {
    const std::string c = fresh.next("c"), c1 = fresh.next("c"), c2 = fresh.next("c");
    return conj({eq(Term(x, {fn}), Term(x)), exists(c, child_of(c, x, fn)),
                 neg(exists({c1, c2}, conj({child_of(c1, x, fn), child_of(c2, x, fn), neq(Term(c1), Term(c2))})))});
  };
  auto leaf = [&](const Node& a) -> Formula {
    require_plain_terms(a);
    if (a.kind == Kind::Eq) return eq(a.terms[0], a.terms[1]);
    if (a.name != "E" || a.terms.size() != 2) throw InputError("encode_graph: unexpected symbol " + a.name);
    const std::string& x = a.terms[0].var;
    const std::string& y = a.terms[1].var;
    const std::string r = fresh.next("r"), z1 = fresh.next("z"), z2 = fresh.next("z");
    const std::string cx = fresh.next("c"), cy = fresh.next("c");
    return exists({r, z1, z2, cx, cy},
                  conj({eq(Term(r, {fn}), Term(r)), child_of(z1, r, fn), child_of(z2, r, fn), neq(Term(z1), Term(z2)),
                        child_of(cx, x, fn), child_of(cy, y, fn), xi_rec(d + 1, m, z1, cx, fn, fresh),
                        xi_rec(d + 1, m, z2, cy, fn, fresh)}));
  };
  out.formula = relativize(phi, leaf, vertex_guard);
  return out;
}

UncoloredForest uncolor_forest(const RootedForest& f, const Formula& phi, const std::string& fn) {
  f.validate();
  UncoloredForest out;
  std::set<std::string> names;
  for (const auto& [c, _] : f.colors) names.insert(c);
  auto sym = symbols_of(phi);
  for (const auto& [r, k] : sym.relations) {
    if (k == 1) names.insert(r);
    else if (k != 0) throw InputError("uncolor_forest: relation " + r + " of arity " + std::to_string(k));
  }
  for (const auto& s : sym.functions)
    if (s != fn) throw InputError("uncolor_forest: unknown function " + s);
  out.colors.assign(names.begin(), names.end());
  const int m = static_cast<int>(out.colors.size());
  std::map<std::string, int> index;
  for (int i = 0; i < m; ++i) index[out.colors[static_cast<std::size_t>(i)]] = i + 1;

  const int n = f.size();
  out.original = n;
  out.depth = std::max(1, f.depth());
  std::vector<int> color(static_cast<std::size_t>(n), 0);
  for (const auto& [c, nodes] : f.colors)
    for (int v : nodes) {
      if (color[static_cast<std::size_t>(v)]) throw PreconditionError("node " + std::to_string(v) + " has two colours");
      color[static_cast<std::size_t>(v)] = index[c];
    }
  out.rooted.parent = f.parent;
  for (int v = 0; v < n; ++v) {
    const int c = color[static_cast<std::size_t>(v)];
    int k = c ? c + 2 : 0;
    if (f.is_root(v)) k += m + 4;
    else if (!c) k += m + 3;
    out.pendants.push_back(k);
    for (int i = 0; i < k; ++i) out.rooted.parent.push_back(v);
  }
  out.graph = forest_graph(out.rooted);

  FreshNames fresh(all_vars(phi));
  PendantReader rd{m, out.depth, "E", &fresh};
  // parent^k(x) as a chain of fresh variables; returns the last one.
  auto flatten = [&](const Term& t, std::vector<std::string>& bound, std::vector<Formula>& parts) {
    std::string cur = t.var;
    for (const auto& g : t.funcs) {
      if (g != fn) throw InputError("uncolor_forest: unknown function " + g);
      std::string nxt = fresh.next("p");
      bound.push_back(nxt);
      parts.push_back(rd.parent(cur, nxt));
      cur = nxt;
    }
    return cur;
  };
  auto leaf = [&](const Node& a) -> Formula {
    if (a.kind == Kind::Atom && a.terms.empty()) {
      auto it = f.flags.find(a.name);
      return it != f.flags.end() && it->second ? f_true() : f_false();
    }
    std::vector<std::string> bound;
    std::vector<Formula> parts;
    std::vector<std::string> at;
    for (const auto& t : a.terms) at.push_back(flatten(t, bound, parts));
    if (a.kind == Kind::Eq) parts.push_back(eq(Term(at[0]), Term(at[1])));
    else parts.push_back(rd.color(at[0], index.at(a.name)));
    return bound.empty() ? conj(parts) : exists(bound, conj(parts));
  };
  out.formula = relativize(phi, leaf, [&](const std::string& x) { return rd.original(x); });
  return out;
}

Formula principal_formula(const std::string& x, FreshNames& fresh, const std::string& edge) {
  return disj(neg(at_least_neighbors(x, 2, fresh, edge, nullptr)), at_least_neighbors(x, 3, fresh, edge, nullptr));
}

Formula uniform_path_formula(const std::string& x, const std::string& y, int r, FreshNames& fresh,
                             const std::string& edge) {
  std::vector<std::string> ws{x};
  std::vector<std::string> bound;
  for (int i = 0; i < r; ++i) {
    bound.push_back(fresh.next("s"));
    ws.push_back(bound.back());
  }
  ws.push_back(y);
  std::vector<Formula> parts;
  for (std::size_t t = 1; t < ws.size(); ++t) {
    parts.push_back(atom(edge, {Term(ws[t - 1]), Term(ws[t])}));
    if (t >= 2) parts.push_back(neq(Term(ws[t]), Term(ws[t - 2])));
  }
  return bound.empty() ? conj(parts) : exists(bound, conj(parts));
}

SubdividedSentence subdivide_with_formula(const Graph& g, const Formula& phi, int r) {
  if (r < 0) throw PreconditionError("negative subdivision length");
  for (int v = 0; v < g.size(); ++v)
    if (g.degree(v) == 2) throw PreconditionError("vertex " + std::to_string(v) + " has degree 2");
  SubdividedSentence out;
  out.subdivision = subdivide_uniform(g, r + 1);
  FreshNames fresh(all_vars(phi));
  auto leaf = [&](const Node& a) -> Formula {
    require_plain_terms(a);
    if (a.kind == Kind::Eq) return eq(a.terms[0], a.terms[1]);
    if (a.name != "E" || a.terms.size() != 2) throw InputError("subdivide_with_formula: unexpected symbol " + a.name);
    return uniform_path_formula(a.terms[0].var, a.terms[1].var, r, fresh);
  };
  out.formula = relativize(phi, leaf, [&](const std::string& x) { return principal_formula(x, fresh); });
  return out;
}

Reduction assemble_reduction(const Graph& g, const Formula& phi, int d, std::optional<int> r, std::uint64_t cap) {
  Reduction out;
  out.encoding = encode_graph(g, phi, d, cap);
  out.uncolored = uncolor_forest(out.encoding.forest, out.encoding.formula);
  out.r = r;
  if (!r || *r <= 0) {
    out.graph = out.uncolored.graph;
    out.formula = out.uncolored.formula;
    out.principal.resize(static_cast<std::size_t>(out.graph.size()));
    for (int v = 0; v < out.graph.size(); ++v) out.principal[static_cast<std::size_t>(v)] = v;
    return out;
  }
  auto sub = subdivide_with_formula(out.uncolored.graph, out.uncolored.formula, *r);
  out.graph = std::move(sub.subdivision.graph);
  out.principal = std::move(sub.subdivision.embedding.principal);
  out.formula = sub.formula;
  return out;
}

}  // namespace sparsefo
