#include "sparsefo/qe_engine.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "sparsefo/qe_forest.hpp"

namespace sparsefo {

// ---------------------------------------------------------------- forests

RootedForest dfs_elimination_forest(const Graph& g) {
  const int n = g.size();
  RootedForest f;
  f.parent.assign(n, -1);
  std::vector<std::pair<int, std::size_t>> stack;
  for (int s = 0; s < n; ++s) {
    if (f.parent[s] >= 0) continue;
    f.parent[s] = s;
    stack.push_back({s, 0});
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      const auto& nb = g.neighbors(v);
      if (i == nb.size()) {
        stack.pop_back();
        continue;
      }
      int w = nb[i++];
      if (f.parent[w] >= 0) continue;
      f.parent[w] = v;
      stack.push_back({w, 0});
    }
  }
  return f;
}

namespace {

bool is_ancestor(const RootedForest& f, const std::vector<int>& depth, int anc, int v) {
  while (depth[v] > depth[anc]) v = f.parent[v];
  return v == anc;
}

bool forest_shaped(const std::vector<int>& parent) {
  RootedForest f;
  f.parent = parent;
  try {
    f.validate();
  } catch (const InputError&) {
    return false;
  }
  return true;
}

}  // namespace

bool is_elimination_forest(const Graph& g, const RootedForest& f) {
  if (f.size() != g.size() || !forest_shaped(f.parent)) return false;
  auto depth = f.node_depths();
  for (auto [u, v] : g.edges()) {
    if (depth[u] > depth[v]) std::swap(u, v);
    if (!is_ancestor(f, depth, u, v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- relation encoding

std::string encoded_name(const std::string& rel, const std::vector<int>& h) {
  std::string s = rel;
  for (int x : h) s += "." + std::to_string(x);
  return s;
}

std::vector<std::vector<int>> offset_tuples(int k, int hbound) {
  std::vector<std::vector<int>> out;
  if (k <= 0 || hbound <= 0) return out;
  std::vector<int> h(k, 0);
  while (true) {
    if (std::find(h.begin(), h.end(), 0) != h.end()) out.push_back(h);
    int i = k - 1;
    while (i >= 0 && ++h[i] == hbound) h[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

EncodedRelations encode_relations(const RelationalStructure& a, const RootedForest& f, int hbound,
                                  const std::set<std::string>& only) {
  if (f.size() != a.n) throw InputError("forest and structure differ in size");
  if (hbound < 1) throw PreconditionError("hbound must be positive");
  EncodedRelations enc;
  enc.hbound = hbound;
  enc.forest.parent = f.parent;
  auto depth = f.node_depths();
  for (const auto& [name, rel] : a.relations) {
    if (rel.arity == 0) {
      enc.forest.flags[name] = !rel.tuples.empty();
      continue;
    }
    if (rel.arity == 1) {
      auto& c = enc.forest.colors[name];
      for (const auto& t : rel.tuples) c.insert(t[0]);
      continue;
    }
    if (!only.empty() && !only.count(name)) continue;
    for (const auto& t : rel.tuples) {
      int deep = *std::max_element(t.begin(), t.end(), [&](int x, int y) { return depth[x] < depth[y]; });
      for (int x : t)
        if (!is_ancestor(f, depth, x, deep))
          throw PreconditionError("tuple of " + name + " is not on a root path of the elimination forest");
    }
    enc.arity[name] = rel.arity;
    auto hs = offset_tuples(rel.arity, hbound);
    if (static_cast<double>(hs.size()) * a.n > 5e7) throw BudgetExceeded("encode_relations: too many offset tuples");
    std::vector<int> t(rel.arity);
    for (const auto& h : hs) {
      std::set<int> members;
      for (int v = 0; v < a.n; ++v) {
        for (int j = 0; j < rel.arity; ++j) {
          int x = v;
          for (int s = 0; s < h[j]; ++s) x = f.parent[x];
          t[j] = x;
        }
        if (rel.contains(t)) members.insert(v);
      }
      if (members.empty()) continue;
      std::string nm = encoded_name(name, h);
      if (a.relations.count(nm)) throw InputError("encoded predicate " + nm + " clashes with a relation");
      enc.nonempty.insert(nm);
      enc.forest.colors[nm] = std::move(members);
    }
  }
  return enc;
}

Formula rewrite_atoms_forest(const Formula& phi, const EncodedRelations& enc, const std::string& fn, bool prune) {
  std::function<Formula(const Formula&)> rec = [&](const Formula& f) -> Formula {
    switch (f->kind) {
      case Kind::True:
      case Kind::False:
      case Kind::Eq: return f;
      case Kind::Atom: {
        auto it = enc.arity.find(f->name);
        if (it == enc.arity.end()) return f;
        const int k = it->second;
        for (const auto& t : f->terms)
          for (const auto& g : t.funcs)
            if (g != fn) throw PreconditionError("term over " + g + " cannot be rewritten along " + fn);
        std::vector<Formula> ors;
        for (int i = 0; i < k; ++i)
          for (const auto& h : offset_tuples(k, enc.hbound)) {
            if (prune && h[i] != 0) continue;
            std::string nm = encoded_name(f->name, h);
            if (prune && !enc.nonempty.count(nm)) continue;
            std::vector<Formula> ands{atom(nm, {f->terms[i]})};
            for (int j = 0; j < k; ++j) ands.push_back(eq(apply_fn(fn, h[j], f->terms[i]), f->terms[j]));
            ors.push_back(conj(std::move(ands)));
          }
        return disj(std::move(ors));
      }
      case Kind::Not: return neg(rec(f->kids[0]));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : f->kids) kids.push_back(rec(k));
        return f->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      case Kind::Exists: return exists(f->vars, rec(f->kids[0]));
      case Kind::Forall: return forall(f->vars, rec(f->kids[0]));
    }
    throw std::logic_error("rewrite_atoms_forest: unknown node");
  };
  return rec(phi);
}

// ---------------------------------------------------------------- treedepth QE

namespace {

bool quantifier_free(const Formula& f) {
  if (f->kind == Kind::Exists || f->kind == Kind::Forall) return false;
  for (const auto& k : f->kids)
    if (!quantifier_free(k)) return false;
  return true;
}

std::set<std::string> symbol_names(const RelationalStructure& a) {
  std::set<std::string> s;
  for (const auto& [name, r] : a.relations) s.insert(name);
  for (const auto& [name, r] : a.functions) s.insert(name);
  return s;
}

// exists y1 ... exists yk. psi, with bound variables renamed apart.
struct Block {
  std::vector<std::string> free;
  std::vector<std::string> bound;
  Formula matrix;
};

Block split_existential(const Formula& phi, const std::vector<std::string>& free_order, std::set<std::string> avoid) {
  Block b;
  auto fv = free_vars(phi);
  if (free_order.empty()) {
    b.free.assign(fv.begin(), fv.end());
  } else {
    b.free = free_order;
    for (const auto& v : fv)
      if (std::find(b.free.begin(), b.free.end(), v) == b.free.end())
        throw InputError("free variable " + v + " missing from the free order");
  }
  avoid.insert(fv.begin(), fv.end());
  FreshNames fresh(avoid);
  Formula f = rename_bound(phi, fresh);
  while (f->kind == Kind::Exists) {
    b.bound.insert(b.bound.end(), f->vars.begin(), f->vars.end());
    f = f->kids[0];
  }
  if (!quantifier_free(f)) throw PreconditionError("formula is not existential");
  b.matrix = f;
  return b;
}

// Function terms other than fn become fresh existential variables tied by graph relations.
void relationalise(Block& b, RelationalStructure& a, const std::string& fn, FreshNames& fresh) {
  std::map<std::string, std::string> graph_name;
  std::map<std::pair<Term, std::string>, std::string> value_var;
  std::vector<Formula> ties;
  auto graph_of = [&](const std::string& g) {
    auto it = graph_name.find(g);
    if (it != graph_name.end()) return it->second;
    auto fit = a.functions.find(g);
    if (fit == a.functions.end()) throw InputError("unknown function " + g);
    std::string nm = fresh.next(g + ".graph");
    Relation r;
    r.arity = 2;
    for (int v = 0; v < a.n; ++v) r.tuples.insert({v, fit->second[v]});
    a.relations[nm] = std::move(r);
    graph_name[g] = nm;
    return nm;
  };
  auto fix = [&](const Term& t) {
    Term cur(t.var);
    for (const auto& g : t.funcs) {
      if (g == fn) {
        cur.funcs.push_back(g);
        continue;
      }
      auto key = std::make_pair(cur, g);
      auto it = value_var.find(key);
      if (it == value_var.end()) {
        std::string z = fresh.next("z");
        it = value_var.emplace(key, z).first;
        b.bound.push_back(z);
        ties.push_back(atom(graph_of(g), {cur, Term(z)}));
      }
      cur = Term(it->second);
    }
    return cur;
  };
  std::function<Formula(const Formula&)> rec = [&](const Formula& f) -> Formula {
    switch (f->kind) {
      case Kind::True:
      case Kind::False: return f;
      case Kind::Atom: {
        std::vector<Term> ts;
        for (const auto& t : f->terms) ts.push_back(fix(t));
        return atom(f->name, std::move(ts));
      }
      case Kind::Eq: return eq(fix(f->terms[0]), fix(f->terms[1]));
      case Kind::Not: return neg(rec(f->kids[0]));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : f->kids) kids.push_back(rec(k));
        return f->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      default: throw std::logic_error("relationalise: quantifier in matrix");
    }
  };
  Formula m = rec(b.matrix);
  ties.push_back(m);
  b.matrix = conj(std::move(ties));
}

Formula close_block(const Block& b) { return b.bound.empty() ? b.matrix : exists(b.bound, b.matrix); }

}  // namespace

QeResult td_qe(const Formula& phi, const RelationalStructure& a, int d, const TdQeOptions& opt) {
  a.validate();
  auto names = symbol_names(a);
  Block b = split_existential(phi, opt.free_order, names);
  std::set<std::string> avoid = names;
  for (const auto& v : all_vars(b.matrix)) avoid.insert(v);
  for (const auto& v : b.free) avoid.insert(v);
  FreshNames fresh(avoid);

  QeResult res;
  res.structure = a;
  RootedForest forest;
  std::string fn = opt.fn;
  if (opt.forest) {
    forest.parent = opt.forest->parent;
  } else if (!fn.empty()) {
    auto it = a.functions.find(fn);
    if (it == a.functions.end()) throw InputError("unknown forest function " + fn);
    forest.parent = it->second;
  } else {
    forest = dfs_elimination_forest(gaifman_graph(a));
  }
  if (!fn.empty()) {
    auto it = a.functions.find(fn);
    if (it == a.functions.end()) throw InputError("unknown forest function " + fn);
    if (it->second != forest.parent) throw PreconditionError("function " + fn + " differs from the forest");
  } else {
    fn = fresh.next(opt.prefix + "F");
    res.structure.functions[fn] = forest.parent;
    res.signature.functions.insert(fn);
  }
  if (!is_elimination_forest(gaifman_graph(a), forest))
    throw PreconditionError("not an elimination forest of the Gaifman graph");
  const int depth = forest.depth();
  if (d >= 0 && d < 30 && depth > (1 << d))
    throw PreconditionError("forest depth " + std::to_string(depth) + " exceeds 2^" + std::to_string(d));

  RelationalStructure work = a;
  relationalise(b, work, fn, fresh);
  std::set<std::string> used;
  for (const auto& [name, ar] : symbols_of(b.matrix).relations)
    if (ar >= 2) used.insert(name);
  const int hbound = std::max(1, depth);
  EncodedRelations enc;
  if (used.empty()) {
    enc.hbound = hbound;
  } else {
    enc = encode_relations(work, forest, hbound, used);
  }
  Formula psi = rewrite_atoms_forest(b.matrix, enc, fn);

  // Flags are constants of the structure; colours are replaced by their membership classes
  // when there are fewer classes than colours.
  std::map<std::string, std::set<int>> colors;
  for (const auto& [name, ar] : symbols_of(psi).relations) {
    if (ar == 1) {
      auto eit = enc.forest.colors.find(name);
      if (eit != enc.forest.colors.end()) {
        colors[name] = eit->second;
      } else {
        auto& c = colors[name];
        for (const auto& t : work.relations.at(name).tuples) c.insert(t[0]);
      }
    } else if (ar >= 2) {
      throw std::logic_error("td_qe: relation " + name + " left after rewriting");
    }
  }
  std::map<std::vector<std::string>, std::set<int>> classes;
  for (int v = 0; v < a.n; ++v) {
    std::vector<std::string> in;
    for (const auto& [name, members] : colors)
      if (members.count(v)) in.push_back(name);
    if (!in.empty()) classes[in].insert(v);
  }
  const bool compress = classes.size() < colors.size();
  std::map<std::string, std::vector<std::string>> class_names;
  RootedForest input;
  input.parent = forest.parent;
  if (compress) {
    int i = 0;
    for (const auto& [in, members] : classes) {
      std::string nm = fresh.next(opt.prefix + "K" + std::to_string(i++));
      input.colors[nm] = members;
      for (const auto& c : in) class_names[c].push_back(nm);
    }
  } else {
    input.colors = colors;
  }
  std::function<Formula(const Formula&)> lower = [&](const Formula& g) -> Formula {
    switch (g->kind) {
      case Kind::Atom: {
        if (g->terms.empty()) return work.flag(g->name) ? f_true() : f_false();
        if (!compress) return g;
        std::vector<Formula> ors;
        for (const auto& nm : class_names[g->name]) ors.push_back(atom(nm, g->terms));
        return disj(std::move(ors));
      }
      case Kind::Not: return neg(lower(g->kids[0]));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : g->kids) kids.push_back(lower(k));
        return g->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      default: return g;
    }
  };
  psi = lower(psi);
  Block rb{b.free, b.bound, psi};
  ForestQeOptions fo;
  fo.fn = fn;
  fo.prefix = opt.prefix;
  fo.free_order = b.free;
  auto hat = forest_qe(close_block(rb), hbound, input, fo);

  for (const auto& [name, ar] : hat.signature.relations) {
    if (names.count(name)) throw InputError("new symbol " + name + " clashes with the structure");
    if (ar == 0) {
      res.structure.set_flag(name, hat.forest.flags.at(name));
    } else {
      res.structure.add_unary(name, hat.forest.colors.at(name));
    }
    res.signature.relations[name] = ar;
  }
  res.free_vars = b.free;
  res.formula = hat.formula;
  res.stats.stages = 1;
  res.stats.pieces = 1;
  res.stats.max_forest_depth = depth;
  res.stats.labels = hat.labels.size();
  res.stats.max_literals = static_cast<std::size_t>(hat.compiled.literals);
  return res;
}

// ---------------------------------------------------------------- low treedepth colourings

namespace {

using Mask = std::uint64_t;

class TreedepthDecider {
 public:
  TreedepthDecider(const Graph& g, Budget& budget) : budget_(budget) {
    if (g.size() > 64) throw BudgetExceeded("treedepth decision is limited to 64 vertices");
    adj_.assign(g.size(), 0);
    for (int v = 0; v < g.size(); ++v)
      for (int w : g.neighbors(v)) adj_[v] |= Mask(1) << w;
  }

  bool at_most(Mask s, int k) {
    if (s == 0) return true;
    if (k <= 0) return false;
    for (Mask c : components(s))
      if (!connected_at_most(c, k)) return false;
    return true;
  }

 private:
  std::vector<Mask> components(Mask s) const {
    std::vector<Mask> out;
    while (s) {
      Mask comp = s & (~s + 1), frontier = comp;
      while (frontier) {
        Mask next = 0;
        for (Mask f = frontier; f; f &= f - 1) next |= adj_[__builtin_ctzll(f)];
        next &= s & ~comp;
        comp |= next;
        frontier = next;
      }
      out.push_back(comp);
      s &= ~comp;
    }
    return out;
  }

  bool connected_at_most(Mask c, int k) {
    const int size = __builtin_popcountll(c);
    if (size <= k) return true;
    if (k == 1) return false;
    auto key = std::make_pair(c, k);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    budget_.charge();
    bool ok = false;
    // vertices of high degree first
    std::vector<int> vs;
    for (Mask f = c; f; f &= f - 1) vs.push_back(__builtin_ctzll(f));
    std::sort(vs.begin(), vs.end(), [&](int x, int y) {
      int dx = __builtin_popcountll(adj_[x] & c), dy = __builtin_popcountll(adj_[y] & c);
      return dx != dy ? dx > dy : x < y;
    });
    for (int v : vs)
      if (at_most(c & ~(Mask(1) << v), k - 1)) {
        ok = true;
        break;
      }
    memo_.emplace(key, ok);
    return ok;
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<Mask, int>& p) const {
      return std::hash<Mask>()(p.first * 31 + static_cast<Mask>(p.second));
    }
  };

  Budget& budget_;
  std::vector<Mask> adj_;
  std::unordered_map<std::pair<Mask, int>, bool, KeyHash> memo_;
};

Mask full_mask(int n) { return n == 64 ? ~Mask(0) : (Mask(1) << n) - 1; }

bool verify_with(const Graph& g, const LtdColoring& chi, int p, Budget& budget) {
  if (static_cast<int>(chi.color.size()) != g.size()) throw InputError("colouring size differs from the graph");
  std::map<int, Mask> classes;
  for (int v = 0; v < g.size(); ++v) {
    if (chi.color[v] < 0 || chi.color[v] >= chi.palette) throw InputError("colour outside the palette");
    classes[chi.color[v]] |= Mask(1) << v;
  }
  std::vector<Mask> cls;
  for (const auto& [c, m] : classes) cls.push_back(m);
  TreedepthDecider dec(g, budget);
  bool ok = true;
  std::function<void(std::size_t, int, Mask)> rec = [&](std::size_t from, int size, Mask s) {
    for (std::size_t i = from; i < cls.size() && ok; ++i) {
      Mask t = s | cls[i];
      if (!dec.at_most(t, size + 1)) {
        ok = false;
        return;
      }
      if (size + 1 < p) rec(i + 1, size + 1, t);
    }
  };
  if (p >= 1) rec(0, 0, 0);
  return ok;
}

}  // namespace

bool treedepth_at_most(const Graph& g, int k, std::int64_t budget) {
  Budget b(budget, "treedepth budget");
  TreedepthDecider dec(g, b);
  return dec.at_most(full_mask(g.size()), k);
}

int treedepth_exact(const Graph& g, std::int64_t budget) {
  Budget b(budget, "treedepth budget");
  TreedepthDecider dec(g, b);
  int k = 0;
  while (!dec.at_most(full_mask(g.size()), k)) ++k;
  return k;
}

bool verify_ltd_coloring(const Graph& g, const LtdColoring& chi, int p, std::int64_t budget) {
  Budget b(budget, "colouring verifier budget");
  return verify_with(g, chi, p, b);
}

LtdColoring level_coloring(const RootedForest& f, int p) {
  LtdColoring chi;
  chi.p = p;
  chi.palette = f.depth();
  auto depth = f.node_depths();
  chi.color.resize(f.size());
  for (int v = 0; v < f.size(); ++v) chi.color[v] = depth[v] - 1;
  return chi;
}

RootedForest centered_elimination_forest(const Graph& g) {
  const int n = g.size();
  RootedForest f;
  f.parent.assign(n, -1);
  std::vector<char> alive(n, 1);
  // component members, parent to attach the chosen centre to (-1: new root)
  std::vector<std::pair<std::vector<int>, int>> work;
  for (const auto& comp : components(g)) work.push_back({comp, -1});
  auto split = [&](const std::vector<int>& verts) {
    std::vector<std::vector<int>> out;
    std::map<int, int> seen;
    for (int s : verts) {
      if (!alive[s] || seen.count(s)) continue;
      std::vector<int> comp{s};
      seen[s] = 1;
      for (std::size_t i = 0; i < comp.size(); ++i)
        for (int w : g.neighbors(comp[i]))
          if (alive[w] && !seen.count(w)) {
            seen[w] = 1;
            comp.push_back(w);
          }
      std::sort(comp.begin(), comp.end());
      out.push_back(comp);
    }
    return out;
  };
  while (!work.empty()) {
    auto [verts, par] = work.back();
    work.pop_back();
    int best = -1;
    std::pair<int, int> best_score{std::numeric_limits<int>::max(), 0};
    for (int v : verts) {
      alive[v] = 0;
      int largest = 0;
      for (const auto& c : split(verts)) largest = std::max(largest, static_cast<int>(c.size()));
      alive[v] = 1;
      std::pair<int, int> score{largest, -g.degree(v)};
      if (score < best_score) {
        best_score = score;
        best = v;
      }
    }
    f.parent[best] = par < 0 ? best : par;
    alive[best] = 0;
    for (auto& c : split(verts)) work.push_back({std::move(c), best});
  }
  return f;
}

LtdColoring low_treedepth_coloring(const Graph& g, int p, std::int64_t budget) {
  auto a = level_coloring(dfs_elimination_forest(g), p);
  auto b = level_coloring(centered_elimination_forest(g), p);
  LtdColoring chi = a.palette < b.palette ? a : b;
  if (g.size() > 64) return chi;
  Budget bud(budget, "colouring budget");
  try {
    if (!verify_with(g, chi, p, bud)) {
      chi.palette = g.size();
      chi.color.resize(g.size());
      std::iota(chi.color.begin(), chi.color.end(), 0);
      return chi;
    }
    bool merged = true;
    while (merged) {
      merged = false;
      for (int i = 0; i < chi.palette && !merged; ++i)
        for (int j = i + 1; j < chi.palette && !merged; ++j) {
          LtdColoring t = chi;
          for (int& c : t.color) {
            if (c == j) c = i;
            if (c > j) --c;
          }
          --t.palette;
          if (verify_with(g, t, p, bud)) {
            chi = t;
            merged = true;
          }
        }
    }
  } catch (const BudgetExceeded&) {
    // keep the last verified colouring
  }
  return chi;
}

// ---------------------------------------------------------------- bounded-expansion existential QE

namespace {

struct Substructure {
  RelationalStructure s;
  std::vector<int> to_old;
};

// Functions are dropped; relations keep tuples inside `keep`.
Substructure induced_substructure(const RelationalStructure& a, const std::vector<int>& keep) {
  Substructure out;
  out.to_old = keep;
  std::vector<int> to_new(a.n, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) to_new[keep[i]] = static_cast<int>(i);
  out.s.n = static_cast<int>(keep.size());
  for (const auto& [name, rel] : a.relations) {
    Relation r;
    r.arity = rel.arity;
    for (const auto& t : rel.tuples) {
      std::vector<int> u;
      bool in = true;
      for (int x : t) {
        if (to_new[x] < 0) {
          in = false;
          break;
        }
        u.push_back(to_new[x]);
      }
      if (in) r.tuples.insert(std::move(u));
    }
    out.s.relations[name] = std::move(r);
  }
  return out;
}

void add_stats(QeStats& into, const QeStats& s) {
  into.stages += s.stages;
  into.pieces += s.pieces;
  into.max_forest_depth = std::max(into.max_forest_depth, s.max_forest_depth);
  into.labels += s.labels;
  into.max_literals = std::max(into.max_literals, s.max_literals);
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

QeResult existential_qe_be(const Formula& phi, const RelationalStructure& a, const LtdColoring& chi,
                           const BeQeOptions& opt) {
  a.validate();
  if (static_cast<int>(chi.color.size()) != a.n) throw InputError("colouring size differs from the structure");
  auto names = symbol_names(a);
  Block b = split_existential(phi, opt.td.free_order, names);
  const int need = static_cast<int>(b.free.size() + b.bound.size());
  if (chi.p < need)
    throw PreconditionError("colouring verified for p=" + std::to_string(chi.p) + " but the block has " +
                            std::to_string(need) + " variables");
  const int r = std::min(chi.p, chi.palette);
  if (r == chi.palette) {
    TdQeOptions t = opt.td;
    t.free_order = b.free;
    return td_qe(close_block(b), a, -1, t);
  }
  if (binomial(chi.palette, r) > static_cast<double>(opt.max_ranges))
    throw BudgetExceeded("palette of " + std::to_string(chi.palette) + " colours gives too many ranges of size " +
                         std::to_string(r));

  std::set<std::string> avoid = names;
  for (const auto& v : all_vars(b.matrix)) avoid.insert(v);
  for (const auto& v : b.free) avoid.insert(v);
  FreshNames fresh(avoid);
  RelationalStructure work = a;
  relationalise(b, work, "", fresh);
  work.functions.clear();

  QeResult res;
  res.structure = a;
  res.free_vars = b.free;
  std::vector<Formula> ors;
  std::vector<int> range(r);
  std::iota(range.begin(), range.end(), 0);
  int piece = 0;
  while (true) {
    std::vector<int> keep;
    for (int v = 0; v < a.n; ++v)
      if (std::binary_search(range.begin(), range.end(), chi.color[v])) keep.push_back(v);
    auto sub = induced_substructure(work, keep);
    TdQeOptions t;
    t.prefix = opt.td.prefix + "d" + std::to_string(piece) + ".";
    t.free_order = b.free;
    auto pr = td_qe(close_block(b), sub.s, -1, t);
    for (const auto& [name, ar] : pr.signature.relations) {
      if (names.count(name)) throw InputError("new symbol " + name + " clashes with the structure");
      if (ar == 0) {
        res.structure.set_flag(name, pr.structure.flag(name));
      } else {
        std::set<int> members;
        for (const auto& tup : pr.structure.relations.at(name).tuples) members.insert(sub.to_old[tup[0]]);
        res.structure.add_unary(name, members);
      }
      res.signature.relations[name] = ar;
    }
    for (const auto& name : pr.signature.functions) {
      std::vector<int> fvals(a.n);
      std::iota(fvals.begin(), fvals.end(), 0);
      const auto& pf = pr.structure.functions.at(name);
      for (std::size_t i = 0; i < keep.size(); ++i) fvals[keep[i]] = sub.to_old[pf[i]];
      res.structure.functions[name] = std::move(fvals);
      res.signature.functions.insert(name);
    }
    std::vector<Formula> guard{pr.formula};
    if (!b.free.empty()) {
      std::string in = t.prefix + "in";
      if (names.count(in)) throw InputError("new symbol " + in + " clashes with the structure");
      res.structure.add_unary(in, std::set<int>(keep.begin(), keep.end()));
      res.signature.relations[in] = 1;
      for (const auto& x : b.free) guard.push_back(atom(in, {Term(x)}));
    }
    ors.push_back(conj(std::move(guard)));
    add_stats(res.stats, pr.stats);
    ++piece;
    int i = r - 1;
    while (i >= 0 && range[i] == chi.palette - r + i) --i;
    if (i < 0) break;
    ++range[i];
    for (int j = i + 1; j < r; ++j) range[j] = range[j - 1] + 1;
  }
  res.formula = disj(std::move(ors));
  return res;
}

// ---------------------------------------------------------------- full QE

QeResult full_qe(const Formula& phi, const RelationalStructure& a, const FullQeOptions& opt) {
  a.validate();
  auto names = symbol_names(a);
  auto fv = free_vars(phi);
  std::vector<std::string> order = opt.free_order;
  if (order.empty()) order.assign(fv.begin(), fv.end());
  for (const auto& v : fv)
    if (std::find(order.begin(), order.end(), v) == order.end())
      throw InputError("free variable " + v + " missing from the free order");
  std::set<std::string> avoid = names;
  avoid.insert(fv.begin(), fv.end());
  FreshNames fresh(avoid);
  Formula f = rename_bound(phi, fresh);

  Graph gg = gaifman_graph(a);
  RootedForest forest;
  std::string fn;
  for (const auto& [name, vals] : a.functions) {
    RootedForest cand;
    cand.parent = vals;
    if (is_elimination_forest(gg, cand)) {
      forest = cand;
      fn = name;
      break;
    }
  }
  bool fn_added = false;
  if (fn.empty()) {
    forest = dfs_elimination_forest(gg);
    fn = fresh.next(opt.prefix + "F");
  }
  const int depth = forest.depth();

  QeResult res;
  res.structure = a;
  int stage = 0;
  std::function<Formula(const Formula&)> rec = [&](const Formula& g) -> Formula {
    switch (g->kind) {
      case Kind::True:
      case Kind::False:
      case Kind::Atom:
      case Kind::Eq: return g;
      case Kind::Not: return neg(rec(g->kids[0]));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : g->kids) kids.push_back(rec(k));
        return g->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      case Kind::Exists:
      case Kind::Forall: {
        const bool univ = g->kind == Kind::Forall;
        Formula body = rec(g->kids[0]);
        if (univ) body = neg(body);
        Formula block = exists(g->vars, body);
        if (!fn_added) {
          res.structure.functions[fn] = forest.parent;
          res.signature.functions.insert(fn);
          fn_added = true;
        }
        auto fvb = free_vars(block);
        const int need = static_cast<int>(fvb.size() + g->vars.size());
        LtdColoring chi = level_coloring(forest, std::max(depth, need));
        BeQeOptions bo;
        bo.td.forest = forest;
        bo.td.fn = fn;
        bo.td.prefix = opt.prefix + std::to_string(stage++) + ".";
        auto r = existential_qe_be(block, res.structure, chi, bo);
        for (const auto& [name, ar] : r.signature.relations) res.signature.relations[name] = ar;
        for (const auto& name : r.signature.functions) res.signature.functions.insert(name);
        res.structure = std::move(r.structure);
        add_stats(res.stats, r.stats);
        return univ ? neg(r.formula) : r.formula;
      }
    }
    throw std::logic_error("full_qe: unknown node");
  };
  res.formula = rec(f);
  res.free_vars = order;
  return res;
}

bool model_check_qe(const RelationalStructure& a, const Formula& phi) {
  if (!free_vars(phi).empty()) throw PreconditionError("model checking needs a sentence");
  auto r = full_qe(phi, a);
  return eval(r.structure, r.formula);
}

QueryAnswerer::QueryAnswerer(QeResult r) : r_(std::make_shared<QeResult>(std::move(r))) {
  if (!quantifier_free(r_->formula)) throw PreconditionError("query answering needs a quantifier-free result");
  ev_ = std::make_shared<Evaluator>(r_->structure, r_->formula, r_->free_vars,
                                    std::numeric_limits<std::int64_t>::max() / 2);
}

bool QueryAnswerer::operator()(const std::vector<int>& tuple) const {
  if (tuple.size() != r_->free_vars.size()) throw InputError("tuple length differs from the free variables");
  return (*ev_)(tuple);
}

QueryAnswerer query_structure(QeResult r) { return QueryAnswerer(std::move(r)); }

// ---------------------------------------------------------------- selectors

std::vector<int> selector(const RelationalStructure& a, int q, const std::vector<int>& pinned,
                          const std::set<std::vector<std::string>>& words, std::int64_t budget) {
  std::vector<int> out;
  for (const auto& cls : q_type_partition(a, q, pinned, words, budget))
    out.push_back(*std::min_element(cls.begin(), cls.end()));
  std::sort(out.begin(), out.end());
  return out;
}

bool model_check_selector(const RelationalStructure& a, const Formula& phi, std::int64_t budget) {
  if (!free_vars(phi).empty()) throw PreconditionError("model checking needs a sentence");
  FreshNames fresh(symbol_names(a));
  Formula f = rename_bound(phi, fresh);
  auto words = function_words(f);
  words.insert({});
  Valuation val;
  std::vector<int> pinned;
  std::function<bool(const Formula&)> rec = [&](const Formula& g) -> bool {
    switch (g->kind) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::Atom:
      case Kind::Eq: return eval(a, g, val, budget);
      case Kind::Not: return !rec(g->kids[0]);
      case Kind::And:
        for (const auto& k : g->kids)
          if (!rec(k)) return false;
        return true;
      case Kind::Or:
        for (const auto& k : g->kids)
          if (rec(k)) return true;
        return false;
      case Kind::Exists:
      case Kind::Forall: {
        const bool univ = g->kind == Kind::Forall;
        const std::string x = g->vars[0];
        Formula rest = g->vars.size() == 1
                           ? g->kids[0]
                           : (univ ? forall(std::vector<std::string>(g->vars.begin() + 1, g->vars.end()), g->kids[0])
                                   : exists(std::vector<std::string>(g->vars.begin() + 1, g->vars.end()), g->kids[0]));
        int q = quantifier_rank(rest);
        for (int v : selector(a, q, pinned, words, budget)) {
          val[x] = v;
          pinned.push_back(v);
          bool t = rec(rest);
          pinned.pop_back();
          val.erase(x);
          if (t != univ) return t;
        }
        return univ;
      }
    }
    throw std::logic_error("model_check_selector: unknown node");
  };
  return rec(f);
}

}  // namespace sparsefo
