#include <functional>

#include "sparsefo/error.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/oracle.hpp"

namespace sparsefo {

Formula dist_le(const std::string& x, const std::string& y, int r, FreshNames& fresh, const std::string& edge) {
  if (r < 0) throw PreconditionError("negative distance bound");
  if (r == 0) return eq(x, y);
  if (r == 1) return disj(atom(edge, {x, y}), eq(x, y));
  std::vector<std::string> path{x};
  std::vector<std::string> inner;
  for (int i = 1; i < r; ++i) {
    inner.push_back(fresh.next("w"));
    path.push_back(inner.back());
  }
  path.push_back(y);
  std::vector<Formula> steps;
  for (int i = 0; i < r; ++i) steps.push_back(disj(eq(path[i], path[i + 1]), atom(edge, {path[i], path[i + 1]})));
  return exists(inner, conj(std::move(steps)));
}

namespace {

std::set<std::string> interpretation_vars(const Interpretation& in) {
  std::set<std::string> out(in.params.begin(), in.params.end());
  out.insert({in.x, in.x1, in.x2});
  for (const Formula* f : {&in.domain, &in.edge}) {
    auto v = all_vars(*f);
    out.insert(v.begin(), v.end());
  }
  for (const auto& [name, f] : in.colors) {
    auto v = all_vars(f);
    out.insert(v.begin(), v.end());
  }
  return out;
}

}  // namespace

Formula rewrite_under_interpretation(const Formula& phi, const Interpretation& in) {
  if (!free_vars(phi).empty()) throw PreconditionError("rewriting expects a sentence");
  std::set<std::string> avoid = interpretation_vars(in);
  FreshNames fresh(avoid);
  Formula f = rename_bound(phi, fresh);
  auto domain_at = [&](const std::string& z) { return substitute(in.domain, {{in.x, Term(z)}}); };
  auto edge_at = [&](const Term& a, const Term& b) { return substitute(in.edge, {{in.x1, a}, {in.x2, b}}); };
  std::function<Formula(const Formula&)> rec = [&](const Formula& g) -> Formula {
    switch (g->kind) {
      case Kind::True:
      case Kind::False: return g;
      case Kind::Eq:
        for (const auto& t : g->terms)
          if (!t.funcs.empty()) throw InputError("interpretations target a purely relational signature");
        return g;
      case Kind::Atom: {
        for (const auto& t : g->terms)
          if (!t.funcs.empty()) throw InputError("interpretations target a purely relational signature");
        if (g->name == in.edge_name && g->terms.size() == 2) {
          const Term &a = g->terms[0], &b = g->terms[1];
          return conj(disj(edge_at(a, b), edge_at(b, a)), neq(a, b));
        }
        auto it = in.colors.find(g->name);
        if (it != in.colors.end() && g->terms.size() == 1) return substitute(it->second, {{in.x, g->terms[0]}});
        throw InputError("symbol " + g->name + " is not defined by the interpretation");
      }
      case Kind::Not: return neg(rec(g->kids[0]));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : g->kids) kids.push_back(rec(k));
        return g->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      case Kind::Exists:
      case Kind::Forall: {
        std::vector<Formula> guards;
        for (const auto& z : g->vars) guards.push_back(domain_at(z));
        Formula guard = conj(std::move(guards));
        Formula body = rec(g->kids[0]);
        if (g->kind == Kind::Exists) return exists(g->vars, conj(guard, body));
        return forall(g->vars, disj(neg(guard), body));
      }
    }
    return g;
  };
  return rec(f);
}

Interpretation ball_minus_interpretation(int r, int m) {
  Interpretation in;
  for (int i = 0; i <= m; ++i) in.params.push_back("y" + std::to_string(i));
  FreshNames fresh({in.x, in.x1, in.x2});
  fresh.reserve({in.params.begin(), in.params.end()});
  std::vector<Formula> parts{dist_le(in.x, "y0", r, fresh)};
  for (int i = 1; i <= m; ++i) parts.push_back(neq(in.x, in.params[i]));
  in.domain = conj(std::move(parts));
  in.edge = atom("E", {in.x1, in.x2});
  return in;
}

Interpretation ball_star_interpretation(int r, int m) {
  Interpretation in;
  for (int i = 0; i <= m; ++i) in.params.push_back("y" + std::to_string(i));
  FreshNames fresh({in.x, in.x1, in.x2});
  fresh.reserve({in.params.begin(), in.params.end()});
  in.domain = dist_le(in.x, "y0", r, fresh);
  std::vector<Formula> parts{atom("E", {in.x1, in.x2})};
  for (int i = 1; i <= m; ++i) {
    parts.push_back(neq(in.x1, in.params[i]));
    parts.push_back(neq(in.x2, in.params[i]));
  }
  in.edge = conj(std::move(parts));
  return in;
}

InterpretedStructure apply_interpretation(const Interpretation& in, const RelationalStructure& a,
                                          const std::vector<int>& params) {
  if (params.size() != in.params.size())
    throw InputError("interpretation expects " + std::to_string(in.params.size()) + " parameters");
  std::vector<std::string> dom_vars = in.params;
  dom_vars.push_back(in.x);
  std::vector<std::string> edge_vars = in.params;
  edge_vars.push_back(in.x1);
  edge_vars.push_back(in.x2);
  Evaluator dom(a, in.domain, dom_vars);
  Evaluator edge(a, in.edge, edge_vars);

  InterpretedStructure out;
  std::vector<int> args = params;
  args.push_back(0);
  for (int v = 0; v < a.n; ++v) {
    args.back() = v;
    if (dom(args)) out.to_old.push_back(v);
  }
  int n = static_cast<int>(out.to_old.size());
  out.structure.n = n;
  Relation e;
  e.arity = 2;
  std::vector<int> eargs = params;
  eargs.push_back(0);
  eargs.push_back(0);
  auto holds = [&](int u, int v) {
    eargs[eargs.size() - 2] = u;
    eargs.back() = v;
    return edge(eargs);
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (holds(out.to_old[i], out.to_old[j]) || holds(out.to_old[j], out.to_old[i])) {
        e.tuples.insert({i, j});
        e.tuples.insert({j, i});
      }
  out.structure.relations[in.edge_name] = std::move(e);
  for (const auto& [name, f] : in.colors) {
    Evaluator col(a, f, dom_vars);
    std::set<int> members;
    for (int i = 0; i < n; ++i) {
      args.back() = out.to_old[i];
      if (col(args)) members.insert(i);
    }
    out.structure.add_unary(name, members);
  }
  return out;
}

}  // namespace sparsefo
