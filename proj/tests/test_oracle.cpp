#include "doctest.h"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/oracle.hpp"

using namespace sparsefo;

namespace {

// Plain recursive semantics with no compilation, memo or pruning.
bool naive(const RelationalStructure& a, const Formula& f, Valuation& val) {
  auto term = [&](const Term& t) {
    int v = val.at(t.var);
    for (const auto& fn : t.funcs) v = a.functions.at(fn)[v];
    return v;
  };
  switch (f->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Atom: {
      std::vector<int> args;
      for (const auto& t : f->terms) args.push_back(term(t));
      return a.relations.at(f->name).contains(args);
    }
    case Kind::Eq: return term(f->terms[0]) == term(f->terms[1]);
    case Kind::Not: return !naive(a, f->kids[0], val);
    case Kind::And:
      for (const auto& k : f->kids)
        if (!naive(a, k, val)) return false;
      return true;
    case Kind::Or:
      for (const auto& k : f->kids)
        if (naive(a, k, val)) return true;
      return false;
    case Kind::Exists:
    case Kind::Forall: {
      bool ex = f->kind == Kind::Exists;
      auto saved = val;
      std::vector<int> idx(f->vars.size(), 0);
      bool result = !ex;
      if (a.n == 0) return result;
      while (true) {
        for (size_t i = 0; i < idx.size(); ++i) val[f->vars[i]] = idx[i];
        bool b = naive(a, f->kids[0], val);
        if (b == ex) {
          result = ex;
          break;
        }
        size_t i = 0;
        while (i < idx.size() && ++idx[i] == a.n) idx[i++] = 0;
        if (i == idx.size()) break;
      }
      val = saved;
      return result;
    }
  }
  return false;
}

RelationalStructure random_mixed(Rng& rng) {
  int n = uniform_int(rng, 1, 6);
  auto a = graph_structure(random_gnp(n, 0.4, rng));
  std::set<int> c;
  for (int v = 0; v < n; ++v)
    if (coin(rng, 0.5)) c.insert(v);
  a.add_unary("C1", c);
  std::vector<int> f(n);
  for (int v = 0; v < n; ++v) f[v] = uniform_int(rng, 0, n - 1);
  a.functions["f"] = f;
  return a;
}

}  // namespace

TEST_CASE("eval basics") {
  Signature sig = graph_signature();
  auto phi = parse_formula("(exists (x y) (E x y))", sig);
  CHECK(eval(graph_structure(make_complete(2)), phi));
  CHECK_FALSE(eval(graph_structure(Graph(3)), phi));
  CHECK(eval(graph_structure(make_cycle(5)), parse_formula("(forall (x) (exists (y) (E x y)))", sig)));
  CHECK_THROWS_AS(eval(graph_structure(Graph(2)), parse_formula("(E x y)", sig)), InputError);
  CHECK(eval(graph_structure(Graph(0)), parse_formula("(forall (x) false)", sig)));
}

TEST_CASE("compiled evaluation agrees with naive semantics") {
  Rng rng(41);
  Signature sig = graph_signature();
  sig.relations["C1"] = 1;
  sig.functions.insert("f");
  FormulaShape shape;
  shape.free = {"a", "b"};
  shape.qrank = 3;
  shape.size = 10;
  shape.max_block = 3;
  shape.forest_terms = true;
  shape.function = "f";
  for (int it = 0; it < 300; ++it) {
    auto a = random_mixed(rng);
    auto phi = random_formula(sig, shape, rng);
    Evaluator ev(a, phi, {"a", "b"});
    for (int x = 0; x < a.n; ++x)
      for (int y = 0; y < a.n; ++y) {
        Valuation val{{"a", x}, {"b", y}};
        CHECK(ev({x, y}) == naive(a, phi, val));
      }
  }
}

TEST_CASE("satisfying tuples") {
  Signature sig = graph_signature();
  auto star = graph_structure(make_star(3));
  auto p = satisfying_tuples(star, parse_formula("(exists (y) (E x y))", sig), {"x"});
  CHECK(p.count() == 4);
  auto diag = satisfying_tuples(star, parse_formula("(= x y)", sig), {"x", "y"});
  CHECK(diag.tuples() == std::set<std::vector<int>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  CHECK(satisfying_tuples(star, f_false(), {"x"}).count() == 0);
  CHECK_THROWS_AS(satisfying_tuples(graph_structure(Graph(50)), f_true(), {"a", "b", "c", "d", "e"}, 1000),
                  BudgetExceeded);
  Rng rng(43);
  FormulaShape shape;
  shape.free = {"a", "b"};
  shape.qrank = 2;
  shape.size = 8;
  for (int it = 0; it < 50; ++it) {
    auto a = graph_structure(random_gnp(6, 0.4, rng));
    auto phi = random_formula(sig, shape, rng);
    auto yes = satisfying_tuples(a, phi, {"a", "b"});
    auto no = satisfying_tuples(a, neg(phi), {"a", "b"});
    for (size_t i = 0; i < yes.bits.size(); ++i) CHECK(yes.bits[i] != no.bits[i]);
  }
}

TEST_CASE("q-type partition") {
  auto c6 = graph_structure(make_cycle(6));
  for (int q = 0; q <= 3; ++q) CHECK(q_type_partition(c6, q, {}).size() == 1);
  auto p3 = graph_structure(make_path(3));
  CHECK(q_type_partition(p3, 1, {}) == std::vector<std::vector<int>>{{0, 2}, {1}});
  auto colored = graph_structure(make_path(4));
  colored.add_unary("C1", {1});
  CHECK(q_type_partition(colored, 0, {}) == std::vector<std::vector<int>>{{0, 2, 3}, {1}});
}

TEST_CASE("q-type partition refines and is sound against sampled formulas") {
  Rng rng(47);
  Signature sig = graph_signature();
  sig.relations["C1"] = 1;
  FormulaShape shape;
  shape.free = {"a"};
  shape.size = 8;
  for (int it = 0; it < 40; ++it) {
    int n = uniform_int(rng, 2, 6);
    auto a = graph_structure(random_gnp(n, 0.4, rng));
    std::set<int> c;
    for (int v = 0; v < n; ++v)
      if (coin(rng, 0.3)) c.insert(v);
    a.add_unary("C1", c);
    std::vector<int> prev_class(n, 0);
    for (int q = 0; q <= 3; ++q) {
      auto part = q_type_partition(a, q, {});
      std::vector<int> cls(n);
      for (size_t b = 0; b < part.size(); ++b)
        for (int v : part[b]) cls[v] = static_cast<int>(b);
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (cls[u] == cls[v]) CHECK(prev_class[u] == prev_class[v]);
      prev_class = cls;
      shape.qrank = q;
      for (int s = 0; s < 5; ++s) {
        auto psi = random_formula(sig, shape, rng);
        for (const auto& block : part)
          for (int v : block) CHECK(eval(a, psi, {{"a", v}}) == eval(a, psi, {{"a", block[0]}}));
      }
    }
  }
}

TEST_CASE("subtree isomorphism") {
  RootedForest f;
  f.parent = {0, 0, 0, 1, 2};
  f.colors["C1"] = {3};
  f.colors["C2"] = {4};
  CHECK(subtree_iso(f, 3, 3));
  CHECK_FALSE(subtree_iso(f, 3, 4));
  CHECK_FALSE(subtree_iso(f, 1, 2));
  RootedForest g;
  // Two depth-3 trees whose children are listed in opposite orders.
  g.parent = {0, 0, 0, 1, 1, 2, 6, 6, 6, 7, 8, 8};
  g.colors["C1"] = {3, 5, 9, 10};
  CHECK(subtree_iso(g, 0, 6));
  CHECK(subtree_iso(g, 1, 8));
  Rng rng(53);
  for (int it = 0; it < 20; ++it) {
    auto h = random_forest(20, 4, {"C1"}, 0.5, rng);
    auto code = subtree_codes(h);
    for (int a = 0; a < h.size(); ++a)
      for (int b = 0; b < h.size(); ++b) {
        CHECK(subtree_iso(h, a, b) == subtree_iso(h, b, a));
        for (int c = 0; c < h.size(); c += 3)
          if (code[a] == code[b] && code[b] == code[c]) CHECK(code[a] == code[c]);
      }
  }
}
