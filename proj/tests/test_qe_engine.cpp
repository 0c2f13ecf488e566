#include <algorithm>
#include <chrono>

#include "doctest.h"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/oracle.hpp"
#include "sparsefo/qe_engine.hpp"

using namespace sparsefo;

namespace {

RelationalStructure colored_graph(const Graph& g, Rng& rng, double p = 0.4) {
  auto a = graph_structure(g);
  std::set<int> c1;
  for (int v = 0; v < g.size(); ++v)
    if (coin(rng, p)) c1.insert(v);
  a.add_unary("C1", c1);
  return a;
}

// Graphs, coloured graphs and coloured forests with a parent function.
struct Instance {
  RelationalStructure a;
  Signature sig;
  bool forest_terms = false;
};

Instance random_instance(Rng& rng, int max_n) {
  Instance in;
  int n = uniform_int(rng, 1, max_n);
  switch (uniform_int(rng, 0, 3)) {
    case 0: in.a = colored_graph(random_gnp(n, 0.3, rng), rng); break;
    case 1: in.a = colored_graph(random_bounded_degree(n, 3, 40, rng), rng); break;
    case 2: in.a = colored_graph(random_tree(n, rng), rng); break;
    default: {
      RootedForest f = random_forest(n, 4, {"C1"}, 0.4, rng);
      in.a = forest_structure(f);
      in.forest_terms = true;
    }
  }
  in.a.set_flag("F", coin(rng, 0.5));
  in.sig = signature_of(in.a);
  return in;
}

bool edge_subset(const Graph& small, const Graph& big) {
  for (auto [u, v] : small.edges())
    if (!big.adjacent(u, v)) return false;
  return true;
}

bool unary_signature(const Signature& s) {
  for (const auto& [name, ar] : s.relations)
    if (ar > 1) return false;
  return true;
}

std::size_t count_disjuncts(const Formula& f) { return f->kind == Kind::Or ? f->kids.size() : 1; }

}  // namespace

TEST_CASE("dfs elimination forests") {
  Rng r3(3);
  Graph t = random_tree(9, r3);
  auto f = dfs_elimination_forest(t);
  CHECK(f.is_root(0));
  CHECK(forest_graph(f) == t);
  auto k3 = dfs_elimination_forest(make_complete(3));
  CHECK(k3.depth() == 3);
  Rng rng(151);
  for (int it = 0; it < 100; ++it) {
    Graph g = random_gnp(uniform_int(rng, 0, 15), 0.25, rng);
    auto e = dfs_elimination_forest(g);
    CHECK(is_elimination_forest(g, e));
    for (int v = 0; v < g.size(); ++v)
      if (!e.is_root(v)) CHECK(g.adjacent(v, e.parent[v]));
  }
  RootedForest star;
  star.parent = {0, 0, 0};
  CHECK_FALSE(is_elimination_forest(make_path(3), star));
}

TEST_CASE("encode_relations") {
  RootedForest f;
  f.parent = {0, 0, 1};
  RelationalStructure a;
  a.n = 3;
  a.relations["E"] = Relation{2, {{1, 0}}};
  a.relations["R"] = Relation{1, {{2}}};
  a.relations["T"] = Relation{3, {{2, 1, 0}}};
  a.set_flag("F", true);
  auto enc = encode_relations(a, f, 3);
  CHECK(enc.forest.colors.at("E.0.1") == std::set<int>{1});
  CHECK(enc.forest.colors.at("R") == std::set<int>{2});
  CHECK(enc.forest.colors.at("T.0.1.2") == std::set<int>{2});
  CHECK(enc.forest.flags.at("F"));
  CHECK_FALSE(enc.forest.colors.count("E.1.0"));
  // at the root parent^h is the root itself
  a.relations["E"].tuples.insert({0, 0});
  auto enc2 = encode_relations(a, f, 2);
  CHECK(enc2.forest.colors.at("E.0.0") == std::set<int>{0});
  CHECK(enc2.forest.colors.at("E.1.0") == std::set<int>{0});
  a.relations["E"].tuples.insert({2, 0});
  CHECK_THROWS_AS(encode_relations(a, RootedForest{{0, 0, 0}, {}, {}}, 2), PreconditionError);
  CHECK(offset_tuples(2, 2) == std::vector<std::vector<int>>{{0, 0}, {0, 1}, {1, 0}});
  CHECK(offset_tuples(3, 10).size() == 1000 - 729);
}

TEST_CASE("rewrite_atoms_forest") {
  EncodedRelations enc;
  enc.hbound = 2;
  enc.arity["E"] = 2;
  Signature sig = graph_signature();
  auto e = parse_formula("(E x y)", sig);
  CHECK(count_disjuncts(rewrite_atoms_forest(e, enc, "parent", false)) == 6);
  auto plain = parse_formula("(exists (y) (and (C1 y) (= x y)))", merge(sig, Signature{{{"C1", 1}}, {}}));
  CHECK(equal(rewrite_atoms_forest(plain, enc, "parent"), plain));

  Rng rng(157);
  FormulaShape shape;
  shape.free = {"x"};
  shape.qrank = 2;
  shape.size = 5;
  for (int it = 0; it < 100; ++it) {
    Graph g = random_gnp(uniform_int(rng, 1, 8), 0.35, rng);
    auto a = colored_graph(g, rng);
    auto f = dfs_elimination_forest(g);
    auto en = encode_relations(a, f, std::max(1, f.depth()));
    Formula phi = random_formula(signature_of(a), shape, rng);
    Formula rw = rewrite_atoms_forest(phi, en, "parent", coin(rng, 0.5));
    auto fa = forest_structure(en.forest);
    for (const auto& [name, ar] : symbols_of(rw).relations)
      if (!fa.relations.count(name)) fa.add_unary(name, {});
    for (int x = 0; x < a.n; ++x) CHECK(eval(a, phi, {{"x", x}}) == eval(fa, rw, {{"x", x}}));
  }
}

TEST_CASE("td_qe") {
  auto p4 = graph_structure(make_path(4));
  auto r = td_qe(parse_formula("(exists (y) (E x y))", graph_signature()), p4, 2);
  CHECK(satisfying_tuples(r.structure, r.formula, r.free_vars).count() == 4);
  auto closed = td_qe(parse_formula("(exists (x y) (E x y))", graph_signature()), p4);
  CHECK(closed.formula->kind == Kind::Atom);
  CHECK(eval(closed.structure, closed.formula));
  CHECK_THROWS_AS(td_qe(parse_formula("(exists (y) (E x y))", graph_signature()), graph_structure(make_path(9)), 1),
                  PreconditionError);
  CHECK_THROWS_AS(td_qe(parse_formula("(forall (y) (E x y))", graph_signature()), p4), PreconditionError);

  Rng rng(163);
  for (int it = 0; it < 100; ++it) {
    auto a = colored_graph(random_tree(uniform_int(rng, 1, 12), rng), rng);
    a.set_flag("F", coin(rng, 0.5));
    int nf = uniform_int(rng, 0, 2), nb = uniform_int(rng, 1, 3 - nf);
    std::vector<std::string> fr, bd;
    for (int i = 0; i < nf; ++i) fr.push_back("x" + std::to_string(i));
    for (int i = 0; i < nb; ++i) bd.push_back("y" + std::to_string(i));
    Formula phi = random_existential(signature_of(a), fr, bd, uniform_int(rng, 1, 4), false, 0, rng);
    TdQeOptions opt;
    opt.free_order = fr;
    auto res = td_qe(phi, a, -1, opt);
    CHECK(satisfying_tuples(a, phi, fr) == satisfying_tuples(res.structure, res.formula, fr));
    CHECK(edge_subset(gaifman_graph(res.structure), gaifman_graph(a)));
    CHECK(unary_signature(res.signature));
  }
}

TEST_CASE("treedepth and colourings") {
  CHECK(treedepth_exact(Graph(0)) == 0);
  CHECK(treedepth_exact(Graph(3)) == 1);
  CHECK(treedepth_exact(make_path(3)) == 2);
  CHECK(treedepth_exact(make_path(7)) == 3);
  CHECK(treedepth_exact(make_path(8)) == 4);
  CHECK(treedepth_exact(make_complete(4)) == 4);
  CHECK(treedepth_exact(make_star(6)) == 2);
  CHECK(treedepth_exact(make_cycle(6)) == 4);

  LtdColoring mono{1, std::vector<int>(4, 0), 2};
  CHECK_FALSE(verify_ltd_coloring(make_path(4), mono, 2));
  CHECK(verify_ltd_coloring(Graph(4), mono, 2));
  LtdColoring p8{3, {0, 1, 0, 2, 0, 1, 0, 2}, 2};
  CHECK(verify_ltd_coloring(make_path(8), p8, 2));
  auto built = low_treedepth_coloring(make_path(8), 2);
  CHECK(verify_ltd_coloring(make_path(8), built, 2));
  CHECK(built.palette <= 3);

  Rng rng(167);
  for (int it = 0; it < 30; ++it) {
    RootedForest f = random_forest(uniform_int(rng, 1, 20), 4, {}, 0, rng);
    int p = uniform_int(rng, 1, 4);
    CHECK(verify_ltd_coloring(forest_graph(f), level_coloring(f, p), p));
  }
  for (int it = 0; it < 30; ++it) {
    Graph g = random_bounded_degree(uniform_int(rng, 1, 20), 3, 60, rng);
    int p = uniform_int(rng, 1, 3);
    auto chi = low_treedepth_coloring(g, p);
    CHECK(verify_ltd_coloring(g, chi, p));
    if (p == 1) {
      for (auto [u, v] : g.edges()) CHECK(chi.color[u] != chi.color[v]);
    }
  }
}

TEST_CASE("existential_qe_be") {
  Signature sig = graph_signature();
  auto phi = parse_formula("(exists (y) (E x y))", sig);
  auto c6 = graph_structure(make_cycle(6));
  LtdColoring one{1, std::vector<int>(6, 0), 2};
  auto single = existential_qe_be(phi, c6, one);
  CHECK(single.stats.pieces == 1);
  LtdColoring three{3, {0, 1, 2, 0, 1, 2}, 2};
  REQUIRE(verify_ltd_coloring(make_cycle(6), three, 2));
  auto multi = existential_qe_be(phi, c6, three);
  CHECK(multi.stats.pieces == 3);
  CHECK(satisfying_tuples(multi.structure, multi.formula, {"x"}).count() == 6);
  CHECK_THROWS_AS(existential_qe_be(parse_formula("(exists (y z) (E y z))", sig), c6, LtdColoring{3, three.color, 1}),
                  PreconditionError);
  BeQeOptions tight;
  tight.max_ranges = 2;
  CHECK_THROWS_AS(existential_qe_be(phi, c6, three, tight), BudgetExceeded);

  Rng rng(173);
  for (int it = 0; it < 100; ++it) {
    Graph g = random_bounded_degree(uniform_int(rng, 1, 10), 3, 40, rng);
    auto a = colored_graph(g, rng);
    int nf = uniform_int(rng, 0, 2), nb = uniform_int(rng, 1, 2);
    std::vector<std::string> fr, bd;
    for (int i = 0; i < nf; ++i) fr.push_back("x" + std::to_string(i));
    for (int i = 0; i < nb; ++i) bd.push_back("y" + std::to_string(i));
    Formula psi = random_existential(signature_of(a), fr, bd, uniform_int(rng, 1, 4), false, 0, rng);
    auto chi = low_treedepth_coloring(g, nf + nb);
    BeQeOptions opt;
    opt.td.free_order = fr;
    auto res = existential_qe_be(psi, a, chi, opt);
    CHECK(satisfying_tuples(a, psi, fr) == satisfying_tuples(res.structure, res.formula, fr));
    CHECK(edge_subset(gaifman_graph(res.structure), gaifman_graph(a)));
    CHECK(unary_signature(res.signature));
  }
  // functions are turned into relations before restricting to a range
  RootedForest f = random_forest(9, 3, {"C1"}, 0.5, rng);
  auto fa = forest_structure(f);
  auto fphi = parse_formula("(exists (y) (and (C1 (parent y)) (= (parent (parent y)) x)))", signature_of(fa));
  auto chi = low_treedepth_coloring(forest_graph(f), 2);
  if (chi.palette > 2) {
    BeQeOptions o;
    o.td.free_order = {"x"};
    auto fr = existential_qe_be(fphi, fa, LtdColoring{chi.palette, chi.color, 4}, o);
    CHECK(satisfying_tuples(fa, fphi, {"x"}) == satisfying_tuples(fr.structure, fr.formula, {"x"}));
  }
}

TEST_CASE("full_qe") {
  Signature sig = merge(graph_signature(), Signature{{{"C1", 1}}, {}});
  auto a = graph_structure(make_path(5));
  a.add_unary("C1", {2});
  auto qf = parse_formula("(and (E x y) (C1 x))", sig);
  auto r0 = full_qe(qf, a);
  CHECK(equal(r0.formula, qf));
  CHECK(r0.signature.relations.empty());
  CHECK(r0.signature.functions.empty());
  auto none = full_qe(parse_formula("(not (exists (x) (C1 x)))", sig), a);
  CHECK(none.formula->kind == Kind::Not);
  CHECK_FALSE(eval(none.structure, none.formula));

  Rng rng(179);
  for (int it = 0; it < 200; ++it) {
    Instance in = random_instance(rng, 10);
    FormulaShape shape;
    shape.free = coin(rng, 0.5) ? std::vector<std::string>{"x"} : std::vector<std::string>{};
    shape.qrank = uniform_int(rng, 1, 3);
    shape.max_alternation = 2;
    shape.max_block = uniform_int(rng, 1, 2);
    shape.size = uniform_int(rng, 3, 6);
    shape.forest_terms = in.forest_terms;
    Formula phi = random_formula(in.sig, shape, rng);
    FullQeOptions opt;
    opt.free_order = shape.free;
    auto res = full_qe(phi, in.a, opt);
    INFO(print_formula(phi));
    CHECK(satisfying_tuples(in.a, phi, shape.free) == satisfying_tuples(res.structure, res.formula, shape.free));
    CHECK(edge_subset(gaifman_graph(res.structure), gaifman_graph(in.a)));
    for (const auto& name : res.signature.functions) CHECK(res.structure.functions.count(name));
    CHECK(unary_signature(res.signature));
  }
}

TEST_CASE("model checking drivers") {
  auto k2 = graph_structure(make_complete(2));
  auto some_edge = parse_formula("(exists (x y) (E x y))", graph_signature());
  CHECK(model_check_qe(k2, some_edge));
  CHECK(model_check_selector(k2, some_edge));
  CHECK_THROWS_AS(model_check_qe(k2, parse_formula("(E x y)", graph_signature())), PreconditionError);

  auto c5 = graph_structure(make_cycle(5));
  CHECK(selector(c5, 2, {}).size() == 1);
  auto p3 = graph_structure(make_path(3));
  CHECK(selector(p3, 1, {}) == std::vector<int>{0, 1});

  Rng rng(181);
  for (int it = 0; it < 60; ++it) {
    Instance in = random_instance(rng, 8);
    FormulaShape shape;
    shape.qrank = uniform_int(rng, 1, 3);
    shape.max_block = uniform_int(rng, 1, 2);
    shape.size = uniform_int(rng, 3, 6);
    shape.forest_terms = in.forest_terms;
    Formula phi = random_formula(in.sig, shape, rng);
    bool want = eval(in.a, phi);
    INFO(print_formula(phi));
    CHECK(model_check_qe(in.a, phi) == want);
    CHECK(model_check_selector(in.a, phi) == want);
  }
  for (int it = 0; it < 30; ++it) {
    Instance in = random_instance(rng, 8);
    FormulaShape shape;
    shape.free = {"x", "y"};
    shape.qrank = 2;
    shape.size = 4;
    shape.forest_terms = in.forest_terms;
    Formula phi = random_formula(in.sig, shape, rng);
    FullQeOptions opt;
    opt.free_order = shape.free;
    auto q = query_structure(full_qe(phi, in.a, opt));
    auto want = satisfying_tuples(in.a, phi, shape.free);
    for (int x = 0; x < in.a.n; ++x)
      for (int y = 0; y < in.a.n; ++y) CHECK(q({x, y}) == want.contains({x, y}));
  }
}
