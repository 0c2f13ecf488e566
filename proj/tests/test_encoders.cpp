#include <algorithm>
#include <cmath>
#include <iostream>

#include "doctest.h"
#include "sparsefo/encoders.hpp"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/oracle.hpp"

using namespace sparsefo;

namespace {

Formula parse_graph(const std::string& s) { return parse_formula(s, graph_signature()); }

const char* kTriangleFree = "(not (exists (x y z) (and (E x y) (E y z) (E x z))))";
const char* kIsolated = "(exists (x) (forall (y) (not (E x y))))";
const char* kHasEdge = "(exists (x y) (E x y))";

std::vector<Graph> all_graphs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  std::vector<Graph> out;
  for (unsigned mask = 0; mask < (1u << pairs.size()); ++mask) {
    Graph g(n);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (mask >> i & 1) g.add_edge(pairs[i].first, pairs[i].second);
    out.push_back(g);
  }
  return out;
}

bool forest_eval(const RootedForest& f, const Formula& phi) { return eval(forest_structure(f), phi, {}, 2'000'000'000); }
bool graph_eval(const Graph& g, const Formula& phi) { return eval(graph_structure(g), phi, {}, 2'000'000'000); }

// Forests over [2] of depth D built from distinct trees of depth D, at most `max_nodes` nodes.
void each_forest_over_2(int D, int max_nodes, const std::function<void(const RootedForest&)>& visit) {
  auto trees = enumerate_trees_over_m(D, 2);
  RootedForest cur;
  cur.colors[color_name(1)];
  cur.colors[color_name(2)];
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == trees.size()) {
      if (cur.size() > 0) visit(cur);
      return;
    }
    rec(i + 1);
    if (cur.size() + trees[i].tree.size() > max_nodes) return;
    RootedForest saved = cur;
    append_tree(cur, trees[i].tree, -1);
    rec(i + 1);
    cur = saved;
  };
  rec(0);
}

}  // namespace

TEST_CASE("tower") {
  CHECK(tower(0, 3) == 3);
  CHECK(tower(1, 2) == 4);
  CHECK(tower(2, 2) == 16);
  CHECK(tower(3, 2) == 65536);
  CHECK(tower(2, 0) == 2);
  CHECK(tower(4, 2) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("trees over [m]") {
  struct Row { int d, m; std::size_t count; };
  for (auto row : {Row{1, 3, 3}, Row{2, 2, 4}, Row{2, 3, 8}, Row{3, 2, 16}, Row{1, 1, 1}, Row{3, 1, 4}}) {
    auto trees = enumerate_trees_over_m(row.d, row.m);
    CHECK(trees.size() == row.count);
    std::set<std::string> codes;
    for (const auto& t : trees) {
      codes.insert(t.code);
      CHECK(t.depth == row.d);
      CHECK(t.tree.depth() <= row.d);
      t.tree.validate();
      // children of every node carry pairwise distinct subtrees
      auto sc = subtree_codes(t.tree);
      auto ch = t.tree.children();
      for (const auto& kids : ch) {
        std::set<int> seen;
        for (int c : kids) CHECK(seen.insert(sc[static_cast<std::size_t>(c)]).second);
      }
      for (int v = 0; v < t.tree.size(); ++v) {
        int colors = 0;
        for (const auto& [_, s] : t.tree.colors) colors += static_cast<int>(s.count(v));
        CHECK(colors == (ch[static_cast<std::size_t>(v)].empty() && row.d - t.tree.node_depths()[static_cast<std::size_t>(v)] == 0 ? 1 : 0));
      }
    }
    CHECK(codes.size() == row.count);
    CHECK(std::is_sorted(trees.begin(), trees.end(), [](const auto& a, const auto& b) { return a.code < b.code; }));
    // pairwise non-isomorphic as coloured trees
    RootedForest all;
    std::vector<int> roots;
    for (const auto& t : trees) roots.push_back(append_tree(all, t.tree, -1));
    auto sc = subtree_codes(all);
    std::set<int> rc;
    for (int r : roots) rc.insert(sc[static_cast<std::size_t>(r)]);
    CHECK(rc.size() == row.count);
  }
  auto t22 = enumerate_trees_over_m(2, 2);
  CHECK(t22[0].code == "()");
  CHECK(t22[1].code == "(1)");
  CHECK(t22[2].code == "(1,2)");
  CHECK(t22[3].code == "(2)");
  CHECK_THROWS_AS(enumerate_trees_over_m(3, 3, 100), BudgetExceeded);
  CHECK_THROWS_AS(enumerate_trees_over_m(0, 2), PreconditionError);
}

TEST_CASE("xi on leaves") {
  RootedForest f;
  f.parent = {0, 1, 2};
  f.colors[color_name(1)] = {0, 1};
  f.colors[color_name(2)] = {2};
  auto xi = xi_formula(1, 2);
  auto a = forest_structure(f);
  CHECK(eval(a, xi, {{"x", 0}, {"y", 1}}));
  CHECK_FALSE(eval(a, xi, {{"x", 0}, {"y", 2}}));
  CHECK(eval(a, xi, {{"x", 2}, {"y", 2}}));
  CHECK_THROWS_AS(xi_formula(0, 2), PreconditionError);
}

TEST_CASE("xi agrees with subtree isomorphism on all small forests over [2]") {
  auto xi = xi_formula(3, 2);
  std::size_t forests = 0, pairs = 0, iso = 0;
  for (int D = 1; D <= 3; ++D)
    each_forest_over_2(D, 12, [&](const RootedForest& f) {
      ++forests;
      auto a = forest_structure(f);
      Evaluator ev(a, xi, {"x", "y"});
      for (int u = 0; u < f.size(); ++u)
        for (int v = 0; v < f.size(); ++v) {
          bool want = subtree_iso(f, u, v);
          iso += want;
          ++pairs;
          REQUIRE(ev({u, v}) == want);
        }
    });
  MESSAGE("forests " << forests << ", pairs " << pairs << ", isomorphic " << iso << ", |xi_3,2| " << formula_size(xi));
  CHECK(forests == 304);
}

TEST_CASE("encode_graph examples") {
  Graph k2(2);
  k2.add_edge(0, 1);
  auto enc = encode_graph(k2, parse_graph(kHasEdge), 1);
  CHECK(enc.m == 1);
  CHECK(enc.forest.roots().size() == 3);
  CHECK(enc.forest.depth() == 3);
  CHECK(graph_eval(k2, parse_graph(kHasEdge)));
  CHECK(forest_eval(enc.forest, enc.formula));

  auto empty = encode_graph(Graph(3), parse_graph(kHasEdge), 1);
  CHECK(empty.m == 2);
  CHECK(empty.forest.roots().size() == 3);
  CHECK_FALSE(forest_eval(empty.forest, empty.formula));

  CHECK_THROWS_AS(encode_graph(k2, parse_formula("(exists (x) (P x))", merge(graph_signature(), {{{"P", 1}}, {}})), 1),
                  InputError);
  CHECK_THROWS_AS(encode_graph(Graph(70000), parse_graph(kHasEdge), 1, 1 << 10), BudgetExceeded);
}

TEST_CASE("encode_graph is exact on all graphs with at most 4 vertices") {
  double worst = 0;
  std::size_t checked = 0;
  for (const char* text : {kTriangleFree, kIsolated, kHasEdge}) {
    auto phi = parse_graph(text);
    for (int n = 1; n <= 4; ++n)
      for (const auto& g : all_graphs(n)) {
        auto enc = encode_graph(g, phi, 1);
        CHECK(tower(1, static_cast<std::uint64_t>(enc.m)) >= static_cast<std::uint64_t>(n));
        if (n > 1) CHECK(tower(1, static_cast<std::uint64_t>(enc.m - 1)) < static_cast<std::uint64_t>(n));
        CHECK(enc.forest.depth() <= 3);
        // gadgets pairwise non-isomorphic
        auto sc = subtree_codes(enc.forest);
        std::set<int> rc;
        for (int r : enc.forest.roots()) rc.insert(sc[static_cast<std::size_t>(r)]);
        CHECK(rc.size() == enc.forest.roots().size());
        REQUIRE(graph_eval(g, phi) == forest_eval(enc.forest, enc.formula));
        worst = std::max(worst, enc.forest.size() / std::pow(n, 2.0));
        ++checked;
      }
  }
  MESSAGE("instances " << checked << ", max |F| / n^2 = " << worst);
  CHECK(worst <= 16);
}

TEST_CASE("uncolor_forest examples") {
  RootedForest one;
  one.parent = {0};
  one.colors[color_name(1)] = {0};
  auto u = uncolor_forest(one, f_true());
  CHECK(u.pendants == std::vector<int>{3 + 5});
  CHECK(u.formula->kind == Kind::True);
  CHECK(u.graph.size() == 9);
  CHECK(forest_eval(one, parse_formula("(exists (x) (C1 x))", forest_signature(one))));
  auto v = uncolor_forest(one, parse_formula("(exists (x) (C1 x))", forest_signature(one)));
  CHECK(graph_eval(v.graph, v.formula));

  RootedForest two = one;
  two.colors[color_name(2)] = {0};
  CHECK_THROWS_AS(uncolor_forest(two, f_true()), PreconditionError);
}

TEST_CASE("uncolor_forest preserves truth on random coloured forests") {
  Rng rng(default_seed(71));
  int agree = 0, truths = 0;
  for (int it = 0; it < 50; ++it) {
    int n = uniform_int(rng, 1, 15);
    RootedForest f = random_forest(n, 3, {"C1", "C2"}, 0.35, rng);
    for (int v = 0; v < n; ++v)
      if (f.colors["C1"].count(v)) f.colors["C2"].erase(v);
    FormulaShape shape;
    shape.qrank = 2;
    shape.size = 5;
    shape.forest_terms = true;
    Formula phi;
    do phi = random_formula(forest_signature(f), shape, rng);
    while (quantifier_rank(phi) == 0);
    auto u = uncolor_forest(f, phi);
    CHECK(u.rooted.depth() <= std::max(1, f.depth()) + 1);
    for (int v = 0; v < u.graph.size(); ++v) CHECK(u.graph.degree(v) != 2);
    CHECK(u.graph.size() <= f.size() * (2 * 2 + 6));
    bool want = forest_eval(f, phi);
    truths += want;
    bool got = graph_eval(u.graph, u.formula);
    if (got != want) FAIL_CHECK("mismatch on " << print_formula(phi));
    agree += got == want;
  }
  CHECK(agree == 50);
  CHECK(truths > 5);
  CHECK(truths < 45);
}

TEST_CASE("assemble_reduction") {
  Graph three(3);
  three.add_edge(0, 1);
  for (const char* text : {kHasEdge, kIsolated, "(forall (x y) (or (= x y) (E x y)))"}) {
    auto phi = parse_graph(text);
    auto s = subdivide_with_formula(three, phi, 1);
    CHECK(s.subdivision.graph.size() == 4);
    CHECK(graph_eval(three, phi) == graph_eval(s.subdivision.graph, s.formula));
  }
  CHECK_THROWS_AS(subdivide_with_formula(make_path(3), f_true(), 1), PreconditionError);

  for (const char* text : {kTriangleFree, kIsolated}) {
    auto phi = parse_graph(text);
    for (int n = 1; n <= 3; ++n)
      for (const auto& g : all_graphs(n)) {
        bool want = graph_eval(g, phi);
        auto plain = assemble_reduction(g, phi, 1);
        CHECK(plain.graph == plain.uncolored.graph);
        REQUIRE(graph_eval(plain.graph, plain.formula) == want);
        auto red = assemble_reduction(g, phi, 1, 1);
        CHECK(red.graph.size() == plain.graph.size() + plain.graph.edge_count());
        for (int v = 0; v < plain.graph.size(); ++v)
          CHECK(red.graph.degree(red.principal[static_cast<std::size_t>(v)]) == plain.graph.degree(v));
        REQUIRE(graph_eval(red.graph, red.formula) == want);
      }
  }
}
