#include <algorithm>

#include "doctest.h"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/io.hpp"
#include "sparsefo/oracle.hpp"
#include "sparsefo/structures.hpp"

using namespace sparsefo;

namespace {

// Floyd-Warshall distances, independent of the BFS in the library.
std::vector<std::vector<int>> apsp(const Graph& g) {
  int n = g.size();
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int v = 0; v < n; ++v) d[v][v] = 0;
  for (auto [u, v] : g.edges()) d[u][v] = d[v][u] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace

TEST_CASE("ball on small graphs") {
  Graph p3 = make_path(3);
  CHECK(ball(p3, 1, 1) == std::vector<int>{0, 1, 2});
  CHECK(ball(p3, 1, 0) == std::vector<int>{1});
  CHECK(ball(make_cycle(6), 0, 2) == std::vector<int>{0, 1, 2, 4, 5});
  CHECK_THROWS_AS(ball(p3, 7, 1), InputError);
}

TEST_CASE("ball agrees with all-pairs distances and is monotone") {
  Rng rng(11);
  for (int it = 0; it < 40; ++it) {
    Graph g = random_gnp(uniform_int(rng, 1, 12), 0.25, rng);
    auto d = apsp(g);
    for (int v = 0; v < g.size(); ++v)
      for (int r = 0; r <= 4; ++r) {
        std::vector<int> want;
        for (int u = 0; u < g.size(); ++u)
          if (d[v][u] <= r) want.push_back(u);
        auto b = ball(g, v, r);
        CHECK(b == want);
        auto b2 = ball(g, v, r + 1);
        CHECK(std::includes(b2.begin(), b2.end(), b.begin(), b.end()));
      }
  }
}

TEST_CASE("radius") {
  CHECK(radius(Graph(1)) == Radius::of(0));
  CHECK(radius(Graph(2)).infinite);
  CHECK(radius(make_path(5)) == Radius::of(2));
  CHECK(radius(make_cycle(6)) == Radius::of(3));
}

TEST_CASE("isolate") {
  Graph k3 = make_complete(3);
  CHECK(isolate(k3, {}) == k3);
  Graph one = isolate(k3, {0});
  CHECK(one.edge_count() == 1);
  CHECK(one.adjacent(1, 2));
  CHECK(isolate(make_star(3), {0}).edge_count() == 0);
  Rng rng(3);
  for (int it = 0; it < 20; ++it) {
    Graph g = random_gnp(8, 0.4, rng);
    std::vector<int> s{uniform_int(rng, 0, 7), uniform_int(rng, 0, 7)};
    CHECK(isolate(isolate(g, s), s) == isolate(g, s));
  }
  CHECK_THROWS_AS(isolate(k3, {5}), InputError);
}

TEST_CASE("build_tdk sizes") {
  CHECK(build_tdk(1, 5).size() == 1);
  CHECK(build_tdk(2, 3).size() == 4);
  CHECK(build_tdk(3, 2).size() == 7);
  for (int d = 1; d <= 5; ++d)
    for (int k = 1; k <= 4; ++k) {
      int want = 0, p = 1;
      for (int i = 0; i < d; ++i, p *= k) want += p;
      auto t = build_tdk(d, k);
      CHECK(t.size() == want);
      CHECK(t.depth() == d);
    }
  CHECK(build_fdk(2, 2, 3).roots().size() == 3);
  CHECK_THROWS_AS(build_tdk(0, 2), PreconditionError);
}

TEST_CASE("subdivide") {
  Graph star = forest_graph(build_tdk(2, 2));
  auto s1 = subdivide_uniform(star, 1);
  CHECK(graph_canonical_key(s1.graph) == graph_canonical_key(star));
  auto s2 = subdivide_uniform(star, 2);
  CHECK(graph_canonical_key(s2.graph) == graph_canonical_key(make_path(5)));
  CHECK(verify_embedding(star, s2.graph, s2.embedding, 1));
  CHECK_FALSE(verify_embedding(star, s2.graph, s2.embedding, 0));
  auto t = subdivide_levels(build_tdk(2, 3), {3});
  CHECK(t.graph.size() == 10);
  CHECK(verify_embedding(forest_graph(build_tdk(2, 3)), t.graph, t.embedding, 2));
}

TEST_CASE("subdivide with unit lengths is isomorphic, on random trees") {
  Rng rng(5);
  for (int it = 0; it < 30; ++it) {
    Graph t = random_tree(uniform_int(rng, 1, 12), rng);
    CHECK(graph_canonical_key(subdivide_uniform(t, 1).graph) == graph_canonical_key(t));
  }
}

TEST_CASE("canonical key separates and identifies") {
  Rng rng(9);
  for (int it = 0; it < 60; ++it) {
    Graph g = random_gnp(uniform_int(rng, 1, 9), 0.4, rng);
    std::vector<int> perm(g.size());
    for (int i = 0; i < g.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Graph h(g.size());
    for (auto [u, v] : g.edges()) h.add_edge(perm[u], perm[v]);
    CHECK(graph_canonical_key(g) == graph_canonical_key(h));
  }
  CHECK(graph_canonical_key(make_path(4)) != graph_canonical_key(make_star(3)));
  CHECK(graph_canonical_key(make_cycle(6)) != graph_canonical_key(
                                                  [] {
                                                    Graph g(6);
                                                    for (int i : {0, 3}) {
                                                      g.add_edge(i, i + 1);
                                                      g.add_edge(i + 1, i + 2);
                                                      g.add_edge(i + 2, i);
                                                    }
                                                    return g;
                                                  }()));
}

TEST_CASE("gaifman graph") {
  RelationalStructure a;
  a.n = 3;
  a.add_unary("U", {0, 2});
  CHECK(gaifman_graph(a).edge_count() == 0);
  a.relations["R"] = Relation{2, {{0, 1}}};
  CHECK(gaifman_graph(a).adjacent(0, 1));
  a.relations["T"] = Relation{3, {{0, 1, 2}}};
  CHECK(gaifman_graph(a) == make_complete(3));
  Rng rng(1);
  for (int it = 0; it < 10; ++it) {
    auto f = random_forest(12, 4, {}, 0, rng);
    CHECK(gaifman_graph(forest_structure(f)) == forest_graph(f));
  }
}

TEST_CASE("file formats round trip") {
  Graph g = make_cycle(5);
  CHECK(parse_graph(write_graph(g)) == g);
  auto f = build_tdk(3, 2);
  f.colors["C1"] = {1, 4};
  f.flags["F"] = true;
  auto f2 = parse_forest(write_forest(f));
  CHECK(f2.parent == f.parent);
  CHECK(f2.colors == f.colors);
  CHECK(f2.flags == f.flags);
  RelationalStructure a = forest_structure(f);
  a.relations["R"] = Relation{3, {{0, 1, 2}, {2, 2, 2}}};
  auto a2 = parse_structure(write_structure(a));
  CHECK(write_structure(a2) == write_structure(a));
  CHECK_THROWS_AS(parse_graph("graph 2\ne 0 5\n"), InputError);
  CHECK_THROWS_AS(parse_forest("forest 2\np 0 1\np 1 0\n"), InputError);
  CHECK_THROWS_AS(parse_structure("structure 2\nrel R 2\n0 1 1\n"), InputError);
}

TEST_CASE("flags survive conversion") {
  RootedForest f;
  f.parent = {0, 0};
  f.flags["F"] = true;
  f.flags["G"] = false;
  auto a = forest_structure(f);
  CHECK(a.flag("F"));
  CHECK_FALSE(a.flag("G"));
}
