#include <algorithm>
#include <chrono>

#include "doctest.h"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/oracle.hpp"
#include "sparsefo/splitter.hpp"

using namespace sparsefo;

namespace {

// Plain minimax straight from the rules: no memo, no components, all batches of size <= m.
bool wins_within(const Graph& g, int r, int m, int rounds) {
  if (g.size() == 0) return true;
  if (rounds == 0) return false;
  for (int v = 0; v < g.size(); ++v) {
    auto b = ball(g, v, r);
    auto bg = induced_subgraph(g, b).graph;
    int n = bg.size();
    bool splitter_ok = false;
    for (int mask = 0; mask < (1 << n) && !splitter_ok; ++mask) {
      if (__builtin_popcount(mask) > m) continue;
      std::vector<int> drop;
      for (int i = 0; i < n; ++i)
        if (mask >> i & 1) drop.push_back(i);
      splitter_ok = wins_within(remove_vertices(bg, drop).graph, r, m, rounds - 1);
    }
    if (!splitter_ok) return false;
  }
  return true;
}

int naive_rank(const Graph& g, int r, int m) {
  int d = 0;
  while (!wins_within(g, r, m, d)) ++d;
  return d;
}

}  // namespace

TEST_CASE("play_game basics") {
  auto gs = greedy_splitter();
  auto gl = greedy_localiser();
  auto empty = play_game(Graph(0), 1, 1, gs, gl, 10);
  CHECK(empty.splitter_won);
  CHECK(empty.rounds == 0);
  auto k1 = play_game(Graph(1), 1, 1, gs, gl, 10);
  CHECK(k1.splitter_won);
  CHECK(k1.rounds == 1);
  auto p3 = play_game(make_path(3), 1, 1, gs, gl, 10);
  CHECK(p3.splitter_won);
  CHECK(p3.rounds == 2);
  CHECK(p3.transcript[0].center == 1);
  CHECK(p3.transcript[0].removed == std::vector<int>{1});

  SplitterStrategy cheat = [](const GameState&, int, const InducedSubgraph&) { return std::vector<int>{4}; };
  try {
    play_game(make_path(6), 1, 1, cheat, [](const GameState&) { return 0; }, 5);
    FAIL("illegal move accepted");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("round 0") != std::string::npos);
  }
  SplitterStrategy greedy_all = [](const GameState&, int, const InducedSubgraph& b) { return b.to_old; };
  auto over = play_game(make_star(4), 1, 2, greedy_all, gl, 5);
  CHECK(over.oversize_round == 0);
  CHECK_FALSE(over.splitter_won);
}

TEST_CASE("game_rank_exact examples") {
  for (int n = 1; n <= 4; ++n)
    for (int r = 0; r <= 2; ++r) CHECK(game_rank_exact(Graph(n), r, 1, 10) == 1);
  CHECK(game_rank_exact(Graph(0), 1, 1, 10) == 0);
  CHECK(game_rank_exact(make_star(3), 1, 4, 10) == 1);
  CHECK(game_rank_exact(make_star(3), 1, 1, 10) == 2);
  CHECK(game_rank_exact(make_path(3), 1, 1, 10) == 2);
  CHECK_FALSE(game_rank_exact(make_path(8), 8, 1, 2).has_value());
}

TEST_CASE("game_rank_exact agrees with plain minimax") {
  Rng rng(101);
  for (int it = 0; it < 60; ++it) {
    Graph g = random_gnp(uniform_int(rng, 1, 6), 0.4, rng);
    int r = uniform_int(rng, 0, 2), m = uniform_int(rng, 1, 2);
    CHECK(game_rank_exact(g, r, m, 10) == naive_rank(g, r, m));
  }
}

TEST_CASE("game rank is monotone in the radius and ignores isolation padding") {
  Rng rng(103);
  for (int it = 0; it < 40; ++it) {
    Graph g = random_gnp(uniform_int(rng, 2, 8), 0.35, rng);
    int m = uniform_int(rng, 1, 2);
    int prev = 0;
    for (int r = 0; r <= 3; ++r) {
      int d = *game_rank_exact(g, r, m, 20);
      CHECK(prev <= d);
      prev = d;
    }
    int r = uniform_int(rng, 1, 2);
    int v = uniform_int(rng, 0, g.size() - 1);
    auto b = induced_subgraph(g, ball(g, v, r)).graph;
    std::vector<int> s;
    for (int i = 0; i < m && i < b.size(); ++i) s.push_back(uniform_int(rng, 0, b.size() - 1));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    int minus = *game_rank_exact(remove_vertices(b, s).graph, r, m, 20);
    int star = *game_rank_exact(isolate(b, s), r, m, 20);
    if (minus >= 1) CHECK(star <= minus);
  }
}

TEST_CASE("strategy constants") {
  auto c = strategy_constants(2, 1, 2);
  CHECK(c.z == 1);
  CHECK(c.k_prime == 5);
  CHECK(c.t == 4);
  CHECK(c.c == 4);
  auto c2 = strategy_constants(2, 2, 3);
  CHECK(c2.z == 1);
  CHECK(c2.k_prime == 11);
  CHECK(c2.c == 81);
  // T^2_2 fully 1-subdivided has 5 vertices
  CHECK(strategy_constants(3, 2, 2).z == 5);
  CHECK(winning_batch_size(1, 2, 3) == 1 + 2 + 4);
  CHECK(winning_batch_size(1, 3, 1) == 1);
  CHECK(winning_batch_size(2, 1, 2) == std::max<std::int64_t>(strategy_constants(3, 1, 2).c,
                                                       winning_batch_size(1, 1, strategy_constants(3, 1, 2).k_prime)));
  CHECK(winning_batch_size(3, 2, 2) > 0);
}

TEST_CASE("constructive Splitter wins on conforming inputs") {
  Rng rng(107);
  // d = 1: maximum degree k-1 excludes T^2_k.
  for (int it = 0; it < 20; ++it) {
    int k = uniform_int(rng, 2, 4), r = uniform_int(rng, 1, 2);
    Graph g = random_bounded_degree(uniform_int(rng, 1, 10), k - 1, 30, rng);
    auto audit = audit_splitter(g, r, static_cast<int>(winning_batch_size(1, r, k)), splitter_strategy_first_moves(1, r, k), 1);
    CHECK(audit.worst_rounds <= 1);
    CHECK(audit.max_batch <= winning_batch_size(1, r, k));
  }
  // G = <=1-subdivision of T^2_4, d = 2, k = 5, radius 2.
  Rng rng2(109);
  for (int it = 0; it < 5; ++it) {
    auto sub = random_subdivision(forest_graph(build_tdk(2, 4)), 1, rng2);
    std::int64_t m = winning_batch_size(2, 2, 5);
    auto audit = audit_splitter(sub.graph, 2, static_cast<int>(std::min<std::int64_t>(m, 1 << 30)),
                                splitter_strategy_first_moves(2, 2, 5), 2);
    CHECK(audit.worst_rounds <= 2);
    CHECK(audit.max_batch <= m);
  }
}

TEST_CASE("constructive Splitter flags a violated hypothesis") {
  // K_{1,5} contains T^2_3; with d=1, k=3, r=1 the batch bound is 3 but the ball has 6 vertices.
  auto res = play_game(make_star(5), 1, static_cast<int>(winning_batch_size(1, 1, 3)), splitter_strategy_first_moves(1, 1, 3),
                       greedy_localiser(), 3);
  CHECK(res.oversize_round == 0);
}

TEST_CASE("Localiser survives on subdivided trees") {
  // d=1, m=2: subdivided star with three arms, radius r+1.
  Rng rng(113);
  for (int r = 0; r <= 2; ++r) {
    RootedForest t = build_tdk(2, 3);
    auto sub = random_subdivision(forest_graph(t), r, rng);
    auto loc = localiser_strategy_subdivision(t, sub.embedding, sub.graph);
    CHECK(localiser_guarantee_applies(t, sub.embedding, r + 1, 2, r));
    CHECK(audit_localiser(sub.graph, r + 1, 2, loc, 2) >= 2);
  }
  // d=2, m=1: T^3_2 unsubdivided at radius 2.
  RootedForest t3 = build_tdk(3, 2);
  Graph g3 = forest_graph(t3);
  Embedding id = subdivide_uniform(g3, 1).embedding;
  auto loc = localiser_strategy_subdivision(t3, id, g3);
  CHECK(audit_localiser(g3, 2, 1, loc, 3) >= 3);
  // too little branching: the guarantee does not apply
  CHECK_FALSE(localiser_guarantee_applies(t3, id, 2, 2, 0));
  Embedding bad;
  CHECK_THROWS_AS(localiser_strategy_subdivision(t3, bad, g3), InputError);
}

TEST_CASE("rank sentences") {
  auto p3 = graph_structure(make_path(3));
  CHECK_FALSE(eval(p3, rank_sentence(1, 1, 2)));
  CHECK(eval(p3, rank_sentence(1, 1, 3)));
  CHECK(batched_qrank(rank_sentence(2, 2, 2), rank_block_bound(2, 2)) == 4);
  for (int r = 0; r <= 2; ++r)
    for (int m = 1; m <= 3; ++m)
      for (int d = 1; d <= 3; ++d) {
        auto phi = rank_sentence(d, r, m);
        CHECK(free_vars(phi).empty());
        CHECK(batched_qrank(phi, rank_block_bound(r, m)) == 3 * d - 2);
      }
  auto down = rankdown_formula(1, 1, 2);
  CHECK(free_vars(down) == std::set<std::string>{"y0", "y1", "y2"});
}

TEST_CASE("rank sentences agree with the exact game rank") {
  Rng rng(127);
  for (int it = 0; it < 40; ++it) {
    Graph g = random_gnp(uniform_int(rng, 0, 6), 0.35, rng);
    auto a = graph_structure(g);
    int r = uniform_int(rng, 0, 2), m = uniform_int(rng, 1, 2);
    int rank = *game_rank_exact(g, r, m, 20);
    for (int d = 1; d <= 2; ++d) CHECK(eval(a, rank_sentence(d, r, m)) == (rank <= d));
  }
}
