#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sparsefo/error.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/structures.hpp"

namespace sparsefo {

struct GameRound {
  int center = -1;            // original vertex ids throughout
  std::vector<int> ball;
  std::vector<int> removed;
};

struct GameState {
  int r = 0;
  int m = 1;
  Graph graph;                // G_i
  std::vector<int> to_orig;   // vertex of G_i -> vertex of the starting graph
  int round = 0;
  std::vector<GameRound> transcript;
};

GameState initial_state(const Graph& g, int r, int m);
// Applies one round. center and removal are ids in state.graph; removal must lie in the ball.
// Throws PreconditionError naming the round on an illegal move. Batches larger than m are allowed here.
GameState next_state(const GameState& s, int center, const std::vector<int>& removal);

// Picks a vertex of state.graph.
using LocaliserStrategy = std::function<int(const GameState&)>;
// Given the ball around `center` (as a subgraph of state.graph) returns vertices of state.graph to remove.
using SplitterStrategy = std::function<std::vector<int>(const GameState&, int center, const InducedSubgraph& ball)>;

struct GameResult {
  bool splitter_won = false;
  int rounds = 0;
  std::vector<GameRound> transcript;
  int max_batch = 0;
  std::optional<int> oversize_round;  // first round whose batch exceeded m
};

GameResult play_game(const Graph& g, int r, int m, const SplitterStrategy& splitter,
                     const LocaliserStrategy& localiser, int max_rounds);

// Greedy players: Localiser takes the vertex with the largest ball, Splitter the
// highest-degree vertices of the ball. Ties go to the smallest id.
LocaliserStrategy greedy_localiser();
SplitterStrategy greedy_splitter();

// Exhaustive adversaries.
struct SplitterAudit {
  int worst_rounds = 0;   // max over all Localiser lines; max_rounds + 1 when some line is longer
  int max_batch = 0;
  std::vector<GameRound> worst_line;
};
SplitterAudit audit_splitter(const Graph& g, int r, int m, const SplitterStrategy& splitter, int max_rounds);
// Shortest game over every Splitter reply sequence (all batches of size <= m), capped at `cap`.
int audit_localiser(const Graph& g, int r, int m, const LocaliserStrategy& localiser, int cap,
                    std::int64_t budget = kDefaultBudget);

// Minimal number of rounds in which Splitter forces a win; nullopt if above cap.
// Exhaustive minimax over components, memoised by canonical form. Throws BudgetExceeded.
std::optional<int> game_rank_exact(const Graph& g, int r, int m, int cap, std::int64_t budget = kDefaultBudget);

// Constants of the first-move bound; all arithmetic saturates at INT64_MAX.
struct StrategyConstants {
  std::int64_t z = 0, k_prime = 0, t = 0, c = 0;
};
StrategyConstants strategy_constants(int d, int r, std::int64_t k);
// Batch size m(d,r,k) that the constructive strategy never exceeds on graphs without
// an <=(r-1)-subdivision of T^{d+1}_k.
std::int64_t winning_batch_size(int d, int r, std::int64_t k);

// Removes the ball's roots of <=(r-1)-subdivisions of T^{d-j}_{k_{j+1}} in round j and the whole ball in round d-1.
SplitterStrategy splitter_strategy_first_moves(int d, int r, std::int64_t k);

// Plays the principal root first, then the principal vertex of an untouched branch
// below the previous pick. tree is T^{d+1}_{m+1} (or any rooted tree) embedded by emb.
// Throws InputError if emb is not a subdivision embedding of the tree.
LocaliserStrategy localiser_strategy_subdivision(const RootedForest& tree, const Embedding& emb, const Graph& host);
// Conditions under which that strategy provably lasts d+1 rounds.
bool localiser_guarantee_applies(const RootedForest& tree, const Embedding& emb, int radius, int m, int r);

// b = max(m+1, r)
int rank_block_bound(int r, int m);
// Free variables y0..ym: Rank_{d} evaluated in the ball of radius r around y0 with the edges at y1..ym removed.
Formula rankdown_formula(int d, int r, int m);
// Sentence true exactly on graphs of (r,m)-game rank at most d.
Formula rank_sentence(int d, int r, int m);

}  // namespace sparsefo
