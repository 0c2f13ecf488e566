#include "doctest.h"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/oracle.hpp"

using namespace sparsefo;

namespace {

Signature colored_graph_sig() {
  Signature s = graph_signature();
  s.relations["C1"] = 1;
  return s;
}

RelationalStructure random_colored_graph(int n, Rng& rng) {
  auto a = graph_structure(random_gnp(n, 0.4, rng));
  std::set<int> c;
  for (int v = 0; v < n; ++v)
    if (coin(rng, 0.4)) c.insert(v);
  a.add_unary("C1", c);
  return a;
}

}  // namespace

TEST_CASE("parse and print") {
  Signature sig = graph_signature();
  auto f = parse_formula("(exists (x) (E x y))", sig);
  CHECK(f->kind == Kind::Exists);
  CHECK(free_vars(f) == std::set<std::string>{"y"});
  auto g = parse_formula("(forall (x) (not (= x x)))", sig);
  CHECK(quantifier_rank(g) == 1);
  Signature fs;
  fs.functions.insert("parent");
  fs.relations["C1"] = 1;
  auto h = parse_formula("(exists (x) (C1 (parent^2 x)))", fs);
  CHECK(h->kids[0]->terms[0].funcs == std::vector<std::string>{"parent", "parent"});
  CHECK(print_formula(h) == "(exists (x) (C1 (parent^2 x)))");
  CHECK(print_formula(parse_formula("(exists (x) (C1 (parent x)))", fs)) == "(exists (x) (C1 (parent^1 x)))");
}

TEST_CASE("parse errors carry offsets") {
  Signature sig = graph_signature();
  auto msg = [&](const std::string& s) {
    try {
      parse_formula(s, sig);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("(exists (x) (E x))").find("arity mismatch") != std::string::npos);
  CHECK(msg("(exists (x) (R x))").find("unknown symbol") != std::string::npos);
  CHECK(msg("(and (E x y)").find("offset") != std::string::npos);
  CHECK(msg("(exists () (E x y))").find("empty variable list") != std::string::npos);
  CHECK(msg("(E x y) z").find("trailing") != std::string::npos);
}

TEST_CASE("print is canonical and parse inverts it") {
  Signature sig = colored_graph_sig();
  auto a = parse_formula("(and (E x y) (C1 x))", sig);
  auto b = parse_formula("(and (C1 x) (E x y))", sig);
  CHECK(print_formula(a) == print_formula(b));
  Rng rng(17);
  FormulaShape shape;
  shape.free = {"a", "b"};
  shape.qrank = 3;
  shape.size = 8;
  shape.max_block = 2;
  for (int it = 0; it < 200; ++it) {
    auto f = random_formula(sig, shape, rng);
    auto text = print_formula(f);
    auto g = parse_formula(text, sig);
    CHECK(equal(f, g));
    CHECK(print_formula(g) == text);
  }
}

TEST_CASE("nnf") {
  Signature sig = graph_signature();
  auto f = parse_formula("(not (exists (x) (and (E x y) (not (E y x)))))", sig);
  CHECK(print_formula(nnf(f)) == print_formula(parse_formula("(forall (x) (or (not (E x y)) (E y x)))", sig)));
  auto at = parse_formula("(E x y)", sig);
  CHECK(equal(nnf(at), at));
}

TEST_CASE("ranks") {
  Signature sig = graph_signature();
  CHECK(alternation_rank(parse_formula("(exists (x y) (E x y))", sig)) == 0);
  CHECK(alternation_rank(parse_formula("(exists (x) (forall (y) (exists (z) (E x z))))", sig)) == 2);
  CHECK(alternation_rank(parse_formula("(not (exists (x) (forall (y) (E x y))))", sig)) == 1);
  auto qf = parse_formula("(E x y)", sig);
  CHECK(quantifier_rank(qf) == 0);
  CHECK(batched_qrank(qf, 1) == 0);
  auto two = parse_formula("(exists (x1) (exists (x2) (forall (y) (E x1 y))))", sig);
  CHECK(batched_qrank(two, 2) == 2);
  auto three = parse_formula("(exists (x1) (exists (x2) (exists (x3) (E x1 x3))))", sig);
  CHECK_FALSE(batched_qrank(three, 2).has_value());
  CHECK(batched_qrank(three, 3) == 1);
}

TEST_CASE("alternation rank is invariant under nnf") {
  Rng rng(23);
  FormulaShape shape;
  shape.qrank = 4;
  shape.size = 10;
  shape.max_alternation = 3;
  for (int it = 0; it < 200; ++it) {
    auto f = random_formula(colored_graph_sig(), shape, rng);
    CHECK(alternation_rank(nnf(f)) == alternation_rank(f));
  }
}

TEST_CASE("substitution avoids capture") {
  Signature sig = graph_signature();
  auto f = parse_formula("(exists (y) (E x y))", sig);
  auto g = substitute(f, {{"x", Term("y")}});
  CHECK(free_vars(g) == std::set<std::string>{"y"});
  RelationalStructure a = graph_structure(make_path(3));
  CHECK(eval(a, g, {{"y", 0}}) == eval(a, f, {{"x", 0}}));
  CHECK(eval(a, g, {{"y", 1}}) == eval(a, f, {{"x", 1}}));
}

TEST_CASE("nnf and to_bsigma preserve truth on small structures") {
  Rng rng(29);
  Signature sig = colored_graph_sig();
  FormulaShape shape;
  shape.free = {"a"};
  shape.qrank = 3;
  shape.size = 9;
  shape.max_alternation = 2;
  shape.max_block = 2;
  for (int it = 0; it < 60; ++it) {
    auto f = random_formula(sig, shape, rng);
    int q = alternation_rank(f) + 1;
    auto b = to_bsigma(f, q);
    for (int s = 0; s < 50; ++s) {
      auto a = random_colored_graph(uniform_int(rng, 1, 6), rng);
      int v = uniform_int(rng, 0, a.n - 1);
      bool want = eval(a, f, {{"a", v}});
      CHECK(eval(a, nnf(f), {{"a", v}}) == want);
      CHECK(eval(a, b, {{"a", v}}) == want);
    }
  }
}

TEST_CASE("to_bsigma shapes") {
  Signature sig = colored_graph_sig();
  auto f = parse_formula("(or (exists (x) (C1 x)) (exists (y) (E y y)))", sig);
  auto b = to_bsigma(f, 1);
  CHECK(max_block_size(b) <= 2);
  CHECK(alternation_rank(b) == 0);
  auto p = parse_formula("(exists (x) (forall (y) (E x y)))", sig);
  CHECK(is_prenex(to_bsigma(p, 2)));
  CHECK_THROWS_AS(to_bsigma(p, 1), PreconditionError);
}

TEST_CASE("normalize_batched is equivalent and collapses repetition") {
  Rng rng(31);
  Signature sig = colored_graph_sig();
  FormulaShape shape;
  shape.free = {"a"};
  shape.qrank = 2;
  shape.size = 7;
  shape.max_block = 2;
  for (int it = 0; it < 60; ++it) {
    auto f = random_formula(sig, shape, rng);
    Formula n;
    try {
      n = normalize_batched(f, 2, 1, sig);
    } catch (const BudgetExceeded&) {
      continue;
    }
    for (int s = 0; s < 20; ++s) {
      auto a = random_colored_graph(uniform_int(rng, 1, 5), rng);
      int v = uniform_int(rng, 0, a.n - 1);
      CHECK(eval(a, n, {{"a", v}}) == eval(a, f, {{"a", v}}));
    }
    CHECK(equal(normalize_batched(n, 2, 1, sig), n));
  }
  // Renamed copies of one subformula merge into one.
  auto one = parse_formula("(exists (u) (E a u))", sig);
  auto two = parse_formula("(and (exists (u) (E a u)) (exists (w) (E a w)))", sig);
  CHECK(equal(normalize_batched(one, 1, 1, sig), normalize_batched(two, 1, 1, sig)));
}

TEST_CASE("dist macro") {
  FreshNames fresh({"x", "y"});
  RelationalStructure p5 = graph_structure(make_path(5));
  for (int r = 0; r <= 4; ++r) {
    auto d = dist_le("x", "y", r, fresh);
    CHECK(batched_qrank(d, std::max(1, r - 1)) == (r >= 2 ? 1 : 0));
    for (int u = 0; u < 5; ++u)
      for (int v = 0; v < 5; ++v) CHECK(eval(p5, d, {{"x", u}, {"y", v}}) == (std::abs(u - v) <= r));
  }
}

TEST_CASE("interpretations") {
  RelationalStructure p5 = graph_structure(make_path(5));
  auto bm = ball_minus_interpretation(1, 0);
  auto h = apply_interpretation(bm, p5, {2});
  CHECK(h.to_old == std::vector<int>{1, 2, 3});
  CHECK(h.structure.relations["E"].tuples.size() == 4);

  auto bs = ball_star_interpretation(2, 1);
  auto k = apply_interpretation(bs, p5, {2, 1});
  CHECK(k.to_old == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(k.structure.relations["E"].tuples.size() == 4);  // edges 2-3 and 3-4 survive

  Interpretation none = bm;
  none.domain = f_false();
  CHECK(apply_interpretation(none, p5, {0}).structure.n == 0);
  CHECK_THROWS_AS(apply_interpretation(bm, p5, {0, 1}), InputError);

  Signature sig = graph_signature();
  auto phi = parse_formula("(exists (z) true)", sig);
  FreshNames fresh({"z", "y0"});
  auto rew = rewrite_under_interpretation(phi, ball_minus_interpretation(2, 0));
  for (int v = 0; v < 5; ++v) CHECK(eval(p5, rew, {{"y0", v}}));
}

TEST_CASE("rewriting matches application on random graphs") {
  Rng rng(37);
  Signature sig = graph_signature();
  FormulaShape shape;
  shape.qrank = 3;
  shape.size = 7;
  shape.max_block = 2;
  for (int it = 0; it < 100; ++it) {
    auto g = graph_structure(random_gnp(uniform_int(rng, 1, 6), 0.4, rng));
    int m = uniform_int(rng, 0, 1), r = uniform_int(rng, 0, 2);
    auto in = it % 2 ? ball_minus_interpretation(r, m) : ball_star_interpretation(r, m);
    auto phi = random_formula(sig, shape, rng);
    std::vector<int> params;
    Valuation val;
    for (int i = 0; i <= m; ++i) {
      params.push_back(uniform_int(rng, 0, g.n - 1));
      val["y" + std::to_string(i)] = params.back();
    }
    auto target = apply_interpretation(in, g, params);
    auto hat = rewrite_under_interpretation(phi, in);
    CHECK(eval(target.structure, phi) == eval(g, hat, val));
  }
}
