#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "sparsefo/generate.hpp"
#include "sparsefo/io.hpp"
#include "sparsefo/structures.hpp"

using namespace sparsefo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  Run r;
  std::string cmd = std::string(SPARSEFO_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / ("sparsefo_cli_" + std::to_string(getpid()));
  fs::create_directories(dir);
  return dir;
}

bool has(const std::string& out, const std::string& s) { return out.find(s) != std::string::npos; }

}  // namespace

TEST_CASE("mc on K2 with every engine") {
  auto dir = scratch();
  write_file((dir / "k2.txt").string(), "graph 2\ne 0 1\n");
  auto r = run("mc --engine all --structure " + (dir / "k2.txt").string() + " --formula '(exists (x y) (E x y))'");
  CHECK(r.status == 0);
  CHECK(has(r.out, "engine=oracle verdict=true"));
  CHECK(has(r.out, "engine=qe verdict=true"));
  CHECK(has(r.out, "engine=selector verdict=true"));
  CHECK(has(r.out, "agreement=yes"));
  CHECK_FALSE(has(r.out, "timing"));
}

TEST_CASE("malformed formula exits 2 with an offset") {
  auto dir = scratch();
  write_file((dir / "k2.txt").string(), "graph 2\ne 0 1\n");
  auto r = run("mc --structure " + (dir / "k2.txt").string() + " --formula '(exists (x y) (E x y)'");
  CHECK(r.status == 2);
  CHECK(has(r.out, "at offset"));
  CHECK(run("mc --structure " + (dir / "missing.txt").string() + " --formula '(E x x)'").status == 2);
  CHECK(run("frobnicate").status == 2);
}

TEST_CASE("budget exhaustion exits 3") {
  auto dir = scratch();
  write_file((dir / "k5.txt").string(), write_graph(make_complete(5)));
  auto r = run("mc --engine oracle --budget-steps 5 --structure " + (dir / "k5.txt").string() +
               " --formula '(forall (x y z) (or (E x y) (E y z) (= x z)))'");
  CHECK(r.status == 3);
}

TEST_CASE("200-instance corpus agrees") {
  auto r = run("mc --corpus 200 --seed 20240601");
  CHECK(r.status == 0);
  CHECK(has(r.out, "agree=200/200 agreement=yes"));
}

TEST_CASE("generate tdk d=3 k=2") {
  auto r = run("generate --family tdk --d 3 --k 2");
  CHECK(r.status == 0);
  RootedForest f = parse_forest(r.out);
  CHECK(f.size() == 7);
  CHECK(f.depth() == 3);
  CHECK(f.roots().size() == 1);
}

TEST_CASE("subdivided tdk is byte-identical across runs") {
  auto dir = scratch();
  auto a = (dir / "a.txt").string(), b = (dir / "b.txt").string();
  CHECK(run("generate --family subdivided-tdk --d 3 --k 2 --r 2 --seed 11 --out " + a).status == 0);
  CHECK(run("generate --family subdivided-tdk --d 3 --k 2 --r 2 --seed 11 --out " + b).status == 0);
  CHECK(read_file(a) == read_file(b));
  Graph g = parse_graph(read_file(a));
  CHECK(g.edge_count() == g.size() - 1);
  CHECK(g.size() >= 7);
  CHECK(g.size() <= 7 + 6 * 2);
}

TEST_CASE("gnp edge count matches regeneration") {
  auto r = run("generate --family gnp --n 10 --p 0.3 --seed 7");
  CHECK(r.status == 0);
  Rng rng(7);
  Graph expect = random_gnp(10, 0.3, rng);
  Graph got = parse_graph(r.out);
  CHECK(got.edge_count() == expect.edge_count());
  CHECK(got == expect);
}

TEST_CASE("seed from the environment") {
  auto a = run("generate --family gnp --n 12 --p 0.5 --seed 99");
  auto b = run("generate --family gnp --n 12 --p 0.5");
  std::string cmd = std::string("SPARSEFO_SEED=99 ") + SPARSEFO_CLI + " generate --family gnp --n 12 --p 0.5";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
  pclose(p);
  CHECK(out == a.out);
  CHECK(a.out != b.out);
}

TEST_CASE("selftest passes and reports timings") {
  auto r = run("selftest --shrink 20");
  CHECK(r.status == 0);
  CHECK(has(r.out, "summary command=selftest criteria=10 failed=0"));
  CHECK(has(r.out, "timing suite seconds="));
  for (int i = 1; i <= 10; ++i) CHECK(has(r.out, "PASS criterion " + std::to_string(i) + ":"));
}

TEST_CASE("selftest catches an injected trim fault") {
  auto r = run("selftest --only 1,2 --inject-fault trim");
  CHECK(r.status == 1);
  CHECK(has(r.out, "FAIL criterion 2:"));
  CHECK(has(r.out, "failed=1"));
}

TEST_CASE("qe, encode and oracle write their outputs") {
  auto dir = scratch();
  auto g = (dir / "p4.txt").string();
  write_file(g, write_graph(make_path(4)));
  auto q = run("qe --check --structure " + g + " --formula '(exists (y) (and (E x y) (not (= x y))))' --emit " +
               (dir / "qe").string());
  CHECK(q.status == 0);
  CHECK(has(q.out, "mismatches=0"));
  CHECK(fs::exists(dir / "qe" / "structure.txt"));
  CHECK(fs::exists(dir / "qe" / "formula.txt"));
  CHECK(fs::exists(dir / "qe" / "signature.txt"));

  auto e = run("encode --d 1 --graph " + g + " --formula '(exists (x) (forall (y) (not (E x y))))' --emit " +
               (dir / "enc").string());
  CHECK(e.status == 0);
  CHECK(has(e.out, "equivalent=yes"));
  CHECK(parse_forest(read_file((dir / "enc" / "forest.txt").string())).size() > 0);

  auto o = run("oracle eval --structure " + g + " --formula '(E x y)' --free x,y");
  CHECK(o.status == 0);
  CHECK(has(o.out, "satisfying=6/16"));
}

TEST_CASE("rank and game on a path") {
  auto dir = scratch();
  auto g = (dir / "p5.txt").string();
  write_file(g, write_graph(make_path(5)));
  auto r = run("rank --graph " + g + " --r 0 --k 2 --max-d 3");
  CHECK(r.status == 0);
  CHECK(has(r.out, "depth=2 exact=yes"));
  auto x = run("game --graph " + g + " --r 1 --m 1");
  CHECK(x.status == 0);
  CHECK(has(x.out, "rank="));
  auto c = run("game --graph " + g + " --r 1 --splitter constructive --d 1 --k 3");
  CHECK(c.status == 0);
  CHECK(has(c.out, "won=yes"));
}

TEST_CASE("manifest is deterministic") {
  auto dir = scratch();
  auto m1 = (dir / "m1.json").string(), m2 = (dir / "m2.json").string();
  CHECK(run("mc --corpus 20 --seed 3 --manifest " + m1).status == 0);
  CHECK(run("mc --corpus 20 --seed 3 --manifest " + m2).status == 0);
  CHECK(read_file(m1) == read_file(m2));
  CHECK(has(read_file(m1), "\"seed\": 3"));
  fs::remove_all(dir);
}
