// sparsefo command-line driver.
// Exit codes: 0 ok, 1 property or agreement failure, 2 input error, 3 budget exceeded.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "sparsefo/encoders.hpp"
#include "sparsefo/error.hpp"
#include "sparsefo/generate.hpp"
#include "sparsefo/io.hpp"
#include "sparsefo/logic.hpp"
#include "sparsefo/oracle.hpp"
#include "sparsefo/qe_engine.hpp"
#include "sparsefo/qe_forest.hpp"
#include "sparsefo/selftest.hpp"
#include "sparsefo/splitter.hpp"
#include "sparsefo/structures.hpp"
#include "sparsefo/treerank.hpp"

using namespace sparsefo;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::optional<std::uint64_t> seed_flag;
  std::uint64_t seed = 0;
  std::int64_t budget = kDefaultBudget;
  std::uint64_t cap_tower = 1 << 16;
  bool timings = false;
  std::string manifest;
};

// Run record, written with --manifest.
struct Manifest {
  json doc = json::object();
  Manifest() {
    doc["command"] = "";
    doc["inputs"] = json::object();
    doc["seed"] = 0;
    doc["budgets"] = json::object();
    doc["version"] = kVersion;
    doc["verdicts"] = json::object();
  }
};

Common common;
Manifest manifest;

std::string digest(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  os << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

std::string load(const std::string& path) {
  std::string text = read_file(path);
  manifest.doc["inputs"][path] = digest(text);
  return text;
}

// Inline text when it starts with '(' or is a bare keyword, else a file path.
std::string formula_text(const std::string& arg) {
  auto i = arg.find_first_not_of(" \t\r\n");
  if (i == std::string::npos) throw InputError("empty formula");
  if (arg[i] == '(' || arg == "true" || arg == "false") {
    manifest.doc["inputs"]["formula"] = digest(arg);
    return arg;
  }
  return load(arg);
}

Graph load_graph(const std::string& path) {
  std::string text = load(path);
  auto i = text.find_first_not_of(" \t\r\n");
  if (i != std::string::npos && text.compare(i, 5, "graph") == 0) return parse_graph(text);
  return gaifman_graph(parse_structure(text));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string yes(bool b) { return b ? "yes" : "no"; }
std::string tf(bool b) { return b ? "true" : "false"; }

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double x, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

void verdict(const std::string& key, const json& value) { manifest.doc["verdicts"][key] = value; }

void timing(const std::string& key, double ms) {
  if (!common.timings) return;
  manifest.doc["timings"][key] = ms;
  std::cout << "timing " << key << " ms=" << fixed(ms) << "\n";
}

std::string tuple_text(const std::vector<int>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
  return s + ")";
}

std::vector<std::string> free_order(const Formula& phi, const std::string& given) {
  auto fv = free_vars(phi);
  if (given.empty()) return {fv.begin(), fv.end()};
  auto order = split_list(given);
  std::set<std::string> listed(order.begin(), order.end());
  if (listed.size() != order.size()) throw InputError("--free lists a variable twice");
  for (const auto& v : fv)
    if (!listed.count(v)) throw InputError("free variable " + v + " missing from --free");
  return order;
}

std::size_t tuple_count(int n, std::size_t k) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (total > 100'000'000 / std::max(n, 1)) throw BudgetExceeded("more than 1e8 tuples");
    total *= static_cast<std::size_t>(n);
  }
  return total;
}

// ---------------------------------------------------------------- mc

struct McArgs {
  std::string structure, formula, engine = "all";
  int corpus = 0;
  int max_n = 10;
  int max_qrank = 3;
};

std::vector<std::string> engines_of(const std::string& e) {
  if (e == "all") return {"oracle", "qe", "selector"};
  if (e == "oracle" || e == "qe" || e == "selector") return {e};
  throw InputError("unknown engine " + e);
}

bool run_engine(const std::string& e, const RelationalStructure& a, const Formula& phi) {
  if (e == "oracle") return eval(a, phi, {}, common.budget);
  if (e == "qe") return model_check_qe(a, phi);
  return model_check_selector(a, phi, common.budget);
}

int cmd_mc(const McArgs& args) {
  auto engines = engines_of(args.engine);
  if (args.corpus > 0) {
    if (args.max_n < 1 || args.max_qrank < 1) throw InputError("--max-n and --max-qrank must be positive");
    Rng rng(common.seed);
    int agree = 0;
    std::map<std::string, double> total_ms;
    for (int i = 0; i < args.corpus; ++i) {
      MixedInstance in = random_mixed_instance(rng, args.max_n);
      Formula phi = random_mc_formula(in, args.max_qrank, rng);
      std::map<std::string, bool> v;
      for (const auto& e : engines) {
        auto t0 = std::chrono::steady_clock::now();
        v[e] = run_engine(e, in.structure, phi);
        total_ms[e] += ms_since(t0);
      }
      bool same = true;
      for (const auto& [e, b] : v) same = same && b == v.begin()->second;
      agree += same;
      if (!same) {
        std::cout << "disagreement instance=" << i << " family=" << in.family << " n=" << in.structure.n
                  << " formula=" << print_formula(phi);
        for (const auto& [e, b] : v) std::cout << " " << e << "=" << tf(b);
        std::cout << "\n";
      }
    }
    for (const auto& [e, ms] : total_ms) timing("engine." + e, ms);
    verdict("agree", agree);
    verdict("instances", args.corpus);
    std::cout << "summary command=mc corpus=" << args.corpus << " agree=" << agree << "/" << args.corpus
              << " agreement=" << yes(agree == args.corpus) << "\n";
    return agree == args.corpus ? 0 : 1;
  }
  if (args.structure.empty() || args.formula.empty())
    throw InputError("mc needs --structure and --formula, or --corpus");
  RelationalStructure a = parse_structure(load(args.structure));
  Formula phi = parse_formula(formula_text(args.formula), signature_of(a));
  if (!free_vars(phi).empty()) throw InputError("mc expects a sentence");
  std::optional<bool> first;
  bool same = true;
  for (const auto& e : engines) {
    auto t0 = std::chrono::steady_clock::now();
    bool b = run_engine(e, a, phi);
    double ms = ms_since(t0);
    std::cout << "engine=" << e << " verdict=" << tf(b) << "\n";
    timing("engine." + e, ms);
    verdict(e, b);
    if (first && *first != b) same = false;
    first = b;
  }
  verdict("agreement", same);
  std::cout << "summary command=mc engines=" << engines.size() << " verdict=" << tf(*first)
            << " agreement=" << yes(same) << "\n";
  return same ? 0 : 1;
}

// ---------------------------------------------------------------- qe

struct QeArgs {
  std::string structure, formula, free, emit;
  bool check = false;
};

int cmd_qe(const QeArgs& args) {
  RelationalStructure a = parse_structure(load(args.structure));
  Formula phi = parse_formula(formula_text(args.formula), signature_of(a));
  FullQeOptions opt;
  opt.free_order = free_order(phi, args.free);
  auto t0 = std::chrono::steady_clock::now();
  QeResult res = full_qe(phi, a, opt);
  timing("qe", ms_since(t0));

  std::ostringstream sig;
  for (const auto& [name, arity] : res.signature.relations) sig << "rel " << name << " " << arity << "\n";
  for (const auto& f : res.signature.functions) sig << "fun " << f << "\n";
  std::ostringstream report;
  report << "free";
  for (const auto& v : res.free_vars) report << " " << v;
  report << "\nstages=" << res.stats.stages << "\npieces=" << res.stats.pieces
         << "\nmax_forest_depth=" << res.stats.max_forest_depth << "\nnew_symbols="
         << res.signature.relations.size() + res.signature.functions.size()
         << "\nformula_size=" << formula_size(res.formula) << "\n";

  int status = 0;
  if (args.check) {
    QueryAnswerer qa = query_structure(res);
    Evaluator ev(a, phi, res.free_vars, common.budget);
    const std::size_t total = tuple_count(a.n, res.free_vars.size());
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < total; ++i) {
      auto t = tuple_at(i, static_cast<int>(res.free_vars.size()), a.n);
      if (qa(t) != ev(t)) ++mismatches;
    }
    report << "checked_tuples=" << total << "\nmismatches=" << mismatches << "\n";
    verdict("mismatches", mismatches);
    status = mismatches ? 1 : 0;
  }
  if (!args.emit.empty()) {
    std::filesystem::create_directories(args.emit);
    write_file(args.emit + "/signature.txt", sig.str());
    write_file(args.emit + "/formula.txt", print_formula(res.formula) + "\n");
    write_file(args.emit + "/structure.txt", write_structure(res.structure));
    write_file(args.emit + "/report.txt", report.str());
  }
  std::cout << report.str();
  std::cout << "formula " << print_formula(res.formula) << "\n";
  std::cout << "summary command=qe free=" << res.free_vars.size() << " stages=" << res.stats.stages
            << " size=" << formula_size(res.formula);
  if (args.check) std::cout << " exact=" << yes(status == 0);
  std::cout << "\n";
  verdict("formula_size", formula_size(res.formula));
  return status;
}

// ---------------------------------------------------------------- rank

struct RankArgs {
  std::string graph;
  int r = 1, k = 2, max_d = 3;
};

void print_embedding(const Embedding& emb) {
  std::cout << "witness principal";
  for (std::size_t i = 0; i < emb.principal.size(); ++i) std::cout << " " << i << ":" << emb.principal[i];
  std::cout << "\n";
  for (const auto& [e, path] : emb.paths) {
    std::cout << "witness path " << e.first << "-" << e.second << " :";
    for (int v : path) std::cout << " " << v;
    std::cout << "\n";
  }
}

int cmd_rank(const RankArgs& args) {
  if (args.r < 0 || args.k < 1 || args.max_d < 1) throw InputError("need r >= 0, k >= 1, max-d >= 1");
  Graph g = load_graph(args.graph);
  auto t0 = std::chrono::steady_clock::now();
  DepthProfile p = depth_profile(g, args.r, args.k, args.max_d, common.budget);
  timing("rank", ms_since(t0));
  if (p.witness) print_embedding(*p.witness);
  verdict("depth", p.depth);
  verdict("exact", p.exact);
  std::cout << "summary command=rank n=" << g.size() << " r=" << args.r << " k=" << args.k << " depth=" << p.depth
            << " exact=" << yes(p.exact) << "\n";
  return 0;
}

// ---------------------------------------------------------------- game

struct GameArgs {
  std::string graph, splitter;
  int r = 1, m = 1, cap = 6, d = 1, k = 2;
  int m_given = 0;
};

void print_transcript(const std::vector<GameRound>& rounds) {
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    std::cout << "round " << i + 1 << " center=" << rounds[i].center << " ball=" << rounds[i].ball.size()
              << " removed=";
    for (std::size_t j = 0; j < rounds[i].removed.size(); ++j) std::cout << (j ? "," : "") << rounds[i].removed[j];
    std::cout << "\n";
  }
}

int cmd_game(const GameArgs& args) {
  if (args.r < 0 || args.m < 1 || args.cap < 0) throw InputError("need r >= 0, m >= 1, cap >= 0");
  Graph g = load_graph(args.graph);
  if (args.splitter.empty()) {
    auto rank = game_rank_exact(g, args.r, args.m, args.cap, common.budget);
    verdict("rank", rank ? json(*rank) : json(nullptr));
    std::cout << "summary command=game mode=exact r=" << args.r << " m=" << args.m << " rank="
              << (rank ? std::to_string(*rank) : ">" + std::to_string(args.cap)) << "\n";
    return 0;
  }
  if (args.splitter == "greedy") {
    GameResult res = play_game(g, args.r, args.m, greedy_splitter(), greedy_localiser(), args.cap);
    print_transcript(res.transcript);
    verdict("splitter_won", res.splitter_won);
    std::cout << "summary command=game mode=greedy r=" << args.r << " m=" << args.m << " rounds=" << res.rounds
              << " splitter_won=" << yes(res.splitter_won) << " max_batch=" << res.max_batch << "\n";
    return 0;
  }
  if (args.splitter == "constructive") {
    if (args.d < 1 || args.k < 1) throw InputError("need d >= 1, k >= 1");
    const std::int64_t bound = winning_batch_size(args.d, args.r, args.k);
    const int m = args.m_given ? args.m : static_cast<int>(std::min<std::int64_t>(bound, 1 << 30));
    SplitterAudit audit = audit_splitter(g, args.r, m, splitter_strategy_first_moves(args.d, args.r, args.k), args.d);
    print_transcript(audit.worst_line);
    const bool won = audit.worst_rounds <= args.d && audit.max_batch <= bound;
    verdict("worst_rounds", audit.worst_rounds);
    verdict("max_batch", audit.max_batch);
    verdict("won", won);
    std::cout << "summary command=game mode=constructive d=" << args.d << " r=" << args.r << " k=" << args.k
              << " batch_bound=" << bound << " worst_rounds=" << audit.worst_rounds
              << " max_batch=" << audit.max_batch << " won=" << yes(won) << "\n";
    return won ? 0 : 1;
  }
  throw InputError("unknown splitter " + args.splitter);
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
  std::string graph, formula, emit;
  int d = 1;
  std::optional<int> r;
};

int cmd_encode(const EncodeArgs& args) {
  Graph g = load_graph(args.graph);
  Formula phi = parse_formula(formula_text(args.formula), graph_signature());
  if (!free_vars(phi).empty()) throw InputError("encode expects a sentence");
  const bool truth = eval(graph_structure(g), phi, {}, common.budget);
  std::ostringstream report;
  report << "n=" << g.size() << "\nedges=" << g.edge_count() << "\nd=" << args.d << "\ngraph_verdict=" << tf(truth)
         << "\n";
  std::string forest_text, formula_out;
  bool encoded = false;
  auto t0 = std::chrono::steady_clock::now();
  if (!args.r) {
    GraphEncoding enc = encode_graph(g, phi, args.d, common.cap_tower);
    encoded = eval(forest_structure(enc.forest), enc.formula, {}, common.budget);
    forest_text = write_forest(enc.forest);
    formula_out = print_formula(enc.formula);
    report << "m=" << enc.m << "\nforest_nodes=" << enc.forest.size() << "\nforest_depth=" << enc.forest.depth()
           << "\nformula_size=" << formula_size(enc.formula) << "\n";
  } else {
    Reduction red = assemble_reduction(g, phi, args.d, args.r, common.cap_tower);
    encoded = eval(graph_structure(red.graph), red.formula, {}, common.budget);
    forest_text = write_graph(red.graph);
    formula_out = print_formula(red.formula);
    report << "m=" << red.encoding.m << "\nr=" << *args.r << "\ngraph_nodes=" << red.graph.size()
           << "\nformula_size=" << formula_size(red.formula) << "\n";
  }
  timing("encode", ms_since(t0));
  const bool ok = encoded == truth;
  report << "encoded_verdict=" << tf(encoded) << "\nequivalent=" << yes(ok) << "\n";
  if (!args.emit.empty()) {
    std::filesystem::create_directories(args.emit);
    write_file(args.emit + (args.r ? "/graph.txt" : "/forest.txt"), forest_text);
    write_file(args.emit + "/formula.txt", formula_out + "\n");
    write_file(args.emit + "/report.txt", report.str());
  }
  std::cout << report.str();
  verdict("equivalent", ok);
  std::cout << "summary command=encode verdict=" << tf(truth) << " equivalent=" << yes(ok) << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string structure, formula, free;
  int limit = 20;
};

int cmd_oracle_eval(const OracleArgs& args) {
  RelationalStructure a = parse_structure(load(args.structure));
  Formula phi = parse_formula(formula_text(args.formula), signature_of(a));
  auto order = free_order(phi, args.free);
  Evaluator ev(a, phi, order, common.budget);
  if (order.empty()) {
    bool b = ev({});
    verdict("verdict", b);
    std::cout << "summary command=oracle verdict=" << tf(b) << " steps=" << ev.steps() << "\n";
    return 0;
  }
  const std::size_t total = tuple_count(a.n, order.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < total; ++i) {
    auto t = tuple_at(i, static_cast<int>(order.size()), a.n);
    if (!ev(t)) continue;
    if (count < static_cast<std::size_t>(args.limit)) std::cout << "tuple " << tuple_text(t) << "\n";
    ++count;
  }
  verdict("satisfying", count);
  std::cout << "summary command=oracle free=" << order.size() << " satisfying=" << count << "/" << total << "\n";
  return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string family, out;
  int n = 10, d = 3, k = 2, r = 1, max_degree = 3, m = 2;
  double p = 0.3;
};

int cmd_generate(const GenerateArgs& a) {
  Rng rng(common.seed);
  std::string text;
  std::string shape;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("out of range: ") + what);
  };
  need(a.n >= 0 && a.n <= 1'000'000, "n");
  need(a.p >= 0 && a.p <= 1, "p");
  if (a.family == "tdk") {
    need(a.d >= 1 && a.k >= 1, "d, k");
    RootedForest t = build_tdk(a.d, a.k);
    text = write_forest(t);
    shape = "nodes=" + std::to_string(t.size());
  } else if (a.family == "subdivided-tdk") {
    need(a.d >= 1 && a.k >= 1 && a.r >= 0, "d, k, r");
    Subdivision s = random_subdivision(forest_graph(build_tdk(a.d, a.k)), a.r, rng);
    text = write_graph(s.graph);
    shape = "nodes=" + std::to_string(s.graph.size()) + " edges=" + std::to_string(s.graph.edge_count());
  } else if (a.family == "gnp") {
    Graph g = random_gnp(a.n, a.p, rng);
    text = write_graph(g);
    shape = "nodes=" + std::to_string(g.size()) + " edges=" + std::to_string(g.edge_count());
  } else if (a.family == "bounded-degree") {
    need(a.max_degree >= 0, "max-degree");
    Graph g = random_bounded_degree(a.n, a.max_degree, 40, rng);
    text = write_graph(g);
    shape = "nodes=" + std::to_string(g.size()) + " edges=" + std::to_string(g.edge_count());
  } else if (a.family == "forest") {
    need(a.d >= 1 && a.m >= 0, "d, m");
    std::vector<std::string> colors;
    for (int i = 1; i <= a.m; ++i) colors.push_back(color_name(i));
    RootedForest f = random_forest(a.n, a.d, colors, a.p, rng);
    text = write_forest(f);
    shape = "nodes=" + std::to_string(f.size()) + " depth=" + std::to_string(f.depth());
  } else if (a.family == "trees-over-m") {
    need(a.d >= 1 && a.m >= 1, "d, m");
    RootedForest f;
    auto trees = enumerate_trees_over_m(a.d, a.m, common.cap_tower);
    for (const auto& t : trees) append_tree(f, t.tree, -1);
    text = write_forest(f);
    shape = "trees=" + std::to_string(trees.size()) + " nodes=" + std::to_string(f.size());
  } else {
    throw InputError("unknown family " + a.family);
  }
  verdict("digest", digest(text));
  if (a.out.empty()) {
    std::cout << text;
    return 0;
  }
  write_file(a.out, text);
  std::cout << "summary command=generate family=" << a.family << " seed=" << common.seed << " " << shape
            << " digest=" << digest(text) << "\n";
  return 0;
}

// ---------------------------------------------------------------- selftest

struct SelftestArgs {
  int shrink = 1;
  std::vector<int> only;
  std::string fault;
};

int cmd_selftest(const SelftestArgs& args) {
  if (args.shrink < 1) throw InputError("--shrink must be >= 1");
  if (!args.fault.empty() && args.fault != "trim") throw InputError("unknown fault " + args.fault);
  set_trim_fault(args.fault == "trim");
  SuiteOptions opt;
  opt.seed = common.seed;
  opt.shrink = args.shrink;
  opt.only = {args.only.begin(), args.only.end()};
  opt.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
  auto t0 = std::chrono::steady_clock::now();
  auto results = run_suite(opt);
  set_trim_fault(false);
  int failed = 0;
  for (const auto& r : results) {
    failed += !r.pass;
    verdict("criterion " + std::to_string(r.id), r.pass);
  }
  std::cout << "timing suite seconds=" << fixed(ms_since(t0) / 1000, 1) << "\n";
  std::cout << "summary command=selftest criteria=" << results.size() << " failed=" << failed << "\n";
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string family = "gnp", sizes = "4,6,8", engine = "all";
  int instances = 10;
  int qrank = 2;
};

MixedInstance family_instance(const std::string& family, int n, Rng& rng) {
  MixedInstance in;
  in.family = family;
  Graph g;
  if (family == "gnp") g = random_gnp(n, 0.3, rng);
  else if (family == "bounded-degree") g = random_bounded_degree(n, 3, 40, rng);
  else if (family == "tree") g = random_tree(n, rng);
  else if (family == "forest") {
    in.structure = forest_structure(random_forest(n, 4, {"C1"}, 0.4, rng));
    in.forest_terms = true;
  } else {
    throw InputError("unknown family " + family);
  }
  if (!in.forest_terms) in.structure = graph_structure(g);
  in.signature = signature_of(in.structure);
  return in;
}

int cmd_bench(const BenchArgs& args) {
  if (args.instances < 1 || args.qrank < 1) throw InputError("--instances and --qrank must be positive");
  auto engines = engines_of(args.engine);
  Rng rng(common.seed);
  int disagreements = 0;
  for (const auto& s : split_list(args.sizes)) {
    const int n = std::stoi(s);
    if (n < 1) throw InputError("sizes must be positive");
    std::map<std::string, double> total;
    for (int i = 0; i < args.instances; ++i) {
      MixedInstance in = family_instance(args.family, n, rng);
      Formula phi = random_mc_formula(in, args.qrank, rng);
      std::optional<bool> first;
      for (const auto& e : engines) {
        auto t0 = std::chrono::steady_clock::now();
        bool b = run_engine(e, in.structure, phi);
        total[e] += ms_since(t0);
        if (first && *first != b) ++disagreements;
        first = b;
      }
    }
    for (const auto& e : engines)
      std::cout << "bench family=" << args.family << " n=" << n << " engine=" << e
                << " mean_ms=" << fixed(total[e] / args.instances) << "\n";
  }
  verdict("disagreements", disagreements);
  std::cout << "summary command=bench family=" << args.family << " disagreements=" << disagreements << "\n";
  return disagreements ? 1 : 0;
}

void add_common(CLI::App* sub) {
  sub->add_option("--seed", common.seed_flag, "random seed (default: SPARSEFO_SEED or 20240601)");
  sub->add_option("--budget-steps", common.budget, "evaluator step budget")->check(CLI::PositiveNumber);
  sub->add_option("--cap-tower", common.cap_tower, "largest tree family enumerated by the encoders");
  sub->add_flag("--timings", common.timings, "print timings");
  sub->add_option("--manifest", common.manifest, "write a JSON run manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsefo: first-order logic on sparse graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  McArgs mc;
  auto* s_mc = app.add_subcommand("mc", "model checking with one or more engines");
  s_mc->add_option("--structure", mc.structure, "structure, graph or forest file");
  s_mc->add_option("--formula", mc.formula, "formula text or file");
  s_mc->add_option("--engine", mc.engine, "qe|selector|oracle|all");
  s_mc->add_option("--corpus", mc.corpus, "check N generated instances instead");
  s_mc->add_option("--max-n", mc.max_n, "largest corpus universe");
  s_mc->add_option("--max-qrank", mc.max_qrank, "largest corpus quantifier rank");

  QeArgs qe;
  auto* s_qe = app.add_subcommand("qe", "quantifier elimination");
  s_qe->add_option("--structure", qe.structure)->required();
  s_qe->add_option("--formula", qe.formula)->required();
  s_qe->add_option("--free", qe.free, "free variable order, comma separated");
  s_qe->add_option("--emit", qe.emit, "output directory");
  s_qe->add_flag("--check", qe.check, "compare every tuple with the oracle");

  RankArgs rank;
  auto* s_rank = app.add_subcommand("rank", "depth of the largest subdivided T^d_k");
  s_rank->add_option("--graph", rank.graph)->required();
  s_rank->add_option("--r", rank.r);
  s_rank->add_option("--k", rank.k);
  s_rank->add_option("--max-d", rank.max_d);

  GameArgs game;
  auto* s_game = app.add_subcommand("game", "batched splitter game");
  s_game->add_option("--graph", game.graph)->required();
  s_game->add_option("--r", game.r);
  auto* m_opt = s_game->add_option("--m", game.m);
  s_game->add_option("--cap", game.cap, "round cap");
  s_game->add_flag("--exact", "exact game rank (default)");
  s_game->add_option("--splitter", game.splitter, "greedy|constructive");
  s_game->add_option("--d", game.d);
  s_game->add_option("--k", game.k);

  EncodeArgs enc;
  auto* s_enc = app.add_subcommand("encode", "graph sentence to forest sentence");
  s_enc->add_option("--graph", enc.graph)->required();
  s_enc->add_option("--formula", enc.formula)->required();
  s_enc->add_option("--d", enc.d);
  s_enc->add_option("--r", enc.r, "also remove colours and subdivide every edge");
  s_enc->add_option("--emit", enc.emit, "output directory");

  OracleArgs orc;
  auto* s_orc = app.add_subcommand("oracle", "brute-force evaluation");
  s_orc->require_subcommand(1);
  auto* s_eval = s_orc->add_subcommand("eval", "evaluate a formula");
  s_eval->add_option("--structure", orc.structure)->required();
  s_eval->add_option("--formula", orc.formula)->required();
  s_eval->add_option("--free", orc.free, "free variable order, comma separated");
  s_eval->add_option("--limit", orc.limit, "satisfying tuples printed");

  GenerateArgs gen;
  auto* s_gen = app.add_subcommand("generate", "instance generators");
  s_gen->add_option("--family", gen.family, "tdk|subdivided-tdk|gnp|bounded-degree|forest|trees-over-m")->required();
  s_gen->add_option("--n", gen.n);
  s_gen->add_option("--p", gen.p);
  s_gen->add_option("--d", gen.d);
  s_gen->add_option("--k", gen.k);
  s_gen->add_option("--r", gen.r);
  s_gen->add_option("--max-degree", gen.max_degree);
  s_gen->add_option("--m", gen.m);
  s_gen->add_option("--out", gen.out, "output file (default stdout)");

  SelftestArgs st;
  auto* s_st = app.add_subcommand("selftest", "acceptance suite");
  s_st->add_option("--shrink", st.shrink, "divide instance counts");
  s_st->add_option("--only", st.only, "criterion ids")->delimiter(',');
  s_st->add_option("--inject-fault", st.fault, "trim");

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("bench", "engine timings");
  s_bench->add_option("--family", bench.family, "gnp|bounded-degree|tree|forest");
  s_bench->add_option("--sizes", bench.sizes, "comma separated universe sizes");
  s_bench->add_option("--instances", bench.instances);
  s_bench->add_option("--qrank", bench.qrank);
  s_bench->add_option("--engine", bench.engine, "qe|selector|oracle|all");

  for (auto* s : {s_mc, s_qe, s_rank, s_game, s_enc, s_eval, s_gen, s_st, s_bench}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  common.seed = common.seed_flag ? *common.seed_flag : default_seed();
  if (s_bench->parsed()) common.timings = true;
  manifest.doc["seed"] = common.seed;
  manifest.doc["budgets"]["steps"] = common.budget;
  manifest.doc["budgets"]["cap_tower"] = common.cap_tower;

  int status = 0;
  try {
    if (s_mc->parsed()) manifest.doc["command"] = "mc", status = cmd_mc(mc);
    else if (s_qe->parsed()) manifest.doc["command"] = "qe", status = cmd_qe(qe);
    else if (s_rank->parsed()) manifest.doc["command"] = "rank", status = cmd_rank(rank);
    else if (s_game->parsed()) {
      manifest.doc["command"] = "game";
      game.m_given = m_opt->count() > 0;
      status = cmd_game(game);
    } else if (s_enc->parsed()) manifest.doc["command"] = "encode", status = cmd_encode(enc);
    else if (s_eval->parsed()) manifest.doc["command"] = "oracle eval", status = cmd_oracle_eval(orc);
    else if (s_gen->parsed()) manifest.doc["command"] = "generate", status = cmd_generate(gen);
    else if (s_st->parsed()) manifest.doc["command"] = "selftest", status = cmd_selftest(st);
    else if (s_bench->parsed()) manifest.doc["command"] = "bench", status = cmd_bench(bench);
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    status = 3;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    status = 2;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    status = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    status = 2;
  }
  manifest.doc["exit"] = status;
  if (!common.manifest.empty()) {
    try {
      write_file(common.manifest, manifest.doc.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "cannot write manifest: " << e.what() << "\n";
      return 2;
    }
  }
  return status;
}
