#include "sparsefo/io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "sparsefo/error.hpp"

namespace sparsefo {

namespace {

struct Line {
  int number;
  std::vector<std::string> words;
};

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream ws(raw);
    Line l{no, {}};
    std::string w;
    while (ws >> w) l.words.push_back(w);
    if (!l.words.empty()) out.push_back(std::move(l));
  }
  return out;
}

[[noreturn]] void bad(const Line& l, const std::string& msg) {
  throw InputError("line " + std::to_string(l.number) + ": " + msg);
}

int to_int(const Line& l, const std::string& w) {
  try {
    size_t used = 0;
    int v = std::stoi(w, &used);
    if (used != w.size()) bad(l, "not an integer: " + w);
    return v;
  } catch (const std::logic_error&) {
    bad(l, "not an integer: " + w);
  }
}

void need(const Line& l, size_t n) {
  if (l.words.size() != n) bad(l, "expected " + std::to_string(n) + " fields");
}

}  // namespace

Graph parse_graph(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || lines[0].words[0] != "graph") throw InputError("missing `graph <n>` header");
  need(lines[0], 2);
  int n = to_int(lines[0], lines[0].words[1]);
  if (n < 0) bad(lines[0], "negative vertex count");
  Graph g(n);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (l.words[0] != "e") bad(l, "expected `e u v`");
    need(l, 3);
    int u = to_int(l, l.words[1]), v = to_int(l, l.words[2]);
    if (u < 0 || v < 0 || u >= n || v >= n) bad(l, "vertex out of range");
    if (u == v) bad(l, "self-loop");
    g.add_edge(u, v);
  }
  return g;
}

std::string write_graph(const Graph& g) {
  std::ostringstream out;
  out << "graph " << g.size() << "\n";
  for (auto [u, v] : g.edges()) out << "e " << u << " " << v << "\n";
  return out.str();
}

RootedForest parse_forest(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || lines[0].words[0] != "forest") throw InputError("missing `forest <n>` header");
  need(lines[0], 2);
  int n = to_int(lines[0], lines[0].words[1]);
  if (n < 0) bad(lines[0], "negative node count");
  RootedForest f;
  f.parent.resize(n);
  for (int v = 0; v < n; ++v) f.parent[v] = v;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto& k = l.words[0];
    if (k == "p") {
      need(l, 3);
      int c = to_int(l, l.words[1]), p = to_int(l, l.words[2]);
      if (c < 0 || p < 0 || c >= n || p >= n) bad(l, "node out of range");
      f.parent[c] = p;
    } else if (k == "c") {
      need(l, 3);
      int v = to_int(l, l.words[2]);
      if (v < 0 || v >= n) bad(l, "node out of range");
      f.colors[l.words[1]].insert(v);
    } else if (k == "f") {
      need(l, 3);
      if (l.words[2] != "0" && l.words[2] != "1") bad(l, "flag value must be 0 or 1");
      f.flags[l.words[1]] = l.words[2] == "1";
    } else {
      bad(l, "unknown record `" + k + "`");
    }
  }
  f.validate();
  return f;
}

std::string write_forest(const RootedForest& f) {
  std::ostringstream out;
  out << "forest " << f.size() << "\n";
  for (int v = 0; v < f.size(); ++v)
    if (!f.is_root(v)) out << "p " << v << " " << f.parent[v] << "\n";
  for (const auto& [name, set] : f.colors)
    for (int v : set) out << "c " << name << " " << v << "\n";
  for (const auto& [name, value] : f.flags) out << "f " << name << " " << (value ? 1 : 0) << "\n";
  return out.str();
}

RelationalStructure parse_structure(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty()) throw InputError("empty structure file");
  const auto& head = lines[0].words[0];
  if (head == "graph") return graph_structure(parse_graph(text));
  if (head == "forest") return forest_structure(parse_forest(text));
  if (head != "structure") throw InputError("missing `structure` header");
  RelationalStructure a;
  bool sized = lines[0].words.size() >= 2;
  if (lines[0].words.size() > 2) bad(lines[0], "expected `structure [n]`");
  if (sized) a.n = to_int(lines[0], lines[0].words[1]);
  int max_id = -1;
  Relation* rel = nullptr;
  std::vector<std::pair<int, int>>* fun_pairs = nullptr;
  std::map<std::string, std::vector<std::pair<int, int>>> funs;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto& k = l.words[0];
    if (k == "rel") {
      need(l, 3);
      int ar = to_int(l, l.words[2]);
      if (ar < 0) bad(l, "negative arity");
      if (a.relations.count(l.words[1]) || funs.count(l.words[1])) bad(l, "duplicate symbol " + l.words[1]);
      rel = &a.relations[l.words[1]];
      rel->arity = ar;
      fun_pairs = nullptr;
    } else if (k == "fun") {
      need(l, 2);
      if (a.relations.count(l.words[1]) || funs.count(l.words[1])) bad(l, "duplicate symbol " + l.words[1]);
      fun_pairs = &funs[l.words[1]];
      rel = nullptr;
    } else if (k == "universe") {
      need(l, 2);
      a.n = to_int(l, l.words[1]);
      sized = true;
    } else if (rel && rel->arity == 0) {
      if (l.words.size() != 1 || l.words[0] != "true") bad(l, "a flag block holds at most the line `true`");
      rel->tuples.insert(std::vector<int>{});
    } else if (rel) {
      if (static_cast<int>(l.words.size()) != rel->arity) bad(l, "tuple has wrong arity");
      std::vector<int> t;
      for (const auto& w : l.words) {
        t.push_back(to_int(l, w));
        if (t.back() < 0) bad(l, "negative element id");
        max_id = std::max(max_id, t.back());
      }
      rel->tuples.insert(t);
    } else if (fun_pairs) {
      need(l, 2);
      int x = to_int(l, l.words[0]), fx = to_int(l, l.words[1]);
      if (x < 0 || fx < 0) bad(l, "negative element id");
      max_id = std::max({max_id, x, fx});
      fun_pairs->emplace_back(x, fx);
    } else {
      bad(l, "unexpected line");
    }
  }
  if (!sized) a.n = max_id + 1;
  for (auto& [name, pairs] : funs) {
    std::vector<int> f(a.n, -1);
    for (auto [x, fx] : pairs) {
      if (x >= a.n || fx >= a.n) throw InputError("function " + name + " leaves universe");
      f[x] = fx;
    }
    for (int x = 0; x < a.n; ++x)
      if (f[x] < 0) f[x] = x;
    a.functions[name] = std::move(f);
  }
  a.validate();
  return a;
}

std::string write_structure(const RelationalStructure& a) {
  std::ostringstream out;
  out << "structure " << a.n << "\n";
  for (const auto& [name, rel] : a.relations) {
    out << "rel " << name << " " << rel.arity << "\n";
    for (const auto& t : rel.tuples) {
      if (t.empty()) {
        out << "true\n";
        continue;
      }
      for (size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << t[i];
      out << "\n";
    }
  }
  for (const auto& [name, f] : a.functions) {
    out << "fun " << name << "\n";
    for (int x = 0; x < a.n; ++x)
      if (f[x] != x) out << x << " " << f[x] << "\n";
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

}  // namespace sparsefo
