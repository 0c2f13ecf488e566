#include "sparsefo/oracle.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace sparsefo {

namespace {

struct RelIndex {
  int arity = 0;
  int n = 0;
  bool truth = false;                 // arity 0
  std::vector<char> bits;             // arity 1: n, arity 2: n*n
  std::vector<std::vector<int>> out;  // arity 2 successors
  std::vector<std::vector<int>> in;   // arity 2 predecessors
  std::unordered_set<std::uint64_t> packed;  // arity >= 3

  explicit RelIndex(const Relation& r, int universe) : arity(r.arity), n(universe) {
    if (arity == 0) {
      truth = !r.tuples.empty();
    } else if (arity == 1) {
      bits.assign(n, 0);
      for (const auto& t : r.tuples) bits[t[0]] = 1;
    } else if (arity == 2) {
      bits.assign(static_cast<size_t>(n) * n, 0);
      out.resize(n);
      in.resize(n);
      for (const auto& t : r.tuples) {
        bits[static_cast<size_t>(t[0]) * n + t[1]] = 1;
        out[t[0]].push_back(t[1]);
        in[t[1]].push_back(t[0]);
      }
    } else {
      for (const auto& t : r.tuples) packed.insert(pack(t.data()));
    }
  }

  std::uint64_t pack(const int* v) const {
    std::uint64_t k = 0;
    for (int i = 0; i < arity; ++i) k = k * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v[i]);
    return k;
  }

  bool holds(const int* v) const {
    switch (arity) {
      case 0: return truth;
      case 1: return bits[v[0]];
      case 2: return bits[static_cast<size_t>(v[0]) * n + v[1]];
      default: return packed.count(pack(v)) > 0;
    }
  }
};

struct TermC {
  int slot = -1;
  std::vector<const std::vector<int>*> fns;
};

enum class Op { True, False, Rel, Eq, And, Or, Exists };

struct CNode {
  Op op = Op::True;
  bool negated = false;
  const RelIndex* rel = nullptr;
  std::vector<TermC> args;
  std::vector<int> kids;
  // Exists
  std::vector<int> block;                   // slots bound by the block
  std::vector<std::vector<int>> checks;     // checks[i]: conjuncts decidable once block[0..i-1] are set
  std::vector<int> cand_kind;               // per block position: 0 all, 1 successors, 2 predecessors, 3 equal
  std::vector<const RelIndex*> cand_rel;
  std::vector<TermC> cand_term;
  std::vector<int> sym_prev;                // previous block position interchangeable with this one, or -1
  std::vector<int> free_slots;
  bool memo_ok = false;
  std::unordered_map<std::uint64_t, char> memo;
};

}  // namespace

struct Evaluator::Impl {
  const RelationalStructure& a;
  int n;
  std::int64_t budget;
  std::int64_t steps = 0;
  std::vector<CNode> nodes;
  std::vector<int> vals;
  int root = -1;
  int bits_per_value = 1;
  std::map<std::string, std::unique_ptr<RelIndex>> rels;
  std::map<std::string, std::vector<std::pair<std::string, int>>> scopes;

  Impl(const RelationalStructure& s, std::int64_t b) : a(s), n(s.n), budget(b) {
    while ((1 << bits_per_value) <= n) ++bits_per_value;
  }

  const RelIndex* rel(const std::string& name, int arity) {
    auto it = rels.find(name);
    if (it != rels.end()) return it->second.get();
    auto r = a.relations.find(name);
    if (r == a.relations.end()) throw InputError("structure lacks relation " + name);
    if (r->second.arity != arity) throw InputError("arity mismatch for " + name);
    auto& slot = rels[name];
    slot = std::make_unique<RelIndex>(r->second, n);
    return slot.get();
  }

  // Negation of an NNF formula, in NNF. Memoised both ways so nested alternations stay linear.
  std::unordered_map<const Node*, Formula> duals;
  Formula dual(const Formula& f) {
    auto it = duals.find(f.get());
    if (it != duals.end()) return it->second;
    Formula r;
    switch (f->kind) {
      case Kind::True: r = f_false(); break;
      case Kind::False: r = f_true(); break;
      case Kind::Atom:
      case Kind::Eq: r = neg(f); break;
      case Kind::Not: r = f->kids[0]; break;
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : f->kids) kids.push_back(dual(k));
        r = f->kind == Kind::And ? disj(std::move(kids)) : conj(std::move(kids));
        break;
      }
      case Kind::Exists: r = forall(f->vars, dual(f->kids[0])); break;
      case Kind::Forall: r = exists(f->vars, dual(f->kids[0])); break;
    }
    duals.emplace(f.get(), r);
    duals.emplace(r.get(), f);
    return r;
  }

  int new_slot() {
    vals.push_back(0);
    return static_cast<int>(vals.size()) - 1;
  }

  int lookup(const std::string& v) {
    auto it = scopes.find(v);
    if (it == scopes.end() || it->second.empty()) throw InputError("unbound free variable " + v);
    return it->second.back().second;
  }

  TermC term(const Term& t) {
    TermC c;
    c.slot = lookup(t.var);
    for (const auto& f : t.funcs) {
      auto it = a.functions.find(f);
      if (it == a.functions.end()) throw InputError("structure lacks function " + f);
      c.fns.push_back(&it->second);
    }
    return c;
  }

  int value(const TermC& t) const {
    int v = vals[t.slot];
    for (const auto* f : t.fns) v = (*f)[v];
    return v;
  }

  // Compiles an NNF formula; `used` collects slots read by the node.
  int compile(const Formula& f, std::set<int>& used) {
    CNode c;
    switch (f->kind) {
      case Kind::True: c.op = Op::True; break;
      case Kind::False: c.op = Op::False; break;
      case Kind::Not: {
        const Formula& g = f->kids[0];
        int id = compile(g, used);
        nodes[id].negated = !nodes[id].negated;
        return id;
      }
      case Kind::Atom:
        c.op = Op::Rel;
        c.rel = rel(f->name, static_cast<int>(f->terms.size()));
        for (const auto& t : f->terms) c.args.push_back(term(t));
        break;
      case Kind::Eq:
        c.op = Op::Eq;
        for (const auto& t : f->terms) c.args.push_back(term(t));
        break;
      case Kind::And:
      case Kind::Or:
        c.op = f->kind == Kind::And ? Op::And : Op::Or;
        for (const auto& k : f->kids) c.kids.push_back(compile(k, used));
        break;
      case Kind::Exists:
      case Kind::Forall: return compile_block(f, used);
    }
    for (const auto& t : c.args) used.insert(t.slot);
    nodes.push_back(std::move(c));
    return static_cast<int>(nodes.size()) - 1;
  }

  // Bound variables renamed by nesting depth so alpha-equivalent formulas compare equal.
  static Formula alpha_canonical(const Formula& f, std::map<std::string, std::string>& names, int depth) {
    auto rename = [&](const Term& t) {
      auto it = names.find(t.var);
      return it == names.end() ? t : Term(it->second, t.funcs);
    };
    switch (f->kind) {
      case Kind::True:
      case Kind::False: return f;
      case Kind::Atom: {
        std::vector<Term> ts;
        for (const auto& t : f->terms) ts.push_back(rename(t));
        return atom(f->name, std::move(ts));
      }
      case Kind::Eq: return eq(rename(f->terms[0]), rename(f->terms[1]));
      case Kind::Not: return neg(alpha_canonical(f->kids[0], names, depth));
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : f->kids) kids.push_back(alpha_canonical(k, names, depth));
        return f->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
      }
      case Kind::Exists:
      case Kind::Forall: {
        auto inner = names;
        std::vector<std::string> vars;
        for (size_t i = 0; i < f->vars.size(); ++i) {
          vars.push_back("%" + std::to_string(depth) + "_" + std::to_string(i));
          inner[f->vars[i]] = vars.back();
        }
        Formula body = alpha_canonical(f->kids[0], inner, depth + 1);
        return f->kind == Kind::Exists ? exists(vars, body) : forall(vars, body);
      }
    }
    return f;
  }

  static constexpr std::size_t kSymmetryLimit = 4096;

  // Groups block variables whose transposition leaves the body unchanged; values
  // inside a group can then be enumerated in nondecreasing order.
  static std::vector<int> symmetric_positions(const Formula& f) {
    const auto& vars = f->vars;
    std::vector<int> prev(vars.size(), -1);
    if (vars.size() < 2 || formula_size(f->kids[0]) > kSymmetryLimit) return prev;
    std::vector<int> group_rep, group_last;
    std::map<std::string, std::string> none;
    Formula base = alpha_canonical(f->kids[0], none, 0);
    for (size_t i = 0; i < vars.size(); ++i) {
      bool placed = false;
      for (size_t g = 0; g < group_rep.size() && !placed; ++g) {
        const auto& a = vars[group_rep[g]];
        const auto& b = vars[i];
        std::map<std::string, std::string> swap{{a, b}, {b, a}};
        if (equal(alpha_canonical(f->kids[0], swap, 0), base)) {
          prev[i] = group_last[g];
          group_last[g] = static_cast<int>(i);
          placed = true;
        }
      }
      if (!placed) {
        group_rep.push_back(static_cast<int>(i));
        group_last.push_back(static_cast<int>(i));
      }
    }
    return prev;
  }

  int compile_block(const Formula& f, std::set<int>& used) {
    bool universal = f->kind == Kind::Forall;
    Formula body = universal ? dual(f->kids[0]) : f->kids[0];
    std::vector<int> block;
    for (const auto& v : f->vars) {
      block.push_back(new_slot());
      scopes[v].emplace_back(v, block.back());
    }
    std::vector<Formula> conjuncts = body->kind == Kind::And ? body->kids : std::vector<Formula>{body};
    std::vector<std::pair<int, std::set<int>>> parts;
    std::set<int> inner;
    for (const auto& cf : conjuncts) {
      std::set<int> u;
      int id = compile(cf, u);
      parts.emplace_back(id, u);
      inner.insert(u.begin(), u.end());
    }
    for (const auto& v : f->vars) scopes[v].pop_back();

    CNode c;
    c.op = Op::Exists;
    c.negated = universal;
    c.block = block;
    c.sym_prev = symmetric_positions(f);
    c.checks.assign(block.size() + 1, {});
    c.cand_kind.assign(block.size(), 0);
    c.cand_rel.assign(block.size(), nullptr);
    c.cand_term.assign(block.size(), {});
    for (const auto& [id, u] : parts) {
      int level = 0;
      for (size_t i = 0; i < block.size(); ++i)
        if (u.count(block[i])) level = static_cast<int>(i) + 1;
      c.checks[level].push_back(id);
    }
    // Candidate generators from positive literals linking a block variable to bound terms.
    for (size_t i = 0; i < block.size(); ++i) {
      for (int id : c.checks[i + 1]) {
        const CNode& k = nodes[id];
        if (k.negated || k.args.size() != 2) continue;
        if (k.op == Op::Rel && k.rel->arity == 2) {
          for (int side = 0; side < 2; ++side) {
            const TermC& me = k.args[side];
            const TermC& other = k.args[1 - side];
            if (me.slot != block[i] || !me.fns.empty() || other.slot == block[i]) continue;
            c.cand_kind[i] = side == 0 ? 2 : 1;
            c.cand_rel[i] = k.rel;
            c.cand_term[i] = other;
            break;
          }
        } else if (k.op == Op::Eq) {
          for (int side = 0; side < 2; ++side) {
            const TermC& me = k.args[side];
            const TermC& other = k.args[1 - side];
            if (me.slot != block[i] || !me.fns.empty() || other.slot == block[i]) continue;
            c.cand_kind[i] = 3;
            c.cand_term[i] = other;
            break;
          }
        }
        if (c.cand_kind[i] == 3) break;
      }
    }
    for (int s : inner)
      if (std::find(block.begin(), block.end(), s) == block.end()) c.free_slots.push_back(s);
    c.memo_ok = static_cast<int>(c.free_slots.size()) * bits_per_value <= 62;
    used.insert(c.free_slots.begin(), c.free_slots.end());
    nodes.push_back(std::move(c));
    return static_cast<int>(nodes.size()) - 1;
  }

  void charge() {
    if (++steps > budget) throw BudgetExceeded("evaluation budget exhausted");
  }

  bool run(int id) {
    CNode& c = nodes[id];
    bool r = false;
    switch (c.op) {
      case Op::True: r = true; break;
      case Op::False: r = false; break;
      case Op::Rel: {
        int buf[8];
        std::vector<int> big;
        int* v = buf;
        if (c.args.size() > 8) {
          big.resize(c.args.size());
          v = big.data();
        }
        for (size_t i = 0; i < c.args.size(); ++i) v[i] = value(c.args[i]);
        r = c.rel->holds(v);
        break;
      }
      case Op::Eq: r = value(c.args[0]) == value(c.args[1]); break;
      case Op::And:
        r = true;
        for (int k : c.kids)
          if (!run(k)) {
            r = false;
            break;
          }
        break;
      case Op::Or:
        r = false;
        for (int k : c.kids)
          if (run(k)) {
            r = true;
            break;
          }
        break;
      case Op::Exists: return run_exists(id);
    }
    return c.negated ? !r : r;
  }

  bool run_exists(int id) {
    std::uint64_t key = 0;
    CNode* c = &nodes[id];
    if (c->memo_ok) {
      for (int s : c->free_slots) key = (key << bits_per_value) | static_cast<std::uint64_t>(vals[s]);
      auto it = c->memo.find(key);
      if (it != c->memo.end()) return it->second;
    }
    bool found = false;
    if (n > 0) {
      bool ok = true;
      for (int k : c->checks[0])
        if (!run(k)) {
          ok = false;
          break;
        }
      if (ok) found = search(id, 0);
    }
    c = &nodes[id];
    bool r = c->negated ? !found : found;
    if (c->memo_ok) {
      if (c->memo.size() > 4'000'000) c->memo.clear();
      c->memo.emplace(key, r);
    }
    return r;
  }

  bool try_value(int id, size_t i, int v) {
    const CNode& c = nodes[id];
    if (c.sym_prev[i] >= 0 && v < vals[c.block[c.sym_prev[i]]]) return false;
    charge();
    vals[c.block[i]] = v;
    for (int k : c.checks[i + 1])
      if (!run(k)) return false;
    return search(id, i + 1);
  }

  bool search(int id, size_t i) {
    const CNode& c = nodes[id];
    if (i == c.block.size()) return true;
    switch (c.cand_kind[i]) {
      case 1: {
        const auto& list = c.cand_rel[i]->out[value(c.cand_term[i])];
        for (int v : list)
          if (try_value(id, i, v)) return true;
        return false;
      }
      case 2: {
        const auto& list = c.cand_rel[i]->in[value(c.cand_term[i])];
        for (int v : list)
          if (try_value(id, i, v)) return true;
        return false;
      }
      case 3: return try_value(id, i, value(c.cand_term[i]));
      default:
        for (int v = c.sym_prev[i] >= 0 ? vals[c.block[c.sym_prev[i]]] : 0; v < n; ++v)
          if (try_value(id, i, v)) return true;
        return false;
    }
  }
};

Evaluator::Evaluator(const RelationalStructure& a, const Formula& f, std::vector<std::string> free_order,
                     std::int64_t budget)
    : impl_(std::make_unique<Impl>(a, budget)) {
  for (const auto& v : free_order) impl_->scopes[v].emplace_back(v, impl_->new_slot());
  std::set<int> used;
  impl_->root = impl_->compile(nnf(f), used);
}

Evaluator::~Evaluator() = default;

bool Evaluator::operator()(const std::vector<int>& values) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] >= impl_->n) throw InputError("valuation outside universe");
    impl_->vals[i] = values[i];
  }
  return impl_->run(impl_->root);
}

std::int64_t Evaluator::steps() const { return impl_->steps; }

bool eval(const RelationalStructure& a, const Formula& f, const Valuation& val, std::int64_t budget) {
  std::vector<std::string> order;
  std::vector<int> values;
  for (const auto& v : free_vars(f)) {
    auto it = val.find(v);
    if (it == val.end()) throw InputError("unbound free variable " + v);
    order.push_back(v);
    values.push_back(it->second);
  }
  Evaluator ev(a, f, order, budget);
  return ev(values);
}

std::size_t tuple_index(const std::vector<int>& t, int n) {
  std::size_t k = 0;
  for (int x : t) k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(x);
  return k;
}

std::vector<int> tuple_at(std::size_t index, int arity, int n) {
  std::vector<int> t(arity);
  for (int i = arity - 1; i >= 0; --i) {
    t[i] = static_cast<int>(index % static_cast<std::size_t>(n));
    index /= static_cast<std::size_t>(n);
  }
  return t;
}

bool TuplePredicate::contains(const std::vector<int>& t) const {
  if (t.size() != vars.size()) return false;
  for (int x : t)
    if (x < 0 || x >= n) return false;
  return bits[tuple_index(t, n)];
}

std::set<std::vector<int>> TuplePredicate::tuples() const {
  std::set<std::vector<int>> out;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out.insert(tuple_at(i, static_cast<int>(vars.size()), n));
  return out;
}

std::size_t TuplePredicate::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

TuplePredicate satisfying_tuples(const RelationalStructure& a, const Formula& f, const std::vector<std::string>& vars,
                                 std::int64_t budget) {
  for (const auto& v : free_vars(f))
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) throw InputError("unbound free variable " + v);
  double total = 1;
  for (size_t i = 0; i < vars.size(); ++i) total *= a.n;
  if (total > static_cast<double>(budget)) throw BudgetExceeded("too many tuples to enumerate");
  TuplePredicate p;
  p.vars = vars;
  p.n = a.n;
  p.bits.assign(static_cast<std::size_t>(total), 0);
  Evaluator ev(a, f, vars, budget);
  for (std::size_t i = 0; i < p.bits.size(); ++i) p.bits[i] = ev(tuple_at(i, static_cast<int>(vars.size()), a.n));
  return p;
}

namespace {

class TypeRefiner {
 public:
  TypeRefiner(const RelationalStructure& a, const std::set<std::vector<std::string>>& words, std::int64_t budget)
      : a_(a), budget_(budget, "type refinement budget") {
    for (const auto& w : words) {
      std::vector<const std::vector<int>*> fs;
      for (const auto& f : w) {
        auto it = a.functions.find(f);
        if (it == a.functions.end()) throw InputError("structure lacks function " + f);
        fs.push_back(&it->second);
      }
      words_.push_back(std::move(fs));
    }
    for (const auto& [name, rel] : a.relations) rels_.push_back(&rel);
  }

  int type(std::vector<int>& t, int depth) {
    budget_.charge();
    int atomic = atomic_type(t);
    if (depth == 0) return atomic;
    std::vector<int> key{atomic};
    std::vector<int> ext;
    t.push_back(0);
    for (int w = 0; w < a_.n; ++w) {
      t.back() = w;
      ext.push_back(type(t, depth - 1));
    }
    t.pop_back();
    std::sort(ext.begin(), ext.end());
    ext.erase(std::unique(ext.begin(), ext.end()), ext.end());
    key.push_back(-1);
    key.insert(key.end(), ext.begin(), ext.end());
    return intern(key);
  }

 private:
  int intern(const std::vector<int>& key) {
    auto [it, fresh] = ids_.emplace(key, static_cast<int>(ids_.size()));
    return it->second;
  }

  int atomic_type(const std::vector<int>& t) {
    std::vector<int> terms;
    for (int x : t)
      for (const auto& w : words_) {
        int v = x;
        for (const auto* f : w) v = (*f)[v];
        terms.push_back(v);
      }
    std::vector<int> key{-2, static_cast<int>(t.size())};
    for (size_t i = 0; i < terms.size(); ++i)
      for (size_t j = i + 1; j < terms.size(); ++j) key.push_back(terms[i] == terms[j]);
    std::vector<int> args;
    for (const Relation* r : rels_) {
      int ar = r->arity;
      if (ar == 0) {
        key.push_back(!r->tuples.empty());
        continue;
      }
      std::size_t combos = 1;
      for (int i = 0; i < ar; ++i) combos *= terms.size();
      budget_.charge(static_cast<std::int64_t>(combos / 16));
      args.assign(ar, 0);
      for (std::size_t c = 0; c < combos; ++c) {
        std::size_t x = c;
        for (int i = ar - 1; i >= 0; --i) {
          args[i] = terms[x % terms.size()];
          x /= terms.size();
        }
        key.push_back(r->contains(args));
      }
    }
    return intern(key);
  }

  const RelationalStructure& a_;
  Budget budget_;
  std::vector<std::vector<const std::vector<int>*>> words_;
  std::vector<const Relation*> rels_;
  std::map<std::vector<int>, int> ids_;
};

}  // namespace

std::vector<std::vector<int>> q_type_partition(const RelationalStructure& a, int q, const std::vector<int>& pinned,
                                               const std::set<std::vector<std::string>>& words,
                                               std::int64_t budget) {
  if (q < 0) throw PreconditionError("negative rank");
  for (int p : pinned)
    if (p < 0 || p >= a.n) throw InputError("pinned element outside universe");
  std::set<std::vector<std::string>> ws = words;
  ws.insert(std::vector<std::string>{});
  TypeRefiner refiner(a, ws, budget);
  std::map<int, std::vector<int>> classes;
  std::vector<int> t = pinned;
  t.push_back(0);
  for (int u = 0; u < a.n; ++u) {
    t.back() = u;
    classes[refiner.type(t, q)].push_back(u);
  }
  std::vector<std::vector<int>> out;
  for (auto& [id, members] : classes) out.push_back(members);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> subtree_codes(const RootedForest& f) {
  auto ch = f.children();
  auto depth = f.node_depths();
  std::vector<int> order(f.size());
  for (int v = 0; v < f.size(); ++v) order[v] = v;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return depth[x] > depth[y]; });
  std::map<std::pair<std::vector<std::string>, std::vector<int>>, int> ids;
  std::vector<int> code(f.size(), -1);
  for (int v : order) {
    std::vector<std::string> cols;
    for (const auto& [name, set] : f.colors)
      if (set.count(v)) cols.push_back(name);
    std::vector<int> kids;
    for (int c : ch[v]) kids.push_back(code[c]);
    std::sort(kids.begin(), kids.end());
    auto [it, fresh] = ids.emplace(std::make_pair(cols, kids), static_cast<int>(ids.size()));
    code[v] = it->second;
  }
  return code;
}

bool subtree_iso(const RootedForest& f, int a, int b) {
  if (a < 0 || b < 0 || a >= f.size() || b >= f.size()) throw InputError("unknown node");
  auto code = subtree_codes(f);
  return code[a] == code[b];
}

}  // namespace sparsefo
