#include "sparsefo/qe_forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "sparsefo/error.hpp"

namespace sparsefo {

namespace {
std::atomic<bool> trim_fault{false};
}

void set_trim_fault(bool on) { trim_fault = on; }

StateMultiset trim(int k, StateMultiset a) {
  std::sort(a.begin(), a.end());
  StateMultiset out;
  for (const auto& [q, c] : a) {
    if (c <= 0) continue;
    if (!out.empty() && out.back().first == q)
      out.back().second += c;
    else
      out.push_back({q, c});
  }
  if (trim_fault) k = std::min(k, 1);
  for (auto& e : out) e.second = std::min(e.second, k);
  return out;
}

StateMultiset multiset_of(const std::vector<int>& states, int k) {
  StateMultiset a;
  for (int q : states) a.push_back({q, 1});
  return trim(k, std::move(a));
}

// ---------------------------------------------------------------- base class

TreeValuationAutomaton::TreeValuationAutomaton(std::vector<std::string> letters, int threshold, bool deterministic)
    : letters_(std::move(letters)), threshold_(threshold), deterministic_(deterministic) {
  if (threshold_ < 1) throw PreconditionError("automaton threshold must be >= 1");
}

const std::vector<int>& TreeValuationAutomaton::successors(const StateMultiset& a, Letters b) const {
  StateMultiset key = trim(threshold_, a);
  if (!memoize_) {
    scratch_ = compute(key, b);
    return scratch_;
  }
  auto k = std::make_pair(std::move(key), b);
  auto it = table_.find(k);
  if (it != table_.end()) return it->second;
  auto succ = compute(k.first, b);
  std::sort(succ.begin(), succ.end());
  succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  return table_.emplace(std::move(k), std::move(succ)).first->second;
}

int TreeValuationAutomaton::step(const StateMultiset& a, Letters b) const {
  if (!deterministic_) throw std::logic_error("step on a nondeterministic automaton");
  const auto& s = successors(a, b);
  if (s.size() != 1) throw std::logic_error("deterministic automaton without a unique successor");
  return s[0];
}

double TreeValuationAutomaton::size_measure() const {
  double q = state_count();
  return std::pow(threshold_ + 1.0, q) * std::pow(2.0, static_cast<double>(letters_.size())) * q;
}

namespace {

std::string letters_str(Letters b, const std::vector<std::string>& names) {
  std::string s = "[";
  bool first = true;
  for (size_t i = 0; i < 64; ++i) {
    if (!(b >> i & 1)) continue;
    if (!first) s += ",";
    first = false;
    s += i < names.size() ? names[i] : "#" + std::to_string(i);
  }
  return s + "]";
}

std::string multiset_str(const StateMultiset& a) {
  std::string s = "{";
  for (size_t i = 0; i < a.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a[i].first) + ":" + std::to_string(a[i].second);
  }
  return s + "}";
}

}  // namespace

std::string TreeValuationAutomaton::dump() const {
  std::ostringstream out;
  out << "automaton " << (deterministic_ ? "deterministic" : "nondeterministic") << " threshold " << threshold_
      << " states " << state_count() << "\n";
  out << "letters";
  for (const auto& l : letters_) out << " " << l;
  out << "\naccepting";
  for (int q = 0; q < state_count(); ++q)
    if (accepting(q)) out << " " << q;
  out << "\n";
  for (int q = 0; q < state_count(); ++q) out << "state " << q << " " << describe(q) << "\n";
  for (const auto& [key, succ] : table_) {
    out << "delta " << multiset_str(key.first) << " " << letters_str(key.second, letters_) << " ->";
    for (int q : succ) out << " " << q;
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- explicit

namespace {

class ExplicitAutomaton : public TreeValuationAutomaton {
 public:
  ExplicitAutomaton(std::vector<std::string> letters, int threshold, bool det, int states, std::vector<int> acc,
                    std::vector<ExplicitTransition> delta)
      : TreeValuationAutomaton(std::move(letters), threshold, det), states_(states), acc_(states, 0) {
    for (int q : acc) {
      if (q < 0 || q >= states) throw InputError("accepting state out of range");
      acc_[q] = 1;
    }
    for (auto& t : delta) {
      if (t.target < 0 || t.target >= states) throw InputError("transition target out of range");
      for (const auto& [q, c] : t.children)
        if (q < 0 || q >= states || c < 1) throw InputError("transition multiset out of range");
      auto& v = rel_[{trim(threshold, t.children), t.letters}];
      if (det && !v.empty() && v[0] != t.target) throw InputError("deterministic automaton with two targets");
      if (std::find(v.begin(), v.end(), t.target) == v.end()) v.push_back(t.target);
    }
    for (auto& [k, v] : rel_) std::sort(v.begin(), v.end());
  }
  bool accepting(int q) const override { return acc_.at(q) != 0; }
  int state_count() const override { return states_; }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override {
    auto it = rel_.find({a, b});
    if (it != rel_.end()) return it->second;
    if (deterministic()) throw std::logic_error("missing transition " + multiset_str(a) + " " + letters_str(b, letters()));
    return {};
  }

 private:
  int states_;
  std::vector<char> acc_;
  std::map<std::pair<StateMultiset, Letters>, std::vector<int>> rel_;
};

// ---------------------------------------------------------------- literals

// Tracks terms parent^i(v) bottom-up. A pending term climbs one edge per level and
// stops at a forest root; a resolved term is decided on the spot.
class LiteralAutomaton : public TreeValuationAutomaton {
 public:
  enum class Kind { Color, Equal, Flag, Single, Const };

  LiteralAutomaton(std::vector<std::string> letters, Kind kind, int root_bit, int top_bit)
      : TreeValuationAutomaton(std::move(letters), 2, true), kind_(kind), root_bit_(root_bit), top_bit_(top_bit) {
    memoize_ = false;
    intern(State{});
  }

  Kind kind_;
  int root_bit_, top_bit_;
  std::vector<int> vars_;       // distinct variable letters
  int term_var_[2] = {0, 0};    // index into vars_
  int power_[2] = {0, 0};
  int terms_ = 0;
  int letter_ = -1;             // colour or flag letter
  bool const_value_ = true;

  struct State {
    bool invalid = false;
    std::uint8_t mask = 0;         // vars present below
    std::int8_t st[2] = {0, 0};    // 0 absent, k > 0 pending k levels up, -1 resolved
    std::int8_t value = -1;        // -1 undecided
    std::uint8_t count = 0;        // Single only
    std::uint32_t pack() const {
      return (invalid ? 1u : 0u) | (std::uint32_t(mask) << 1) | (std::uint32_t(std::uint8_t(st[0] + 1)) << 3) |
             (std::uint32_t(std::uint8_t(st[1] + 1)) << 11) | (std::uint32_t(value + 1) << 19) |
             (std::uint32_t(count) << 21);
    }
  };

  bool accepting(int q) const override {
    const State& s = states_[q];
    if (s.invalid) return false;
    if (kind_ == Kind::Const) return const_value_;
    if (kind_ == Kind::Single) return s.count == 1;
    return s.value == 1;
  }
  bool dead(int q) const override { return kind_ == Kind::Single && states_[q].invalid; }
  std::uint64_t footprint(int q) const override {
    std::uint64_t f = 0;
    for (size_t j = 0; j < vars_.size(); ++j)
      if (states_[q].mask >> j & 1) f |= std::uint64_t(1) << vars_[j];
    return f;
  }
  int state_count() const override { return static_cast<int>(states_.size()); }
  std::string describe(int q) const override {
    const State& s = states_[q];
    if (s.invalid) return "invalid";
    std::ostringstream o;
    o << "mask=" << int(s.mask) << " st=" << int(s.st[0]) << "," << int(s.st[1]) << " value=" << int(s.value);
    if (kind_ == Kind::Single) o << " count=" << int(s.count);
    return o.str();
  }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override {
    return {intern(transition(a, b))};
  }

 private:
  mutable std::vector<State> states_;
  mutable std::unordered_map<std::uint32_t, int> ids_;

  int intern(const State& s) const {
    auto key = s.pack();
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    states_.push_back(s);
    ids_.emplace(key, static_cast<int>(states_.size()) - 1);
    return static_cast<int>(states_.size()) - 1;
  }

  static State invalid_state() {
    State s;
    s.invalid = true;
    return s;
  }

  State transition(const StateMultiset& a, Letters b) const {
    const bool top = b >> top_bit_ & 1;
    const bool root = b >> root_bit_ & 1;
    State out;
    if (kind_ == Kind::Const) return out;
    if (kind_ == Kind::Flag) {
      if (top) out.value = static_cast<std::int8_t>(b >> letter_ & 1);
      return out;
    }
    if (kind_ == Kind::Single) {
      int n = 0;
      for (const auto& [q, c] : a) {
        if (states_[q].invalid) return invalid_state();
        n += states_[q].count * c;
      }
      if (b >> vars_[0] & 1) {
        if (top) return invalid_state();
        ++n;
      }
      if (n >= 2) return invalid_state();
      out.count = static_cast<std::uint8_t>(n);
      out.mask = n ? 1 : 0;
      return out;
    }
    std::int8_t from_child[2] = {0, 0};
    std::int8_t decided = -1;
    for (const auto& [q, c] : a) {
      const State& s = states_[q];
      if (s.invalid) return invalid_state();
      if (!s.mask) continue;
      if (c >= 2 || (out.mask & s.mask)) return invalid_state();
      out.mask |= s.mask;
      if (s.value != -1) decided = s.value;
      for (int t = 0; t < terms_; ++t)
        if (s.mask >> term_var_[t] & 1) from_child[t] = s.st[t];
    }
    std::uint8_t here = 0;
    for (size_t j = 0; j < vars_.size(); ++j) {
      if (!(b >> vars_[j] & 1)) continue;
      if (top || (out.mask >> j & 1)) return invalid_state();
      here |= static_cast<std::uint8_t>(1u << j);
    }
    out.mask |= here;
    if (decided != -1) {
      out.value = decided;
      out.st[0] = out.st[1] = -1;
      return out;
    }
    constexpr std::int8_t kNow = -2;
    std::int8_t st[2] = {0, 0};
    for (int t = 0; t < terms_; ++t) {
      if (!(out.mask >> term_var_[t] & 1)) continue;
      if (here >> term_var_[t] & 1) {
        st[t] = power_[t] == 0 ? kNow : static_cast<std::int8_t>(power_[t]);
      } else {
        std::int8_t in = from_child[t];
        st[t] = in == 1 ? kNow : static_cast<std::int8_t>(in - 1);
      }
      if (st[t] > 0 && (root || top)) st[t] = kNow;
    }
    if (kind_ == Kind::Color) {
      if (st[0] == kNow) out.value = static_cast<std::int8_t>(b >> letter_ & 1);
    } else {
      bool n0 = st[0] == kNow, n1 = st[1] == kNow;
      if (n0 && n1)
        out.value = 1;
      else if (n0 || n1)
        out.value = 0;
    }
    if (out.value != -1) {
      out.st[0] = out.st[1] = -1;
    } else {
      out.st[0] = st[0];
      out.st[1] = st[1];
    }
    return out;
  }
};

// ---------------------------------------------------------------- product

// Acceptance condition of a product: a positive boolean combination of components.
struct AccExpr {
  enum Op { Leaf, And, Or, True, False } op = True;
  int leaf = -1;
  std::vector<AccExpr> kids;
  bool eval(const std::function<bool(int)>& leaf_ok) const {
    switch (op) {
      case Leaf: return leaf_ok(leaf);
      case And:
        for (const auto& k : kids)
          if (!k.eval(leaf_ok)) return false;
        return true;
      case Or:
        for (const auto& k : kids)
          if (k.eval(leaf_ok)) return true;
        return false;
      case True: return true;
      case False: return false;
    }
    return false;
  }
};

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = v.size();
    for (int x : v) h = h * 1000003u ^ static_cast<std::size_t>(x);
    return h;
  }
};

class ProductAutomaton : public TreeValuationAutomaton {
 public:
  ProductAutomaton(std::vector<Automaton> comps, AccExpr acc, int width)
      : TreeValuationAutomaton(comps.at(0)->letters(), max_threshold(comps), true),
        comps_(std::move(comps)),
        acc_(std::move(acc)),
        width_(width) {
    for (const auto& c : comps_)
      if (!c->deterministic()) throw PreconditionError("product of nondeterministic automata");
  }

  bool accepting(int q) const override {
    if (q == dead_id_) return false;
    const auto& t = tuples_[q];
    return acc_.eval([&](int i) { return comps_[i]->accepting(t[i]); });
  }
  bool dead(int q) const override { return q == dead_id_; }
  std::uint64_t footprint(int q) const override {
    if (q == dead_id_) return 0;
    std::uint64_t f = 0;
    for (size_t i = 0; i < comps_.size(); ++i) f |= comps_[i]->footprint(tuples_[q][i]);
    return f;
  }
  int footprint_width() const override { return width_; }
  int state_count() const override { return static_cast<int>(tuples_.size()); }
  std::string describe(int q) const override {
    if (q == dead_id_) return "dead";
    std::string s = "(";
    for (size_t i = 0; i < tuples_[q].size(); ++i) s += (i ? "," : "") + std::to_string(tuples_[q][i]);
    return s + ")";
  }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override {
    if (dead_id_ >= 0)
      for (const auto& [q, c] : a)
        if (q == dead_id_) return {dead_id_};
    std::vector<int> t(comps_.size());
    StateMultiset proj;
    for (size_t i = 0; i < comps_.size(); ++i) {
      proj.clear();
      for (const auto& [q, c] : a) proj.push_back({tuples_[q][i], c});
      t[i] = comps_[i]->step(proj, b);
      if (comps_[i]->dead(t[i])) return {dead()};
    }
    return {intern(t)};
  }

 private:
  std::vector<Automaton> comps_;
  AccExpr acc_;
  int width_;
  mutable std::vector<std::vector<int>> tuples_;
  mutable std::unordered_map<std::vector<int>, int, VecHash> ids_;
  mutable int dead_id_ = -1;

  static int max_threshold(const std::vector<Automaton>& cs) {
    int k = 1;
    for (const auto& c : cs) k = std::max(k, c->threshold());
    return k;
  }
  int intern(const std::vector<int>& t) const {
    auto it = ids_.find(t);
    if (it != ids_.end()) return it->second;
    tuples_.push_back(t);
    ids_.emplace(t, static_cast<int>(tuples_.size()) - 1);
    return static_cast<int>(tuples_.size()) - 1;
  }
  int dead() const {
    if (dead_id_ < 0) {
      tuples_.push_back({});
      dead_id_ = static_cast<int>(tuples_.size()) - 1;
    }
    return dead_id_;
  }
};

class ComplementAutomaton : public TreeValuationAutomaton {
 public:
  explicit ComplementAutomaton(Automaton a)
      : TreeValuationAutomaton(a->letters(), a->threshold(), true), a_(std::move(a)) {
    if (!a_->deterministic()) throw PreconditionError("complement of a nondeterministic automaton");
    memoize_ = false;
  }
  bool accepting(int q) const override { return !a_->accepting(q); }
  std::uint64_t footprint(int q) const override { return a_->footprint(q); }
  int footprint_width() const override { return a_->footprint_width(); }
  int state_count() const override { return a_->state_count(); }
  std::string describe(int q) const override { return a_->describe(q); }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override { return {a_->step(a, b)}; }

 private:
  Automaton a_;
};

class ProjectedAutomaton : public TreeValuationAutomaton {
 public:
  ProjectedAutomaton(Automaton a, Letters hidden)
      : TreeValuationAutomaton(a->letters(), a->threshold(), false), a_(std::move(a)), hidden_(hidden) {
    for (int i = 0; i < 64; ++i)
      if (hidden >> i & 1) hidden_bits_.push_back(i);
  }
  bool accepting(int q) const override { return a_->accepting(q); }
  bool dead(int q) const override { return a_->dead(q); }
  std::uint64_t footprint(int q) const override { return a_->footprint(q); }
  int footprint_width() const override { return a_->footprint_width(); }
  int state_count() const override { return a_->state_count(); }
  std::string describe(int q) const override { return a_->describe(q); }
  Letters hidden() const { return hidden_; }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override {
    b &= ~hidden_;
    std::uint64_t used = 0;
    if (a_->footprint_width() > 0)
      for (const auto& [q, c] : a) used |= a_->footprint(q);
    std::vector<int> out;
    const int h = static_cast<int>(hidden_bits_.size());
    for (std::uint64_t s = 0; s < (std::uint64_t(1) << h); ++s) {
      Letters extra = 0;
      for (int i = 0; i < h; ++i)
        if (s >> i & 1) extra |= Letters(1) << hidden_bits_[i];
      if (extra & used) continue;
      int q = a_->step(a, b | extra);
      if (!a_->dead(q)) out.push_back(q);
    }
    return out;
  }

 private:
  Automaton a_;
  Letters hidden_;
  std::vector<int> hidden_bits_;
};

class PowersetAutomaton : public TreeValuationAutomaton {
 public:
  explicit PowersetAutomaton(Automaton a)
      : TreeValuationAutomaton(a->letters(), threshold_for(*a), true), a_(std::move(a)) {}

  bool accepting(int q) const override {
    for (int s : sets_[q])
      if (a_->accepting(s)) return true;
    return false;
  }
  bool dead(int q) const override { return sets_[q].empty(); }
  int state_count() const override { return static_cast<int>(sets_.size()); }
  std::string describe(int q) const override {
    std::string s = "{";
    for (size_t i = 0; i < sets_[q].size(); ++i) s += (i ? "," : "") + std::to_string(sets_[q][i]);
    return s + "}";
  }
  const std::vector<int>& subset(int q) const { return sets_.at(q); }

 protected:
  std::vector<int> compute(const StateMultiset& a, Letters b) const override {
    const bool fp = a_->footprint_width() > 0;
    const int t = a_->threshold();
    // Every trimmed multiset of choices, one state from each child's subset.
    std::set<std::pair<StateMultiset, std::uint64_t>> cur{{{}, 0}};
    for (const auto& [sid, count] : a) {
      const auto& s = sets_[sid];
      if (fp) {
        int zero = 0;
        for (int q : s) zero += a_->footprint(q) == 0;
        if (zero > 1) throw std::logic_error("powerset: two footprint-free states in one subset");
      }
      for (int rep = 0; rep < count && !cur.empty(); ++rep) {
        std::set<std::pair<StateMultiset, std::uint64_t>> next;
        for (const auto& [m, used] : cur)
          for (int q : s) {
            std::uint64_t f = fp ? a_->footprint(q) : 0;
            if (f & used) continue;
            StateMultiset m2 = m;
            auto it = std::lower_bound(m2.begin(), m2.end(), std::make_pair(q, 0));
            if (it != m2.end() && it->first == q)
              it->second = std::min(it->second + 1, t);
            else
              m2.insert(it, {q, 1});
            next.insert({std::move(m2), used | f});
          }
        cur = std::move(next);
      }
    }
    std::vector<int> out;
    for (const auto& [m, used] : cur) {
      const auto& succ = a_->successors(m, b);
      out.insert(out.end(), succ.begin(), succ.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::vector<int> kept;
    for (int q : out)
      if (!a_->dead(q)) kept.push_back(q);
    return {intern(kept)};
  }

 private:
  Automaton a_;
  mutable std::vector<std::vector<int>> sets_;
  mutable std::unordered_map<std::vector<int>, int, VecHash> ids_;

  // With footprints at most `width` children take a state that uses resources,
  // and the resource-free state is unique, so width + t copies of a subset suffice.
  // Otherwise the general |Q| * t.
  static int threshold_for(const TreeValuationAutomaton& a) {
    if (a.footprint_width() > 0) return a.footprint_width() + a.threshold();
    return std::max(1, a.state_count()) * a.threshold();
  }
  int intern(const std::vector<int>& s) const {
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    sets_.push_back(s);
    ids_.emplace(s, static_cast<int>(sets_.size()) - 1);
    return static_cast<int>(sets_.size()) - 1;
  }
};

}  // namespace

Automaton make_explicit_automaton(std::vector<std::string> letters, int threshold, bool deterministic, int states,
                                  std::vector<int> accepting, std::vector<ExplicitTransition> delta) {
  return std::make_shared<ExplicitAutomaton>(std::move(letters), threshold, deterministic, states,
                                             std::move(accepting), std::move(delta));
}

Automaton product(const Automaton& a, const Automaton& b, ProductKind kind) {
  AccExpr e;
  e.op = kind == ProductKind::Union ? AccExpr::Or : AccExpr::And;
  e.kids.push_back({AccExpr::Leaf, 0, {}});
  e.kids.push_back({AccExpr::Leaf, 1, {}});
  return std::make_shared<ProductAutomaton>(std::vector<Automaton>{a, b}, std::move(e),
                                            std::max(a->footprint_width(), b->footprint_width()));
}

Automaton complement(const Automaton& a) { return std::make_shared<ComplementAutomaton>(a); }

Automaton project(const Automaton& a, Letters hidden) { return std::make_shared<ProjectedAutomaton>(a, hidden); }

Automaton determinize(const Automaton& a) { return std::make_shared<PowersetAutomaton>(a); }

// ---------------------------------------------------------------- trees and runs

int LabelledTree::root() const {
  for (int v = 0; v < static_cast<int>(parent.size()); ++v)
    if (parent[v] == v) return v;
  throw InputError("labelled tree without a root");
}

std::vector<std::vector<int>> LabelledTree::children() const {
  std::vector<std::vector<int>> ch(parent.size());
  for (int v = 0; v < static_cast<int>(parent.size()); ++v)
    if (parent[v] != v) ch[parent[v]].push_back(v);
  return ch;
}

std::vector<int> LabelledTree::bottom_up() const {
  auto ch = children();
  std::vector<int> order{root()};
  for (size_t i = 0; i < order.size(); ++i)
    for (int c : ch[order[i]]) order.push_back(c);
  if (order.size() != parent.size()) throw InputError("labelled tree is not connected or has several roots");
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<int> run(const TreeValuationAutomaton& a, const LabelledTree& t) {
  auto ch = t.children();
  std::vector<int> rho(t.parent.size(), -1);
  std::vector<int> kids;
  for (int v : t.bottom_up()) {
    kids.clear();
    for (int c : ch[v]) kids.push_back(rho[c]);
    rho[v] = a.step(multiset_of(kids, a.threshold()), t.letters.at(v));
  }
  return rho;
}

bool accepts(const TreeValuationAutomaton& a, const LabelledTree& t) { return a.accepting(run(a, t)[t.root()]); }

// ---------------------------------------------------------------- forests

std::vector<std::string> ForestAlphabet::names() const {
  std::vector<std::string> out = free_vars;
  out.insert(out.end(), bound_vars.begin(), bound_vars.end());
  out.insert(out.end(), colors.begin(), colors.end());
  out.insert(out.end(), flags.begin(), flags.end());
  out.push_back("root");
  out.push_back("top");
  return out;
}

int ForestAlphabet::var_letter(const std::string& v) const {
  for (size_t i = 0; i < free_vars.size(); ++i)
    if (free_vars[i] == v) return static_cast<int>(i);
  for (size_t i = 0; i < bound_vars.size(); ++i)
    if (bound_vars[i] == v) return static_cast<int>(free_vars.size() + i);
  throw InputError("unknown variable " + v);
}

int ForestAlphabet::color_letter(const std::string& c) const {
  auto it = std::find(colors.begin(), colors.end(), c);
  if (it == colors.end()) return -1;
  return static_cast<int>(free_vars.size() + bound_vars.size() + (it - colors.begin()));
}

int ForestAlphabet::flag_letter(const std::string& f) const {
  auto it = std::find(flags.begin(), flags.end(), f);
  if (it == flags.end()) return -1;
  return static_cast<int>(free_vars.size() + bound_vars.size() + colors.size() + (it - flags.begin()));
}

int ForestAlphabet::root_letter() const {
  return static_cast<int>(free_vars.size() + bound_vars.size() + colors.size() + flags.size());
}
int ForestAlphabet::top_letter() const { return root_letter() + 1; }

Letters ForestAlphabet::var_mask() const {
  return (Letters(1) << (free_vars.size() + bound_vars.size())) - 1;
}
Letters ForestAlphabet::bound_mask() const { return var_mask() & ~((Letters(1) << free_vars.size()) - 1); }

namespace {

bool quantifier_free(const Formula& f) {
  if (f->kind == Kind::Exists || f->kind == Kind::Forall) return false;
  for (const auto& k : f->kids)
    if (!quantifier_free(k)) return false;
  return true;
}

std::pair<std::string, int> term_parts(const Term& t, const std::string& fn, int d) {
  for (const auto& g : t.funcs)
    if (g != fn) throw InputError("function " + g + " is not in the forest signature");
  return {t.var, std::min(static_cast<int>(t.funcs.size()), std::max(0, d - 1))};
}

}  // namespace

CompiledExistential automaton_from_existential(const Formula& phi, int d, const std::string& fn,
                                               std::vector<std::string> free_order) {
  if (d < 1) d = 1;
  auto fv = free_vars(phi);
  if (free_order.empty()) free_order.assign(fv.begin(), fv.end());
  for (const auto& v : fv)
    if (std::find(free_order.begin(), free_order.end(), v) == free_order.end())
      throw InputError("free variable " + v + " missing from the variable order");
  std::set<std::string> avoid(free_order.begin(), free_order.end());
  FreshNames fresh(avoid);
  Formula g = rename_bound(phi, fresh);
  std::vector<std::string> bound;
  while (g->kind == Kind::Exists) {
    bound.insert(bound.end(), g->vars.begin(), g->vars.end());
    g = g->kids[0];
  }
  if (!quantifier_free(g)) throw PreconditionError("formula is not existential");
  Formula psi = nnf(g);

  CompiledExistential out;
  out.alphabet.free_vars = free_order;
  out.alphabet.bound_vars = bound;
  std::set<std::string> colors, flags;
  std::function<void(const Formula&)> scan = [&](const Formula& h) {
    if (h->kind == Kind::Atom) {
      if (h->terms.size() == 1) {
        term_parts(h->terms[0], fn, d);
        colors.insert(h->name);
      } else if (h->terms.empty()) {
        flags.insert(h->name);
      } else {
        throw InputError("relation " + h->name + " of arity " + std::to_string(h->terms.size()) +
                         " is not in the forest signature");
      }
    }
    if (h->kind == Kind::Eq)
      for (const auto& t : h->terms) term_parts(t, fn, d);
    for (const auto& k : h->kids) scan(k);
  };
  scan(psi);
  out.alphabet.colors.assign(colors.begin(), colors.end());
  out.alphabet.flags.assign(flags.begin(), flags.end());
  const auto names = out.alphabet.names();
  if (names.size() > 64) throw InputError("more than 64 letters");
  const int root_bit = out.alphabet.root_letter(), top_bit = out.alphabet.top_letter();
  const int width = static_cast<int>(free_order.size() + bound.size());

  std::vector<Automaton> comps;
  std::map<std::string, int> index;
  using LK = LiteralAutomaton::Kind;
  auto literal = [&](const Formula& at, bool negative) -> int {
    std::string key = (negative ? "!" : "") + print_formula(at);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    Automaton pos;
    std::string pkey = print_formula(at);
    auto pit = index.find(pkey);
    if (pit != index.end()) {
      pos = comps[pit->second];
    } else {
      std::shared_ptr<LiteralAutomaton> lit;
      if (at->kind == Kind::Atom && at->terms.empty()) {
        lit = std::make_shared<LiteralAutomaton>(names, LK::Flag, root_bit, top_bit);
        lit->letter_ = out.alphabet.flag_letter(at->name);
      } else if (at->kind == Kind::Atom) {
        lit = std::make_shared<LiteralAutomaton>(names, LK::Color, root_bit, top_bit);
        auto [v, p] = term_parts(at->terms[0], fn, d);
        lit->letter_ = out.alphabet.color_letter(at->name);
        lit->vars_ = {out.alphabet.var_letter(v)};
        lit->terms_ = 1;
        lit->power_[0] = p;
      } else {
        auto [v0, p0] = term_parts(at->terms[0], fn, d);
        auto [v1, p1] = term_parts(at->terms[1], fn, d);
        if (v0 == v1 && p0 == p1) {
          lit = std::make_shared<LiteralAutomaton>(names, LK::Const, root_bit, top_bit);
        } else {
          lit = std::make_shared<LiteralAutomaton>(names, LK::Equal, root_bit, top_bit);
          lit->vars_ = {out.alphabet.var_letter(v0)};
          if (v1 != v0) lit->vars_.push_back(out.alphabet.var_letter(v1));
          lit->terms_ = 2;
          lit->term_var_[1] = v1 != v0 ? 1 : 0;
          lit->power_[0] = p0;
          lit->power_[1] = p1;
        }
      }
      pos = lit;
      comps.push_back(pos);
      index[pkey] = static_cast<int>(comps.size()) - 1;
    }
    if (!negative) return index[pkey];
    comps.push_back(complement(pos));
    index[key] = static_cast<int>(comps.size()) - 1;
    return index[key];
  };
  std::function<AccExpr(const Formula&)> build = [&](const Formula& h) -> AccExpr {
    switch (h->kind) {
      case Kind::True: return {AccExpr::True, -1, {}};
      case Kind::False: return {AccExpr::False, -1, {}};
      case Kind::Atom:
      case Kind::Eq: return {AccExpr::Leaf, literal(h, false), {}};
      case Kind::Not: return {AccExpr::Leaf, literal(h->kids[0], true), {}};
      case Kind::And:
      case Kind::Or: {
        AccExpr e{h->kind == Kind::And ? AccExpr::And : AccExpr::Or, -1, {}};
        for (const auto& k : h->kids) e.kids.push_back(build(k));
        return e;
      }
      default: throw PreconditionError("unexpected connective in a quantifier-free formula");
    }
  };
  AccExpr body = build(psi);
  out.literals = static_cast<int>(comps.size());
  AccExpr all{AccExpr::And, -1, {body}};
  for (int v = 0; v < width; ++v) {
    auto s = std::make_shared<LiteralAutomaton>(names, LK::Single, root_bit, top_bit);
    s->vars_ = {v};
    comps.push_back(s);
    all.kids.push_back({AccExpr::Leaf, static_cast<int>(comps.size()) - 1, {}});
  }
  if (comps.empty()) comps.push_back(std::make_shared<LiteralAutomaton>(names, LK::Const, root_bit, top_bit));
  out.product = std::make_shared<ProductAutomaton>(std::move(comps), std::move(all), width);
  out.nfa = project(out.product, out.alphabet.bound_mask());
  return out;
}

LabelledTree forest_tree(const RootedForest& f, const ForestAlphabet& al, const std::map<std::string, int>& placement) {
  const int n = f.size();
  LabelledTree t;
  t.parent.resize(n + 1);
  t.letters.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) {
    t.parent[v] = f.is_root(v) ? n : f.parent[v];
    if (f.is_root(v)) t.letters[v] |= Letters(1) << al.root_letter();
  }
  t.parent[n] = n;
  t.letters[n] |= Letters(1) << al.top_letter();
  for (const auto& [name, members] : f.colors) {
    int l = al.color_letter(name);
    if (l < 0) continue;
    for (int v : members) t.letters.at(v) |= Letters(1) << l;
  }
  for (const auto& [name, value] : f.flags) {
    int l = al.flag_letter(name);
    if (l >= 0 && value) t.letters[n] |= Letters(1) << l;
  }
  for (const auto& [var, v] : placement) {
    if (v < 0 || v >= n) throw PreconditionError("placement outside the forest");
    t.letters[v] |= Letters(1) << al.var_letter(var);
  }
  return t;
}

std::vector<NodeLabel> count_star_labels(const TreeValuationAutomaton& a, const LabelledTree& t, int free_vars) {
  const int cap = free_vars + a.threshold();
  auto rho = run(a, t);
  auto ch = t.children();
  std::vector<NodeLabel> out(t.parent.size());
  for (size_t v = 0; v < t.parent.size(); ++v) {
    std::vector<int> kids;
    for (int c : ch[v]) kids.push_back(rho[c]);
    out[v] = {t.letters[v], rho[v], multiset_of(kids, cap)};
  }
  return out;
}

// ---------------------------------------------------------------- forest QE

AtomicType atomic_type(const ForestQeResult& hat, const std::vector<int>& tuple) {
  const RootedForest& f = hat.forest;
  const int k = static_cast<int>(tuple.size());
  AtomicType t;
  t.top_label = hat.node_label.back();
  std::vector<std::vector<int>> nodes(k);
  for (int u = 0; u < k; ++u) {
    int v = tuple[u];
    if (v < 0 || v >= f.size()) throw PreconditionError("tuple entry outside the forest");
    while (true) {
      nodes[u].push_back(v);
      if (f.is_root(v)) break;
      v = f.parent[v];
    }
    std::vector<int> chain;
    for (int x : nodes[u]) chain.push_back(hat.node_label[x]);
    t.chains.push_back(std::move(chain));
  }
  t.meet.assign(k, std::vector<std::pair<int, int>>(k, {-1, -1}));
  for (int u = 0; u < k; ++u)
    for (int w = u + 1; w < k; ++w) {
      for (size_t i = 0; i < nodes[u].size() && t.meet[u][w].first < 0; ++i) {
        auto it = std::find(nodes[w].begin(), nodes[w].end(), nodes[u][i]);
        if (it != nodes[w].end()) t.meet[u][w] = {static_cast<int>(i), static_cast<int>(it - nodes[w].begin())};
      }
    }
  return t;
}

bool reconstruct_run(const ForestQeResult& hat, const AtomicType& t) {
  const auto& dfa = *hat.dfa;
  const int k = static_cast<int>(t.chains.size());
  const int kd = dfa.threshold();
  // Skeleton: one node per ancestor position, merged along the meets.
  std::vector<std::vector<int>> id(k);
  std::vector<int> label, depth, par;
  std::vector<Letters> extra;
  for (int u = 0; u < k; ++u) {
    const int len = static_cast<int>(t.chains[u].size());
    id[u].assign(len, -1);
    for (int i = len - 1; i >= 0; --i) {
      for (int w = 0; w < u && id[u][i] < 0; ++w) {
        auto [a, b] = t.meet[w][u];
        if (a < 0 || i < b) continue;
        int j = a + (i - b);
        if (j >= static_cast<int>(t.chains[w].size()) ||
            static_cast<int>(t.chains[w].size()) - a != len - b || t.chains[w][j] != t.chains[u][i])
          throw std::logic_error("inconsistent atomic type");
        id[u][i] = id[w][j];
      }
      if (id[u][i] < 0) {
        id[u][i] = static_cast<int>(label.size());
        label.push_back(t.chains[u][i]);
        depth.push_back(len - i);
        par.push_back(i + 1 < len ? id[u][i + 1] : -1);
        extra.push_back(0);
      }
    }
    extra[id[u][0]] |= Letters(1) << u;
  }
  const int m = static_cast<int>(label.size());
  std::vector<std::vector<int>> kids(m + 1);
  for (int v = 0; v < m; ++v) kids[par[v] < 0 ? m : par[v]].push_back(v);
  std::vector<int> order(m);
  for (int v = 0; v < m; ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] > depth[b]; });
  order.push_back(m);
  std::vector<int> state(m + 1, -1);
  for (int v : order) {
    const NodeLabel& lab = hat.labels.at(v == m ? t.top_label : label[v]);
    std::map<int, int> stored(lab.counts.begin(), lab.counts.end());
    std::map<int, int> delta;
    for (int c : kids[v]) {
      --delta[hat.labels.at(label[c]).state];
      ++delta[state[c]];
    }
    for (const auto& [q, c] : delta) stored.emplace(q, 0);
    StateMultiset ms;
    for (const auto& [q, c] : stored) {
      int real = c + (delta.count(q) ? delta[q] : 0);
      if (real < 0) throw std::logic_error("inconsistent atomic type: negative child count");
      int value = c >= hat.count_cap ? kd : std::min(real, kd);
      if (value > 0) ms.push_back({q, value});
    }
    // The tuple's variables sit on the skeleton's first positions; free variables are the first letters.
    state[v] = dfa.step(ms, lab.letters | (v == m ? 0 : extra[v]));
  }
  return dfa.accepting(state[m]);
}

Formula type_formula(const ForestQeResult& hat, const AtomicType& t) {
  std::vector<Formula> parts{flag(hat.label_names.at(t.top_label))};
  const auto& vars = hat.free_vars;
  const std::string f = hat.forest_fn;
  auto term = [&](int u, int i) { return apply_fn(f, i, Term(vars[u])); };
  const int k = static_cast<int>(t.chains.size());
  for (int u = 0; u < k; ++u)
    for (int i = 0; i < static_cast<int>(t.chains[u].size()); ++i)
      parts.push_back(atom(hat.label_names.at(t.chains[u][i]), {term(u, i)}));
  for (int u = 0; u < k; ++u)
    for (int w = u + 1; w < k; ++w) {
      auto [i, j] = t.meet[u][w];
      if (i < 0) {
        parts.push_back(neq(term(u, static_cast<int>(t.chains[u].size()) - 1),
                            term(w, static_cast<int>(t.chains[w].size()) - 1)));
        continue;
      }
      parts.push_back(eq(term(u, i), term(w, j)));
      if (i > 0 && j > 0) parts.push_back(neq(term(u, i - 1), term(w, j - 1)));
    }
  return conj(std::move(parts));
}

ForestQeResult forest_qe(const Formula& phi, int d, const RootedForest& f, const ForestQeOptions& opt) {
  f.validate();
  if (f.depth() > d)
    throw PreconditionError("forest depth " + std::to_string(f.depth()) + " exceeds the bound " + std::to_string(d));
  ForestQeResult hat;
  hat.forest_fn = opt.fn;
  hat.compiled = automaton_from_existential(phi, d, opt.fn, opt.free_order);
  hat.free_vars = hat.compiled.alphabet.free_vars;
  hat.dfa = determinize(hat.compiled.nfa);
  const int n = f.size();
  const int k = static_cast<int>(hat.free_vars.size());
  LabelledTree tree = forest_tree(f, hat.compiled.alphabet);
  auto node_labels = count_star_labels(*hat.dfa, tree, k);
  hat.count_cap = k + hat.dfa->threshold();
  std::map<NodeLabel, int> ids;
  hat.node_label.resize(n + 1);
  for (int v = 0; v <= n; ++v) {
    auto [it, fresh] = ids.emplace(node_labels[v], static_cast<int>(hat.labels.size()));
    if (fresh) {
      hat.labels.push_back(node_labels[v]);
      hat.label_names.push_back(opt.prefix + (v == n ? "T" : "L") + std::to_string(it->second));
    }
    hat.node_label[v] = it->second;
  }
  // A label seen both inside the forest and at the top keeps the first name; the top never shares one
  // because only the top carries the top letter.
  hat.forest = f;
  for (int v = 0; v < n; ++v) {
    const auto& name = hat.label_names[hat.node_label[v]];
    if (f.colors.count(name)) throw InputError("label name " + name + " already used by the forest");
    hat.forest.colors[name].insert(v);
    hat.signature.relations[name] = 1;
  }
  const auto& top_name = hat.label_names[hat.node_label[n]];
  if (f.flags.count(top_name)) throw InputError("flag name " + top_name + " already used by the forest");
  hat.forest.flags[top_name] = true;
  hat.signature.relations[top_name] = 0;

  std::map<AtomicType, bool> verdict;
  std::vector<int> tuple(k, 0);
  double total = std::pow(static_cast<double>(n), k);
  if (total > 5e7) throw BudgetExceeded("forest_qe: too many tuples to tabulate");
  if (k == 0 || n > 0) {
    while (true) {
      AtomicType t = atomic_type(hat, tuple);
      auto it = verdict.find(t);
      if (it == verdict.end()) verdict.emplace(t, reconstruct_run(hat, t));
      int i = k - 1;
      while (i >= 0 && ++tuple[i] == n) tuple[i--] = 0;
      if (i < 0) break;
    }
  }
  // Realised types partition the tuples, so the shorter side suffices.
  for (const auto& [t, ok] : verdict)
    if (ok) hat.accepted.push_back(t);
  const bool flip = k > 0 && 2 * hat.accepted.size() > verdict.size();
  std::vector<Formula> disjuncts;
  for (const auto& [t, ok] : verdict)
    if (ok != flip) disjuncts.push_back(type_formula(hat, t));
  hat.formula = flip ? neg(disj(std::move(disjuncts))) : disj(std::move(disjuncts));
  return hat;
}

}  // namespace sparsefo
