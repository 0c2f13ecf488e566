#include "sparsefo/logic.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "sparsefo/error.hpp"

namespace sparsefo {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_str(const std::string& s) { return std::hash<std::string>{}(s); }

std::size_t hash_term(const Term& t) {
  std::size_t h = hash_str(t.var);
  for (const auto& f : t.funcs) h = mix(h, hash_str(f));
  return h;
}

Formula make(Node n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 1000003ULL;
  h = mix(h, hash_str(n.name));
  for (const auto& t : n.terms) h = mix(h, hash_term(t));
  for (const auto& k : n.kids) h = mix(h, k->hash);
  for (const auto& v : n.vars) h = mix(h, hash_str(v));
  n.hash = h;
  return std::make_shared<const Node>(std::move(n));
}

int cmp_terms(const std::vector<Term>& a, const std::vector<Term>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

}  // namespace

Term apply_fn(const std::string& f, int times, Term t) {
  for (int i = 0; i < times; ++i) t.funcs.push_back(f);
  return t;
}

int compare(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (a->hash != b->hash) return a->hash < b->hash ? -1 : 1;
  if (a->name != b->name) return a->name < b->name ? -1 : 1;
  if (int c = cmp_terms(a->terms, b->terms)) return c;
  if (a->vars != b->vars) return a->vars < b->vars ? -1 : 1;
  if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (int c = compare(a->kids[i], b->kids[i])) return c;
  return 0;
}

bool equal(const Formula& a, const Formula& b) { return compare(a, b) == 0; }

Formula f_true() {
  static const Formula t = make(Node{Kind::True, {}, {}, {}, {}});
  return t;
}

Formula f_false() {
  static const Formula f = make(Node{Kind::False, {}, {}, {}, {}});
  return f;
}

Formula atom(const std::string& rel, std::vector<Term> args) {
  return make(Node{Kind::Atom, rel, std::move(args), {}, {}});
}

Formula flag(const std::string& name) { return atom(name, {}); }

Formula eq(const Term& a, const Term& b) {
  if (a == b) return f_true();
  // Equality is symmetric; store the smaller term first.
  if (b < a) return make(Node{Kind::Eq, {}, {b, a}, {}, {}});
  return make(Node{Kind::Eq, {}, {a, b}, {}, {}});
}

Formula neq(const Term& a, const Term& b) { return neg(eq(a, b)); }

Formula neg(const Formula& f) {
  if (f->kind == Kind::True) return f_false();
  if (f->kind == Kind::False) return f_true();
  if (f->kind == Kind::Not) return f->kids[0];
  return make(Node{Kind::Not, {}, {}, {f}, {}});
}

namespace {

Formula nary(Kind k, std::vector<Formula> fs) {
  Kind unit = k == Kind::And ? Kind::True : Kind::False;
  Kind zero = k == Kind::And ? Kind::False : Kind::True;
  std::vector<Formula> flat;
  for (auto& f : fs) {
    if (f->kind == unit) continue;
    if (f->kind == zero) return f;
    if (f->kind == k)
      flat.insert(flat.end(), f->kids.begin(), f->kids.end());
    else
      flat.push_back(f);
  }
  std::sort(flat.begin(), flat.end(), [](const Formula& a, const Formula& b) { return compare(a, b) < 0; });
  flat.erase(std::unique(flat.begin(), flat.end(), [](const Formula& a, const Formula& b) { return equal(a, b); }),
             flat.end());
  if (flat.empty()) return unit == Kind::True ? f_true() : f_false();
  if (flat.size() == 1) return flat[0];
  return make(Node{k, {}, {}, std::move(flat), {}});
}

Formula quant(Kind k, std::vector<std::string> vars, const Formula& body) {
  std::vector<std::string> uniq;
  for (auto& v : vars)
    if (std::find(uniq.begin(), uniq.end(), v) == uniq.end()) uniq.push_back(v);
  if (uniq.empty()) return body;
  return make(Node{k, {}, {}, {body}, std::move(uniq)});
}

}  // namespace

Formula conj(std::vector<Formula> fs) { return nary(Kind::And, std::move(fs)); }
Formula disj(std::vector<Formula> fs) { return nary(Kind::Or, std::move(fs)); }
Formula conj(const Formula& a, const Formula& b) { return conj(std::vector<Formula>{a, b}); }
Formula disj(const Formula& a, const Formula& b) { return disj(std::vector<Formula>{a, b}); }
Formula implies(const Formula& a, const Formula& b) { return disj(neg(a), b); }
Formula exists(std::vector<std::string> vars, const Formula& body) { return quant(Kind::Exists, std::move(vars), body); }
Formula forall(std::vector<std::string> vars, const Formula& body) { return quant(Kind::Forall, std::move(vars), body); }
Formula exists(const std::string& v, const Formula& body) { return exists(std::vector<std::string>{v}, body); }
Formula forall(const std::string& v, const Formula& body) { return forall(std::vector<std::string>{v}, body); }

Signature signature_of(const RelationalStructure& a) {
  Signature s;
  for (const auto& [name, rel] : a.relations) s.relations[name] = rel.arity;
  for (const auto& [name, f] : a.functions) s.functions.insert(name);
  return s;
}

Signature graph_signature(const std::string& edge) {
  Signature s;
  s.relations[edge] = 2;
  return s;
}

Signature forest_signature(const RootedForest& f, const std::string& fn) {
  Signature s;
  s.functions.insert(fn);
  for (const auto& [name, set] : f.colors) s.relations[name] = 1;
  for (const auto& [name, v] : f.flags) s.relations[name] = 0;
  return s;
}

Signature merge(const Signature& a, const Signature& b) {
  Signature s = a;
  for (const auto& [name, ar] : b.relations) {
    auto it = s.relations.find(name);
    if (it != s.relations.end() && it->second != ar) throw InputError("arity clash for " + name);
    if (s.functions.count(name)) throw InputError(name + " is both a function and a relation");
    s.relations[name] = ar;
  }
  for (const auto& f : b.functions) {
    if (s.relations.count(f)) throw InputError(f + " is both a function and a relation");
    s.functions.insert(f);
  }
  return s;
}

// ---------------------------------------------------------------- parsing

namespace {

struct Token {
  enum Type { LP, RP, WORD, END } type;
  std::string text;
  size_t pos;
};

class Parser {
 public:
  Parser(const std::string& s, const Signature& sig) : sig_(sig) { lex(s); }

  Formula run() {
    Formula f = form();
    if (peek().type != Token::END) fail("trailing input", peek().pos);
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, size_t pos) const {
    throw InputError("formula: " + msg + " at offset " + std::to_string(pos));
  }

  void lex(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '(') {
        toks_.push_back({Token::LP, "(", i++});
      } else if (c == ')') {
        toks_.push_back({Token::RP, ")", i++});
      } else {
        size_t st = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')') ++i;
        toks_.push_back({Token::WORD, s.substr(st, i - st), st});
      }
    }
    toks_.push_back({Token::END, "", s.size()});
  }

  const Token& peek() const { return toks_[at_]; }
  const Token& take() { return toks_[at_ == toks_.size() - 1 ? at_ : at_++]; }

  void expect(Token::Type t, const char* what) {
    const Token& k = take();
    if (k.type != t) fail(std::string("expected ") + what, k.pos);
  }

  static bool is_ident(const std::string& w) {
    if (w.empty() || !(std::isalpha(static_cast<unsigned char>(w[0])) || w[0] == '_')) return false;
    for (char c : w)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\'')) return false;
    return true;
  }

  Formula form() {
    const Token& t = take();
    if (t.type == Token::WORD) {
      if (t.text == "true") return f_true();
      if (t.text == "false") return f_false();
      auto it = sig_.relations.find(t.text);
      if (it == sig_.relations.end()) fail("unknown symbol `" + t.text + "`", t.pos);
      if (it->second != 0) fail("relation `" + t.text + "` used as a flag", t.pos);
      return flag(t.text);
    }
    if (t.type != Token::LP) fail("expected formula", t.pos);
    const Token& head = take();
    if (head.type != Token::WORD) fail("expected operator", head.pos);
    const std::string& h = head.text;
    Formula out;
    if (h == "not") {
      out = neg(form());
    } else if (h == "and" || h == "or") {
      std::vector<Formula> kids;
      while (peek().type != Token::RP) {
        if (peek().type == Token::END) fail("unterminated connective", peek().pos);
        kids.push_back(form());
      }
      if (kids.empty()) fail("empty connective", head.pos);
      out = h == "and" ? conj(std::move(kids)) : disj(std::move(kids));
    } else if (h == "exists" || h == "forall") {
      expect(Token::LP, "variable list");
      std::vector<std::string> vars;
      while (peek().type == Token::WORD) {
        const Token& v = take();
        if (!is_ident(v.text) || sig_.has(v.text) || v.text == "true" || v.text == "false")
          fail("bad variable name `" + v.text + "`", v.pos);
        vars.push_back(v.text);
      }
      if (vars.empty()) fail("empty variable list", peek().pos);
      expect(Token::RP, "`)` after variable list");
      Formula body = form();
      out = h == "exists" ? exists(vars, body) : forall(vars, body);
    } else if (h == "=") {
      Term a = term(), b = term();
      out = eq(a, b);
    } else {
      auto it = sig_.relations.find(h);
      if (it == sig_.relations.end()) fail("unknown symbol `" + h + "`", head.pos);
      std::vector<Term> args;
      while (peek().type != Token::RP) {
        if (peek().type == Token::END) fail("unterminated atom", peek().pos);
        args.push_back(term());
      }
      if (static_cast<int>(args.size()) != it->second)
        fail("arity mismatch for `" + h + "`: expected " + std::to_string(it->second) + ", got " +
                 std::to_string(args.size()),
             head.pos);
      out = atom(h, std::move(args));
    }
    expect(Token::RP, "`)`");
    return out;
  }

  Term term() {
    const Token& t = take();
    if (t.type == Token::WORD) {
      if (!is_ident(t.text) || sig_.has(t.text) || t.text == "true" || t.text == "false")
        fail("expected variable, got `" + t.text + "`", t.pos);
      return Term(t.text);
    }
    if (t.type != Token::LP) fail("expected term", t.pos);
    const Token& head = take();
    if (head.type != Token::WORD) fail("expected function symbol", head.pos);
    std::string name = head.text;
    int times = 1;
    auto caret = name.find('^');
    if (caret != std::string::npos) {
      std::string num = name.substr(caret + 1);
      name.resize(caret);
      if (num.empty() || !std::all_of(num.begin(), num.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        fail("bad exponent", head.pos);
      times = std::stoi(num);
    }
    if (!sig_.functions.count(name)) fail("unknown function `" + name + "`", head.pos);
    Term inner = term();
    expect(Token::RP, "`)` after term");
    return apply_fn(name, times, std::move(inner));
  }

  const Signature& sig_;
  std::vector<Token> toks_;
  size_t at_ = 0;
};

void print_rec(const Formula& f, std::string& out) {
  switch (f->kind) {
    case Kind::True: out += "true"; return;
    case Kind::False: out += "false"; return;
    case Kind::Atom:
      if (f->terms.empty()) {
        out += f->name;
        return;
      }
      out += "(" + f->name;
      for (const auto& t : f->terms) out += " " + print_term(t);
      out += ")";
      return;
    case Kind::Eq: out += "(= " + print_term(f->terms[0]) + " " + print_term(f->terms[1]) + ")"; return;
    case Kind::Not:
      out += "(not ";
      print_rec(f->kids[0], out);
      out += ")";
      return;
    case Kind::And:
    case Kind::Or:
      out += f->kind == Kind::And ? "(and" : "(or";
      for (const auto& k : f->kids) {
        out += " ";
        print_rec(k, out);
      }
      out += ")";
      return;
    case Kind::Exists:
    case Kind::Forall:
      out += f->kind == Kind::Exists ? "(exists (" : "(forall (";
      for (size_t i = 0; i < f->vars.size(); ++i) out += (i ? " " : "") + f->vars[i];
      out += ") ";
      print_rec(f->kids[0], out);
      out += ")";
      return;
  }
}

}  // namespace

Formula parse_formula(const std::string& text, const Signature& sig) { return Parser(text, sig).run(); }

std::string print_term(const Term& t) {
  std::string s = t.var;
  size_t i = 0;
  while (i < t.funcs.size()) {
    size_t j = i;
    while (j < t.funcs.size() && t.funcs[j] == t.funcs[i]) ++j;
    s = "(" + t.funcs[i] + "^" + std::to_string(j - i) + " " + s + ")";
    i = j;
  }
  return s;
}

std::string print_formula(const Formula& f) {
  std::string out;
  print_rec(f, out);
  return out;
}

// ---------------------------------------------------------------- queries

namespace {

void free_rec(const Formula& f, std::multiset<std::string>& bound, std::set<std::string>& out) {
  switch (f->kind) {
    case Kind::Atom:
    case Kind::Eq:
      for (const auto& t : f->terms)
        if (!bound.count(t.var)) out.insert(t.var);
      return;
    case Kind::Exists:
    case Kind::Forall:
      for (const auto& v : f->vars) bound.insert(v);
      free_rec(f->kids[0], bound, out);
      for (const auto& v : f->vars) bound.erase(bound.find(v));
      return;
    default:
      for (const auto& k : f->kids) free_rec(k, bound, out);
  }
}

}  // namespace

std::set<std::string> free_vars(const Formula& f) {
  std::multiset<std::string> bound;
  std::set<std::string> out;
  free_rec(f, bound, out);
  return out;
}

std::set<std::string> all_vars(const Formula& f) {
  std::set<std::string> out;
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    for (const auto& t : g->terms) out.insert(t.var);
    for (const auto& v : g->vars) out.insert(v);
    for (const auto& k : g->kids) rec(k);
  };
  rec(f);
  return out;
}

Signature symbols_of(const Formula& f) {
  Signature s;
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    if (g->kind == Kind::Atom) s.relations[g->name] = static_cast<int>(g->terms.size());
    for (const auto& t : g->terms)
      for (const auto& fn : t.funcs) s.functions.insert(fn);
    for (const auto& k : g->kids) rec(k);
  };
  rec(f);
  return s;
}

std::size_t formula_size(const Formula& f) {
  std::size_t n = 1 + f->terms.size() + f->vars.size();
  for (const auto& k : f->kids) n += formula_size(k);
  return n;
}

std::set<std::vector<std::string>> function_words(const Formula& f) {
  std::set<std::vector<std::string>> out{{}};
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    for (const auto& t : g->terms)
      for (size_t i = 0; i <= t.funcs.size(); ++i)
        out.insert(std::vector<std::string>(t.funcs.begin(), t.funcs.begin() + static_cast<long>(i)));
    for (const auto& k : g->kids) rec(k);
  };
  rec(f);
  return out;
}

Formula nnf(const Formula& f) {
  std::function<Formula(const Formula&, bool)> rec = [&](const Formula& g, bool negate) -> Formula {
    switch (g->kind) {
      case Kind::True: return negate ? f_false() : f_true();
      case Kind::False: return negate ? f_true() : f_false();
      case Kind::Atom:
      case Kind::Eq: return negate ? neg(g) : g;
      case Kind::Not: return rec(g->kids[0], !negate);
      case Kind::And:
      case Kind::Or: {
        std::vector<Formula> kids;
        for (const auto& k : g->kids) kids.push_back(rec(k, negate));
        bool is_and = (g->kind == Kind::And) != negate;
        return is_and ? conj(std::move(kids)) : disj(std::move(kids));
      }
      case Kind::Exists:
      case Kind::Forall: {
        bool is_ex = (g->kind == Kind::Exists) != negate;
        Formula body = rec(g->kids[0], negate);
        return is_ex ? exists(g->vars, body) : forall(g->vars, body);
      }
    }
    return g;
  };
  return rec(f, false);
}

int quantifier_rank(const Formula& f) {
  int best = 0;
  for (const auto& k : f->kids) best = std::max(best, quantifier_rank(k));
  if (f->kind == Kind::Exists || f->kind == Kind::Forall) best += static_cast<int>(f->vars.size());
  return best;
}

int alternation_rank(const Formula& f) {
  std::function<int(const Formula&, int)> rec = [&](const Formula& g, int last) -> int {
    int here = 0, mode = last;
    if (g->kind == Kind::Exists || g->kind == Kind::Forall) {
      int q = g->kind == Kind::Exists ? 1 : 2;
      if (last != 0 && last != q) here = 1;
      mode = q;
    }
    int best = 0;
    for (const auto& k : g->kids) best = std::max(best, rec(k, mode));
    return here + best;
  };
  return rec(nnf(f), 0);
}

namespace {

// Returns {blocks, max block size}.
std::pair<int, int> block_profile(const Formula& g) {
  if (g->kind == Kind::Exists || g->kind == Kind::Forall) {
    int size = 0;
    Formula cur = g;
    while (cur->kind == g->kind) {
      size += static_cast<int>(cur->vars.size());
      cur = cur->kids[0];
    }
    auto [b, s] = block_profile(cur);
    return {b + 1, std::max(s, size)};
  }
  int b = 0, s = 0;
  for (const auto& k : g->kids) {
    auto [kb, ks] = block_profile(k);
    b = std::max(b, kb);
    s = std::max(s, ks);
  }
  return {b, s};
}

}  // namespace

std::optional<int> batched_qrank(const Formula& f, int m) {
  auto [blocks, size] = block_profile(nnf(f));
  if (size > m) return std::nullopt;
  return blocks;
}

int max_block_size(const Formula& f) { return block_profile(nnf(f)).second; }

std::string FreshNames::next(const std::string& base) {
  while (true) {
    std::string name = base + "_" + std::to_string(++counter_[base]);
    if (avoid_.insert(name).second) return name;
  }
}

namespace {

Term subst_term(const Term& t, const std::map<std::string, Term>& sub) {
  auto it = sub.find(t.var);
  if (it == sub.end()) return t;
  Term out = it->second;
  out.funcs.insert(out.funcs.end(), t.funcs.begin(), t.funcs.end());
  return out;
}

Formula rebuild(const Formula& g, std::vector<Term> terms, std::vector<Formula> kids, std::vector<std::string> vars) {
  switch (g->kind) {
    case Kind::True:
    case Kind::False: return g;
    case Kind::Atom: return atom(g->name, std::move(terms));
    case Kind::Eq: return eq(terms[0], terms[1]);
    case Kind::Not: return neg(kids[0]);
    case Kind::And: return conj(std::move(kids));
    case Kind::Or: return disj(std::move(kids));
    case Kind::Exists: return exists(std::move(vars), kids[0]);
    case Kind::Forall: return forall(std::move(vars), kids[0]);
  }
  return g;
}

Formula subst_rec(const Formula& g, std::map<std::string, Term> sub, FreshNames& fresh) {
  if (sub.empty()) return g;
  if (g->kind == Kind::Atom || g->kind == Kind::Eq) {
    std::vector<Term> ts;
    for (const auto& t : g->terms) ts.push_back(subst_term(t, sub));
    return rebuild(g, std::move(ts), {}, {});
  }
  if (g->kind == Kind::Exists || g->kind == Kind::Forall) {
    for (const auto& v : g->vars) sub.erase(v);
    std::set<std::string> incoming;
    for (const auto& [k, t] : sub) incoming.insert(t.var);
    std::vector<std::string> vars = g->vars;
    for (auto& v : vars) {
      if (!incoming.count(v)) continue;
      std::string nv = fresh.next(v);
      sub[v] = Term(nv);
      v = nv;
    }
    return rebuild(g, {}, {subst_rec(g->kids[0], sub, fresh)}, std::move(vars));
  }
  std::vector<Formula> kids;
  for (const auto& k : g->kids) kids.push_back(subst_rec(k, sub, fresh));
  return rebuild(g, {}, std::move(kids), {});
}

}  // namespace

Formula substitute(const Formula& f, const std::map<std::string, Term>& sub) {
  std::set<std::string> avoid = all_vars(f);
  for (const auto& [k, t] : sub) {
    avoid.insert(k);
    avoid.insert(t.var);
  }
  FreshNames fresh(avoid);
  return subst_rec(f, sub, fresh);
}

Formula rename_bound(const Formula& f, FreshNames& fresh) {
  std::function<Formula(const Formula&, const std::map<std::string, Term>&)> rec =
      [&](const Formula& g, const std::map<std::string, Term>& sub) -> Formula {
    if (g->kind == Kind::Atom || g->kind == Kind::Eq) {
      std::vector<Term> ts;
      for (const auto& t : g->terms) ts.push_back(subst_term(t, sub));
      return rebuild(g, std::move(ts), {}, {});
    }
    if (g->kind == Kind::Exists || g->kind == Kind::Forall) {
      auto inner = sub;
      std::vector<std::string> vars;
      for (const auto& v : g->vars) {
        vars.push_back(fresh.next(v));
        inner[v] = Term(vars.back());
      }
      return rebuild(g, {}, {rec(g->kids[0], inner)}, std::move(vars));
    }
    std::vector<Formula> kids;
    for (const auto& k : g->kids) kids.push_back(rec(k, sub));
    return rebuild(g, {}, std::move(kids), {});
  };
  fresh.reserve(all_vars(f));
  return rec(f, {});
}

}  // namespace sparsefo
