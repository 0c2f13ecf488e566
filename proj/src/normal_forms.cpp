#include <algorithm>
#include <functional>

#include "sparsefo/error.hpp"
#include "sparsefo/logic.hpp"

namespace sparsefo {

namespace {

struct Block {
  Kind kind;
  std::vector<std::string> vars;
};

struct Prenex {
  std::vector<Block> blocks;
  Formula matrix;
};

Kind flip(Kind k) { return k == Kind::Exists ? Kind::Forall : Kind::Exists; }

// Interleaves the prefixes of the children so that each child's blocks keep their order.
std::vector<Block> merge_prefixes(const std::vector<Prenex>& parts, Kind start) {
  std::vector<Block> out;
  for (const auto& p : parts) {
    size_t pos = 0;
    for (const auto& b : p.blocks) {
      while (true) {
        Kind k = pos % 2 == 0 ? start : flip(start);
        if (k == b.kind) break;
        ++pos;
      }
      while (out.size() <= pos) out.push_back({out.size() % 2 == 0 ? start : flip(start), {}});
      out[pos].vars.insert(out[pos].vars.end(), b.vars.begin(), b.vars.end());
      ++pos;
    }
  }
  return out;
}

// Input in NNF with all bound variables distinct and distinct from free ones.
Prenex prenex(const Formula& g) {
  switch (g->kind) {
    case Kind::Exists:
    case Kind::Forall: {
      Prenex inner = prenex(g->kids[0]);
      if (!inner.blocks.empty() && inner.blocks[0].kind == g->kind) {
        inner.blocks[0].vars.insert(inner.blocks[0].vars.begin(), g->vars.begin(), g->vars.end());
      } else {
        inner.blocks.insert(inner.blocks.begin(), Block{g->kind, g->vars});
      }
      return inner;
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<Prenex> parts;
      std::vector<Formula> mats;
      for (const auto& k : g->kids) {
        parts.push_back(prenex(k));
        mats.push_back(parts.back().matrix);
      }
      auto a = merge_prefixes(parts, Kind::Exists);
      auto b = merge_prefixes(parts, Kind::Forall);
      Prenex out;
      out.blocks = b.size() < a.size() ? b : a;
      out.matrix = g->kind == Kind::And ? conj(std::move(mats)) : disj(std::move(mats));
      return out;
    }
    default: return {{}, g};
  }
}

Formula build(const Prenex& p) {
  Formula f = p.matrix;
  for (auto it = p.blocks.rbegin(); it != p.blocks.rend(); ++it)
    f = it->kind == Kind::Exists ? exists(it->vars, f) : forall(it->vars, f);
  return f;
}

bool quantifier_free(const Formula& f) {
  if (f->kind == Kind::Exists || f->kind == Kind::Forall) return false;
  for (const auto& k : f->kids)
    if (!quantifier_free(k)) return false;
  return true;
}

}  // namespace

bool is_prenex(const Formula& f) {
  Formula cur = f;
  while (cur->kind == Kind::Exists || cur->kind == Kind::Forall) cur = cur->kids[0];
  return quantifier_free(cur);
}

Formula to_bsigma(const Formula& f, int q) {
  if (q < 1) throw PreconditionError("to_bsigma needs q >= 1");
  if (alternation_rank(f) > q - 1) throw PreconditionError("alternation rank exceeds q-1");
  FreshNames fresh(free_vars(f));
  Formula g = rename_bound(nnf(f), fresh);
  std::function<Formula(const Formula&)> rec = [&](const Formula& h) -> Formula {
    if (quantifier_free(h)) return h;
    if (h->kind == Kind::And || h->kind == Kind::Or) {
      std::vector<Formula> kids;
      for (const auto& k : h->kids) kids.push_back(rec(k));
      return h->kind == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
    }
    Prenex p = prenex(h);
    if (p.blocks.empty() || p.blocks[0].kind == Kind::Exists) return build(p);
    // A universal prefix is the negation of the dual existential prefix.
    Prenex d;
    for (const auto& b : p.blocks) d.blocks.push_back({flip(b.kind), b.vars});
    d.matrix = nnf(neg(p.matrix));
    return neg(build(d));
  };
  return rec(g);
}

namespace {

class Normalizer {
 public:
  explicit Normalizer(int max_atoms) : max_atoms_(max_atoms) {}

  Formula norm(const Formula& g) {
    switch (g->kind) {
      case Kind::True:
      case Kind::False:
      case Kind::Atom:
      case Kind::Eq: return g;
      case Kind::Exists:
      case Kind::Forall: return norm_block(g);
      default: return norm_boolean(g);
    }
  }

 private:
  static int rank_of(const Formula& f) { return batched_qrank(f, 1 << 20).value_or(0); }

  Formula norm_block(const Formula& g) {
    std::vector<std::string> vars;
    Formula cur = g;
    while (cur->kind == g->kind) {
      vars.insert(vars.end(), cur->vars.begin(), cur->vars.end());
      cur = cur->kids[0];
    }
    // Later occurrences shadow earlier ones; keep the innermost binding only.
    std::vector<std::string> uniq;
    for (auto it = vars.rbegin(); it != vars.rend(); ++it)
      if (std::find(uniq.begin(), uniq.end(), *it) == uniq.end()) uniq.insert(uniq.begin(), *it);
    Formula body = norm(cur);
    int level = rank_of(body) + 1;
    std::map<std::string, Term> sub;
    std::vector<std::string> names;
    for (size_t i = 0; i < uniq.size(); ++i) {
      names.push_back("_q" + std::to_string(level) + "_" + std::to_string(i));
      sub[uniq[i]] = Term(names.back());
    }
    body = substitute(body, sub);
    return g->kind == Kind::Exists ? exists(names, body) : forall(names, body);
  }

  void collect(const Formula& g, std::vector<Formula>& atoms) {
    if (g->kind == Kind::Not || g->kind == Kind::And || g->kind == Kind::Or) {
      for (const auto& k : g->kids) collect(k, atoms);
      return;
    }
    if (g->kind == Kind::True || g->kind == Kind::False) return;
    atoms.push_back(norm(g));
  }

  bool truth(const Formula& g, const std::vector<Formula>& atoms, unsigned mask) {
    switch (g->kind) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::Not: return !truth(g->kids[0], atoms, mask);
      case Kind::And:
        for (const auto& k : g->kids)
          if (!truth(k, atoms, mask)) return false;
        return true;
      case Kind::Or:
        for (const auto& k : g->kids)
          if (truth(k, atoms, mask)) return true;
        return false;
      default: {
        Formula n = norm(g);
        for (size_t i = 0; i < atoms.size(); ++i)
          if (equal(atoms[i], n)) return (mask >> i) & 1U;
        throw std::logic_error("atom missing from table");
      }
    }
  }

  Formula norm_boolean(const Formula& g) {
    std::vector<Formula> atoms;
    collect(g, atoms);
    std::sort(atoms.begin(), atoms.end(), [](const Formula& a, const Formula& b) { return compare(a, b) < 0; });
    atoms.erase(std::unique(atoms.begin(), atoms.end(), [](const Formula& a, const Formula& b) { return equal(a, b); }),
                atoms.end());
    if (static_cast<int>(atoms.size()) > max_atoms_)
      throw BudgetExceeded("boolean combination over " + std::to_string(atoms.size()) + " subformulas");
    std::vector<Formula> terms;
    for (unsigned mask = 0; mask < (1U << atoms.size()); ++mask) {
      if (!truth(g, atoms, mask)) continue;
      std::vector<Formula> lits;
      for (size_t i = 0; i < atoms.size(); ++i) lits.push_back((mask >> i) & 1U ? atoms[i] : neg(atoms[i]));
      terms.push_back(conj(std::move(lits)));
    }
    return disj(std::move(terms));
  }

  int max_atoms_;
};

}  // namespace

Formula normalize_batched(const Formula& f, int m, int k, const Signature& sig, int max_atoms) {
  if (!batched_qrank(f, m)) throw PreconditionError("formula is not " + std::to_string(m) + "-batched");
  if (static_cast<int>(free_vars(f).size()) > k) throw PreconditionError("too many free variables");
  Signature used = symbols_of(f);
  for (const auto& [name, ar] : used.relations) {
    auto it = sig.relations.find(name);
    if (it == sig.relations.end() || it->second != ar) throw InputError("symbol outside signature: " + name);
  }
  for (const auto& fn : used.functions)
    if (!sig.functions.count(fn)) throw InputError("function outside signature: " + fn);
  return Normalizer(max_atoms).norm(f);
}

}  // namespace sparsefo
