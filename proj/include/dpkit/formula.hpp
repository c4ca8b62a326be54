#pragma once

// Three-sorted Denef-Pas syntax: valued field (VF), residue field (RF) and
// value group (VG). Terms and formulas are immutable shared trees.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dpkit/errors.hpp"

namespace dpkit {

enum class Sort { VF, RF, VG };

inline const char* to_string(Sort s) {
  switch (s) {
    case Sort::VF: return "VF";
    case Sort::RF: return "RF";
    case Sort::VG: return "VG";
  }
  return "?";
}

inline std::optional<Sort> parse_sort(const std::string& s) {
  if (s == "VF") return Sort::VF;
  if (s == "RF") return Sort::RF;
  if (s == "VG") return Sort::VG;
  return std::nullopt;
}

enum class TermKind { Var, Int, Const, Add, Sub, Neg, Mul, Ord, Ac };

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
  TermKind kind;
  Sort sort;
  std::string name;          // Var, Const
  std::int64_t value = 0;    // Int
  std::vector<Term> args;
};

enum class FormulaKind { True, False, Eq, Geq, Congr, Not, And, Or, Exists, Forall };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FormulaKind kind;
  Sort sort = Sort::VG;      // Eq: common sort of both sides; quantifiers: bound sort
  std::string var;           // quantifiers
  std::int64_t modulus = 0;  // Congr
  Term lhs, rhs;             // atoms
  std::vector<Formula> kids;
};

using Signature = std::vector<std::pair<std::string, Sort>>;

// ---- term builders (no sort checking; see sort_check) --------------------

namespace term {

inline Term make(TermKind k, Sort s, std::vector<Term> args = {}, std::string name = {}, std::int64_t value = 0) {
  return std::make_shared<const TermNode>(TermNode{k, s, std::move(name), value, std::move(args)});
}
inline Term var(const std::string& n, Sort s) { return make(TermKind::Var, s, {}, n); }
inline Term lit(std::int64_t v, Sort s) { return make(TermKind::Int, s, {}, {}, v); }
inline Term zero(Sort s) { return lit(0, s); }
inline Term one(Sort s) { return lit(1, s); }
inline Term constant(const std::string& n) { return make(TermKind::Const, Sort::VF, {}, n); }
inline Term add(Term a, Term b) { Sort s = a->sort; return make(TermKind::Add, s, {std::move(a), std::move(b)}); }
inline Term sub(Term a, Term b) { Sort s = a->sort; return make(TermKind::Sub, s, {std::move(a), std::move(b)}); }
inline Term neg(Term a) { Sort s = a->sort; return make(TermKind::Neg, s, {std::move(a)}); }
inline Term mul(Term a, Term b) {
  Sort s = a->kind == TermKind::Int ? b->sort : a->sort;
  return make(TermKind::Mul, s, {std::move(a), std::move(b)});
}
inline Term ord(Term a) { return make(TermKind::Ord, Sort::VG, {std::move(a)}); }
inline Term ac(Term a) { return make(TermKind::Ac, Sort::RF, {std::move(a)}); }

}  // namespace term

// ---- formula builders ----------------------------------------------------

namespace fml {

inline Formula make(FormulaNode n) { return std::make_shared<const FormulaNode>(std::move(n)); }
inline Formula truth() { static const Formula t = make({FormulaKind::True, Sort::VG, {}, 0, nullptr, nullptr, {}}); return t; }
inline Formula falsity() { static const Formula f = make({FormulaKind::False, Sort::VG, {}, 0, nullptr, nullptr, {}}); return f; }
inline Formula eq(Term a, Term b) {
  Sort s = a->sort;
  return make({FormulaKind::Eq, s, {}, 0, std::move(a), std::move(b), {}});
}
inline Formula geq(Term a, Term b) { return make({FormulaKind::Geq, Sort::VG, {}, 0, std::move(a), std::move(b), {}}); }
inline Formula congr(Term a, Term b, std::int64_t d) {
  return make({FormulaKind::Congr, Sort::VG, {}, d, std::move(a), std::move(b), {}});
}
inline Formula lnot(Formula f) { return make({FormulaKind::Not, Sort::VG, {}, 0, nullptr, nullptr, {std::move(f)}}); }
inline Formula land(std::vector<Formula> ks) { return make({FormulaKind::And, Sort::VG, {}, 0, nullptr, nullptr, std::move(ks)}); }
inline Formula lor(std::vector<Formula> ks) { return make({FormulaKind::Or, Sort::VG, {}, 0, nullptr, nullptr, std::move(ks)}); }
inline Formula land(Formula a, Formula b) { return land(std::vector<Formula>{std::move(a), std::move(b)}); }
inline Formula lor(Formula a, Formula b) { return lor(std::vector<Formula>{std::move(a), std::move(b)}); }
inline Formula implies(Formula a, Formula b) { return lor(lnot(std::move(a)), std::move(b)); }
inline Formula exists(const std::string& v, Sort s, Formula body) {
  return make({FormulaKind::Exists, s, v, 0, nullptr, nullptr, {std::move(body)}});
}
inline Formula forall(const std::string& v, Sort s, Formula body) {
  return make({FormulaKind::Forall, s, v, 0, nullptr, nullptr, {std::move(body)}});
}

}  // namespace fml

inline bool is_atom(const Formula& f) {
  return f->kind == FormulaKind::Eq || f->kind == FormulaKind::Geq || f->kind == FormulaKind::Congr;
}
inline bool is_quantifier(const Formula& f) {
  return f->kind == FormulaKind::Exists || f->kind == FormulaKind::Forall;
}

// ---- printing ------------------------------------------------------------

namespace detail {

inline int term_prec(const Term& t) {
  switch (t->kind) {
    case TermKind::Add: case TermKind::Sub: return 1;
    case TermKind::Mul: return 2;
    case TermKind::Neg: return 3;
    default: return 4;
  }
}

inline std::string print_term(const Term& t);

inline std::string wrap(const Term& t, int min_prec) {
  std::string s = print_term(t);
  return term_prec(t) < min_prec ? "(" + s + ")" : s;
}

inline std::string print_term(const Term& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::Const: return t->name;
    case TermKind::Int: return t->value < 0 ? "(" + std::to_string(t->value) + ")" : std::to_string(t->value);
    case TermKind::Add: return wrap(t->args[0], 1) + " + " + wrap(t->args[1], 2);
    case TermKind::Sub: return wrap(t->args[0], 1) + " - " + wrap(t->args[1], 2);
    case TermKind::Mul: return wrap(t->args[0], 2) + "*" + wrap(t->args[1], 3);
    case TermKind::Neg:
      // "-(3)" keeps a negated literal distinct from the literal -3 on reparse.
      if (t->args[0]->kind == TermKind::Int) return "-(" + print_term(t->args[0]) + ")";
      return "-" + wrap(t->args[0], 3);
    case TermKind::Ord: return "ord(" + print_term(t->args[0]) + ")";
    case TermKind::Ac: return "ac(" + print_term(t->args[0]) + ")";
  }
  return "?";
}

/// True when the term contains something that fixes its sort on reparse.
inline bool sort_determined(const Term& t) {
  switch (t->kind) {
    case TermKind::Var: case TermKind::Const: case TermKind::Ord: case TermKind::Ac: return true;
    case TermKind::Int: return false;
    default: return std::any_of(t->args.begin(), t->args.end(), sort_determined);
  }
}

// Precedence levels: 0 quantifier/implication context, 1 or, 2 and, 3 unary.
inline std::string print_formula(const Formula& f, int ctx) {
  auto paren = [&](std::string s, int mine) { return mine < ctx ? "(" + s + ")" : s; };
  switch (f->kind) {
    case FormulaKind::True: return "true";
    case FormulaKind::False: return "false";
    case FormulaKind::Eq: {
      std::string l = print_term(f->lhs);
      if (!sort_determined(f->lhs) && !sort_determined(f->rhs) && f->sort != Sort::VG)
        l = "(" + l + "):" + to_string(f->sort);
      return l + " == " + print_term(f->rhs);
    }
    case FormulaKind::Geq: return print_term(f->lhs) + " >= " + print_term(f->rhs);
    case FormulaKind::Congr:
      return "congr(" + print_term(f->lhs) + ", " + print_term(f->rhs) + ", " + std::to_string(f->modulus) + ")";
    case FormulaKind::Not:
      if (is_atom(f->kids[0])) return "!(" + print_formula(f->kids[0], 0) + ")";
      return "!" + print_formula(f->kids[0], 3);
    case FormulaKind::And:
    case FormulaKind::Or: {
      if (f->kids.empty()) return f->kind == FormulaKind::And ? "true" : "false";
      bool conj = f->kind == FormulaKind::And;
      int mine = conj ? 2 : 1;
      std::string s;
      for (std::size_t i = 0; i < f->kids.size(); ++i) {
        if (i) s += conj ? " && " : " || ";
        s += print_formula(f->kids[i], mine + 1);
      }
      return f->kids.size() == 1 ? print_formula(f->kids[0], ctx) : paren(s, mine);
    }
    case FormulaKind::Exists:
    case FormulaKind::Forall:
      return paren(std::string(f->kind == FormulaKind::Exists ? "exists " : "forall ") + f->var + ":" +
                       to_string(f->sort) + ". " + print_formula(f->kids[0], 0),
                   0);
  }
  return "?";
}

}  // namespace detail

inline std::string print(const Term& t) { return detail::print_term(t); }
inline std::string print(const Formula& f) { return detail::print_formula(f, 0); }

// ---- free variables and signatures --------------------------------------

namespace detail {

inline void term_vars(const Term& t, const std::set<std::string>& bound, Signature& out, std::set<std::string>& seen) {
  if (t->kind == TermKind::Var) {
    if (!bound.count(t->name) && !seen.count(t->name)) {
      seen.insert(t->name);
      out.emplace_back(t->name, t->sort);
    }
    return;
  }
  for (auto& a : t->args) term_vars(a, bound, out, seen);
}

inline void formula_vars(const Formula& f, std::set<std::string>& bound, Signature& out, std::set<std::string>& seen) {
  if (is_atom(f)) {
    term_vars(f->lhs, bound, out, seen);
    term_vars(f->rhs, bound, out, seen);
    return;
  }
  if (is_quantifier(f)) {
    bool had = bound.count(f->var) > 0;
    bound.insert(f->var);
    formula_vars(f->kids[0], bound, out, seen);
    if (!had) bound.erase(f->var);
    return;
  }
  for (auto& k : f->kids) formula_vars(k, bound, out, seen);
}

}  // namespace detail

/// Free variables in order of first occurrence.
inline Signature free_signature(const Formula& f) {
  Signature out;
  std::set<std::string> bound, seen;
  detail::formula_vars(f, bound, out, seen);
  return out;
}

inline Signature term_signature(const Term& t) {
  Signature out;
  std::set<std::string> seen;
  detail::term_vars(t, {}, out, seen);
  return out;
}

inline std::set<std::string> free_names(const Formula& f) {
  std::set<std::string> s;
  for (auto& [n, _] : free_signature(f)) s.insert(n);
  return s;
}

inline void collect_constants(const Term& t, std::set<std::string>& out) {
  if (t->kind == TermKind::Const) out.insert(t->name);
  for (auto& a : t->args) collect_constants(a, out);
}

inline void collect_constants(const Formula& f, std::set<std::string>& out) {
  if (is_atom(f)) {
    collect_constants(f->lhs, out);
    collect_constants(f->rhs, out);
  }
  for (auto& k : f->kids) collect_constants(k, out);
}

// ---- sort checking -------------------------------------------------------

namespace detail {

inline void check_term(const Term& t, std::map<std::string, Sort>& vars) {
  auto err = [&](const std::string& msg) { fail(ErrorKind::SortError, msg + " in '" + print(t) + "'"); };
  switch (t->kind) {
    case TermKind::Var: {
      auto [it, fresh] = vars.emplace(t->name, t->sort);
      if (!fresh && it->second != t->sort)
        err("variable '" + t->name + "' used as " + to_string(t->sort) + " and " + to_string(it->second));
      return;
    }
    case TermKind::Int: return;
    case TermKind::Const:
      if (t->sort != Sort::VF) err("named constant must be VF-sorted");
      return;
    case TermKind::Ord:
    case TermKind::Ac:
      check_term(t->args[0], vars);
      if (t->args[0]->sort != Sort::VF)
        err(std::string(t->kind == TermKind::Ord ? "ord" : "ac") + " applied to a " + to_string(t->args[0]->sort) + " term");
      if (t->sort != (t->kind == TermKind::Ord ? Sort::VG : Sort::RF)) err("bad result sort");
      return;
    case TermKind::Mul:
      for (auto& a : t->args) {
        check_term(a, vars);
        if (a->sort != t->sort) err("mixed sorts in product");
      }
      if (t->sort == Sort::VG && t->args[0]->kind != TermKind::Int && t->args[1]->kind != TermKind::Int)
        err("value-group product needs a literal factor");
      return;
    default:
      for (auto& a : t->args) {
        check_term(a, vars);
        if (a->sort != t->sort)
          err(std::string("operand of sort ") + to_string(a->sort) + " in " + to_string(t->sort) + " operation");
      }
  }
}

inline void check_formula(const Formula& f, std::map<std::string, Sort>& free_vars,
                          std::map<std::string, Sort> bound) {
  auto err = [&](const std::string& msg) { fail(ErrorKind::SortError, msg + " in '" + print(f) + "'"); };
  if (is_atom(f)) {
    std::map<std::string, Sort> used;
    check_term(f->lhs, used);
    check_term(f->rhs, used);
    if (f->kind == FormulaKind::Eq) {
      if (f->lhs->sort != f->rhs->sort || f->lhs->sort != f->sort) err("equality between different sorts");
    } else {
      if (f->lhs->sort != Sort::VG || f->rhs->sort != Sort::VG)
        err(std::string(f->kind == FormulaKind::Geq ? ">=" : "congr") + " on non-VG terms");
      if (f->kind == FormulaKind::Congr && f->modulus < 2) err("congruence modulus must be >= 2");
    }
    for (auto& [n, s] : used) {
      auto b = bound.find(n);
      if (b != bound.end()) {
        if (b->second != s) err("bound variable '" + n + "' used with sort " + to_string(s));
        continue;
      }
      auto [it, fresh] = free_vars.emplace(n, s);
      if (!fresh && it->second != s) err("free variable '" + n + "' used with two sorts");
    }
    return;
  }
  if (is_quantifier(f)) {
    bound[f->var] = f->sort;
    check_formula(f->kids[0], free_vars, bound);
    return;
  }
  for (auto& k : f->kids) check_formula(k, free_vars, bound);
}

}  // namespace detail

/// Verifies sort discipline and returns the free-variable signature.
inline Signature sort_check(const Formula& f) {
  std::map<std::string, Sort> free_vars;
  detail::check_formula(f, free_vars, {});
  return free_signature(f);
}

// ---- substitution --------------------------------------------------------

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  for (int i = 1;; ++i) {
    std::string c = base + "_" + std::to_string(i);
    if (!avoid.count(c)) return c;
  }
}

namespace detail {

inline Term subst_term(const Term& t, const std::map<std::string, Term>& b) {
  if (t->kind == TermKind::Var) {
    auto it = b.find(t->name);
    return it == b.end() ? t : it->second;
  }
  if (t->args.empty()) return t;
  std::vector<Term> args;
  bool changed = false;
  for (auto& a : t->args) {
    args.push_back(subst_term(a, b));
    changed |= args.back() != a;
  }
  if (!changed) return t;
  return term::make(t->kind, t->sort, std::move(args), t->name, t->value);
}

inline void all_names(const Formula& f, std::set<std::string>& out) {
  for (auto& [n, _] : free_signature(f)) out.insert(n);
  if (is_quantifier(f)) out.insert(f->var);
  for (auto& k : f->kids) all_names(k, out);
}

inline Formula subst(const Formula& f, std::map<std::string, Term> b) {
  if (b.empty()) return f;
  if (is_atom(f)) {
    FormulaNode n = *f;
    n.lhs = subst_term(f->lhs, b);
    n.rhs = subst_term(f->rhs, b);
    return fml::make(std::move(n));
  }
  if (is_quantifier(f)) {
    b.erase(f->var);
    if (b.empty()) return f;
    std::set<std::string> range_free;
    for (auto& [n, t] : b)
      for (auto& [v, _] : term_signature(t)) range_free.insert(v);
    FormulaNode n = *f;
    if (range_free.count(f->var)) {
      std::set<std::string> avoid = range_free;
      all_names(f, avoid);
      for (auto& [k, _] : b) avoid.insert(k);
      std::string renamed = fresh_name(f->var, avoid);
      std::map<std::string, Term> r{{f->var, term::var(renamed, f->sort)}};
      n.var = renamed;
      n.kids = {subst(subst(f->kids[0], r), b)};
    } else {
      n.kids = {subst(f->kids[0], b)};
    }
    return fml::make(std::move(n));
  }
  FormulaNode n = *f;
  for (auto& k : n.kids) k = subst(k, b);
  return fml::make(std::move(n));
}

}  // namespace detail

/// Capture-avoiding simultaneous substitution of free variables.
inline Formula substitute(const Formula& f, const std::map<std::string, Term>& bindings) {
  auto sig = free_signature(f);
  for (auto& [name, t] : bindings) {
    for (auto& [n, s] : sig)
      if (n == name && s != t->sort)
        fail(ErrorKind::SortError, "binding for '" + name + "' has sort " + to_string(t->sort) + ", expected " + to_string(s));
  }
  return detail::subst(f, bindings);
}

inline Term substitute(const Term& t, const std::map<std::string, Term>& bindings) {
  return detail::subst_term(t, bindings);
}

// ---- alpha equivalence ---------------------------------------------------

namespace detail {

using Scope = std::vector<std::pair<std::string, std::string>>;

inline bool alpha_term(const Term& a, const Term& b, const Scope& sc) {
  if (a->kind != b->kind || a->sort != b->sort) return false;
  switch (a->kind) {
    case TermKind::Var: {
      for (auto it = sc.rbegin(); it != sc.rend(); ++it) {
        bool la = it->first == a->name, lb = it->second == b->name;
        if (la || lb) return la && lb;
      }
      return a->name == b->name;
    }
    case TermKind::Const: return a->name == b->name;
    case TermKind::Int: return a->value == b->value;
    default:
      if (a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!alpha_term(a->args[i], b->args[i], sc)) return false;
      return true;
  }
}

inline bool alpha_formula(const Formula& a, const Formula& b, Scope& sc) {
  if (a->kind != b->kind) return false;
  if (is_atom(a)) {
    return a->sort == b->sort && a->modulus == b->modulus && alpha_term(a->lhs, b->lhs, sc) &&
           alpha_term(a->rhs, b->rhs, sc);
  }
  if (is_quantifier(a)) {
    if (a->sort != b->sort) return false;
    sc.emplace_back(a->var, b->var);
    bool r = alpha_formula(a->kids[0], b->kids[0], sc);
    sc.pop_back();
    return r;
  }
  if (a->kids.size() != b->kids.size()) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!alpha_formula(a->kids[i], b->kids[i], sc)) return false;
  return true;
}

// Flattens nested And/Or and drops single-child wrappers so that
// parenthesization differences vanish.
inline Formula canonical(const Formula& f) {
  if (is_atom(f) || f->kind == FormulaKind::True || f->kind == FormulaKind::False) return f;
  FormulaNode n = *f;
  if (f->kind == FormulaKind::And || f->kind == FormulaKind::Or) {
    std::vector<Formula> ks;
    for (auto& k : f->kids) {
      Formula c = canonical(k);
      if (c->kind == f->kind) ks.insert(ks.end(), c->kids.begin(), c->kids.end());
      else ks.push_back(c);
    }
    if (ks.size() == 1) return ks[0];
    n.kids = std::move(ks);
    return fml::make(std::move(n));
  }
  for (auto& k : n.kids) k = canonical(k);
  return fml::make(std::move(n));
}

}  // namespace detail

/// Equality up to renaming of bound variables and associativity of && / ||.
inline bool alpha_equivalent(const Formula& a, const Formula& b) {
  detail::Scope sc;
  return detail::alpha_formula(detail::canonical(a), detail::canonical(b), sc);
}

// ---- normal forms --------------------------------------------------------

namespace detail {

inline Formula nnf(const Formula& f, bool neg) {
  switch (f->kind) {
    case FormulaKind::True: return neg ? fml::falsity() : fml::truth();
    case FormulaKind::False: return neg ? fml::truth() : fml::falsity();
    case FormulaKind::Not: return nnf(f->kids[0], !neg);
    case FormulaKind::And:
    case FormulaKind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(nnf(k, neg));
      bool conj = (f->kind == FormulaKind::And) != neg;
      return conj ? fml::land(std::move(ks)) : fml::lor(std::move(ks));
    }
    case FormulaKind::Exists:
    case FormulaKind::Forall: {
      bool ex = (f->kind == FormulaKind::Exists) != neg;
      Formula body = nnf(f->kids[0], neg);
      return ex ? fml::exists(f->var, f->sort, body) : fml::forall(f->var, f->sort, body);
    }
    default: return neg ? fml::lnot(f) : f;
  }
}

struct Prefix {
  FormulaKind kind;
  std::string var;
  Sort sort;
};

inline Formula prenex_rec(const Formula& f, std::vector<Prefix>& pre, std::set<std::string>& used) {
  if (is_quantifier(f)) {
    std::string v = f->var;
    Formula body = f->kids[0];
    if (used.count(v)) {
      std::string r = fresh_name(v, used);
      body = substitute(body, {{v, term::var(r, f->sort)}});
      v = r;
    }
    used.insert(v);
    pre.push_back({f->kind, v, f->sort});
    return prenex_rec(body, pre, used);
  }
  if (f->kind == FormulaKind::And || f->kind == FormulaKind::Or) {
    FormulaNode n = *f;
    for (auto& k : n.kids) k = prenex_rec(k, pre, used);
    return fml::make(std::move(n));
  }
  return f;
}

}  // namespace detail

/// Negation normal form: negations only directly above atoms.
inline Formula to_nnf(const Formula& f) { return detail::nnf(f, false); }

/// Prenex normal form of the NNF of f (bound variables renamed apart).
inline Formula to_prenex(const Formula& f) {
  Formula g = to_nnf(f);
  std::set<std::string> used = free_names(g);
  std::vector<detail::Prefix> pre;
  Formula matrix = detail::prenex_rec(g, pre, used);
  for (auto it = pre.rbegin(); it != pre.rend(); ++it)
    matrix = it->kind == FormulaKind::Exists ? fml::exists(it->var, it->sort, matrix) : fml::forall(it->var, it->sort, matrix);
  return matrix;
}

/// A (signature, formula) pair, interpreted per Structure as a subset of
/// F^m x k_F^n x Z^r.
struct DefinableSet {
  Signature signature;
  Formula formula;

  static DefinableSet make(Signature sig, Formula f) {
    auto free = sort_check(f);
    for (auto& [n, s] : free) {
      auto it = std::find_if(sig.begin(), sig.end(), [&](auto& e) { return e.first == n; });
      if (it == sig.end()) fail(ErrorKind::SignatureMismatch, "free variable '" + n + "' missing from signature");
      if (it->second != s) fail(ErrorKind::SignatureMismatch, "signature sort mismatch for '" + n + "'");
    }
    return {std::move(sig), std::move(f)};
  }

  /// (m, n, r): counts of VF, RF and VG coordinates.
  std::array<int, 3> dims() const {
    std::array<int, 3> d{0, 0, 0};
    for (auto& [_, s] : signature) ++d[static_cast<int>(s)];
    return d;
  }
};

}  // namespace dpkit
