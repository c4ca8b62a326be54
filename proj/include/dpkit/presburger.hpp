#pragma once

// Decision procedure for the value-group sort: linear integer arithmetic
// with =, >= and congruences, eliminated with Cooper's method.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/numeric.hpp"

namespace dpkit::presburger {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::ModulusOverflow, "integer overflow in elimination");
  return r;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::ModulusOverflow, "integer overflow in elimination");
  return r;
}

/// sum(coeff * var) + constant.
struct LinearTerm {
  std::map<std::string, std::int64_t> coeffs;
  std::int64_t constant = 0;

  LinearTerm() = default;
  LinearTerm(std::int64_t c) : constant(c) {}  // NOLINT
  static LinearTerm var(const std::string& name, std::int64_t c = 1) {
    LinearTerm t;
    if (c) t.coeffs[name] = c;
    return t;
  }

  std::int64_t coeff(const std::string& v) const {
    auto it = coeffs.find(v);
    return it == coeffs.end() ? 0 : it->second;
  }
  bool is_constant() const { return coeffs.empty(); }

  friend LinearTerm operator+(LinearTerm a, const LinearTerm& b) {
    for (auto& [v, c] : b.coeffs) {
      auto& slot = a.coeffs[v];
      slot = checked_add(slot, c);
      if (slot == 0) a.coeffs.erase(v);
    }
    a.constant = checked_add(a.constant, b.constant);
    return a;
  }
  friend LinearTerm operator*(std::int64_t k, LinearTerm a) {
    if (k == 0) return LinearTerm(0);
    for (auto& [v, c] : a.coeffs) c = checked_mul(c, k);
    a.constant = checked_mul(a.constant, k);
    return a;
  }
  friend LinearTerm operator-(const LinearTerm& a) { return -1 * a; }
  friend LinearTerm operator-(const LinearTerm& a, const LinearTerm& b) { return a + (-b); }
  friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
  friend auto operator<=>(const LinearTerm&, const LinearTerm&) = default;

  /// Replace `v` by `s`.
  LinearTerm substitute(const std::string& v, const LinearTerm& s) const {
    std::int64_t c = coeff(v);
    if (c == 0) return *this;
    LinearTerm r = *this;
    r.coeffs.erase(v);
    return r + c * s;
  }

  std::int64_t evaluate(const std::map<std::string, std::int64_t>& env) const {
    std::int64_t s = constant;
    for (auto& [v, c] : coeffs) {
      auto it = env.find(v);
      if (it == env.end()) fail(ErrorKind::InvalidArgument, "unassigned variable '" + v + "'");
      s = checked_add(s, checked_mul(c, it->second));
    }
    return s;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    for (auto& [v, c] : coeffs) {
      if (first) {
        if (c == -1) os << "-";
        else if (c != 1) os << c << "*";
      } else {
        os << (c < 0 ? " - " : " + ");
        if (std::abs(c) != 1) os << std::abs(c) << "*";
      }
      os << v;
      first = false;
    }
    if (first) os << constant;
    else if (constant) os << (constant < 0 ? " - " : " + ") << std::abs(constant);
    return os.str();
  }
};

enum class Kind { True, False, Ge, Eq, Lt, Dvd, NDvd, Not, And, Or, Exists, Forall };

struct Node;
using Formula = std::shared_ptr<const Node>;

/// Atoms: Ge is t >= 0, Eq is t = 0, Lt is 0 < t, Dvd is d | t, NDvd is
/// not d | t. Lt and NDvd only appear in eliminated output.
struct Node {
  Kind kind = Kind::True;
  LinearTerm term;
  std::int64_t modulus = 0;
  std::string var;
  std::vector<Formula> kids;
};

inline Formula make(Kind k) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  return n;
}
inline Formula top() {
  static const Formula t = make(Kind::True);
  return t;
}
inline Formula bottom() {
  static const Formula f = make(Kind::False);
  return f;
}
inline Formula boolean(bool b) { return b ? top() : bottom(); }

inline Formula atom(Kind k, LinearTerm t, std::int64_t d = 0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->term = std::move(t);
  n->modulus = d;
  return n;
}

inline Formula ge(const LinearTerm& a, const LinearTerm& b) { return atom(Kind::Ge, a - b); }
inline Formula eq(const LinearTerm& a, const LinearTerm& b) { return atom(Kind::Eq, a - b); }
/// a ≡ b (mod d), d >= 2.
inline Formula congr(const LinearTerm& a, const LinearTerm& b, std::int64_t d) {
  if (d < 2) fail(ErrorKind::InvalidArgument, "congruence modulus must be >= 2");
  return atom(Kind::Dvd, a - b, d);
}
inline Formula lnot(Formula f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->kids = {std::move(f)};
  return n;
}
inline Formula nary(Kind k, std::vector<Formula> kids) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->kids = std::move(kids);
  return n;
}
inline Formula land(Formula a, Formula b) { return nary(Kind::And, {std::move(a), std::move(b)}); }
inline Formula lor(Formula a, Formula b) { return nary(Kind::Or, {std::move(a), std::move(b)}); }
inline Formula quant(Kind k, const std::string& v, Formula body) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->var = v;
  n->kids = {std::move(body)};
  return n;
}
inline Formula exists(const std::string& v, Formula body) { return quant(Kind::Exists, v, std::move(body)); }
inline Formula forall(const std::string& v, Formula body) { return quant(Kind::Forall, v, std::move(body)); }

inline std::string str(const Formula& f) {
  switch (f->kind) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Ge: return f->term.str() + " >= 0";
    case Kind::Eq: return f->term.str() + " == 0";
    case Kind::Lt: return f->term.str() + " >= 1";
    case Kind::Dvd: return "congr(" + f->term.str() + ", 0, " + std::to_string(f->modulus) + ")";
    case Kind::NDvd: return "!congr(" + f->term.str() + ", 0, " + std::to_string(f->modulus) + ")";
    case Kind::Not: return "!(" + str(f->kids[0]) + ")";
    case Kind::And:
    case Kind::Or: {
      if (f->kids.empty()) return f->kind == Kind::And ? "true" : "false";
      std::string s = "(";
      for (std::size_t i = 0; i < f->kids.size(); ++i)
        s += (i ? (f->kind == Kind::And ? " && " : " || ") : "") + str(f->kids[i]);
      return s + ")";
    }
    case Kind::Exists: return "(exists " + f->var + ":VG. " + str(f->kids[0]) + ")";
    case Kind::Forall: return "(forall " + f->var + ":VG. " + str(f->kids[0]) + ")";
  }
  return "?";
}

inline void collect_free(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (f->kind) {
    case Kind::Ge: case Kind::Eq: case Kind::Lt: case Kind::Dvd: case Kind::NDvd:
      for (auto& [v, c] : f->term.coeffs)
        if (!bound.count(v)) out.insert(v);
      return;
    case Kind::Exists: case Kind::Forall: {
      bool had = bound.count(f->var);
      bound.insert(f->var);
      collect_free(f->kids[0], bound, out);
      if (!had) bound.erase(f->var);
      return;
    }
    default:
      for (auto& k : f->kids) collect_free(k, bound, out);
  }
}

inline std::set<std::string> free_vars(const Formula& f) {
  std::set<std::string> bound, out;
  collect_free(f, bound, out);
  return out;
}

inline bool has_quantifier(const Formula& f) {
  if (f->kind == Kind::Exists || f->kind == Kind::Forall) return true;
  return std::any_of(f->kids.begin(), f->kids.end(), has_quantifier);
}

/// Truth of a quantifier-free formula under a total assignment.
inline bool evaluate_qf(const Formula& f, const std::map<std::string, std::int64_t>& env) {
  switch (f->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Ge: return f->term.evaluate(env) >= 0;
    case Kind::Eq: return f->term.evaluate(env) == 0;
    case Kind::Lt: return f->term.evaluate(env) > 0;
    case Kind::Dvd: return mod_floor(f->term.evaluate(env), f->modulus) == 0;
    case Kind::NDvd: return mod_floor(f->term.evaluate(env), f->modulus) != 0;
    case Kind::Not: return !evaluate_qf(f->kids[0], env);
    case Kind::And:
      for (auto& k : f->kids)
        if (!evaluate_qf(k, env)) return false;
      return true;
    case Kind::Or:
      for (auto& k : f->kids)
        if (evaluate_qf(k, env)) return true;
      return false;
    default: fail(ErrorKind::InvalidArgument, "evaluate_qf on quantified formula");
  }
}

struct Options {
  std::int64_t modulus_bound = 1'000'000'000;
};

namespace detail {

inline std::int64_t gcd_of_coeffs(const LinearTerm& t) {
  std::int64_t g = 0;
  for (auto& [v, c] : t.coeffs) g = std::gcd(g, std::abs(c));
  return g;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Normalizes an NNF atom (Lt / Eq / Dvd / NDvd), folding ground atoms.
inline Formula normalize_atom(Kind k, LinearTerm t, std::int64_t d) {
  if (k == Kind::Dvd || k == Kind::NDvd) {
    if (d == 1) return boolean(k == Kind::Dvd);
    for (auto it = t.coeffs.begin(); it != t.coeffs.end();) {
      it->second = mod_floor(it->second, d);
      if (it->second == 0) it = t.coeffs.erase(it);
      else ++it;
    }
    t.constant = mod_floor(t.constant, d);
    if (t.is_constant()) return boolean((t.constant == 0) == (k == Kind::Dvd));
    std::int64_t g = std::gcd(gcd_of_coeffs(t), std::gcd(t.constant, d));
    if (g > 1) {
      for (auto& [v, c] : t.coeffs) c /= g;
      t.constant /= g;
      d /= g;
      if (d == 1) return boolean(k == Kind::Dvd);
    }
    return atom(k, std::move(t), d);
  }
  if (t.is_constant()) {
    if (k == Kind::Lt) return boolean(t.constant > 0);
    return boolean(t.constant == 0);
  }
  std::int64_t g = gcd_of_coeffs(t);
  if (g > 1) {
    if (k == Kind::Eq) {
      if (t.constant % g != 0) return bottom();
      for (auto& [v, c] : t.coeffs) c /= g;
      t.constant /= g;
    } else {
      // 0 < g*s + k  <=>  s >= ceil((1-k)/g)  <=>  0 < s - ceil((1-k)/g) + 1
      std::int64_t bound = -floor_div(-(1 - t.constant), g);
      for (auto& [v, c] : t.coeffs) c /= g;
      t.constant = 1 - bound;
    }
  }
  return atom(k, std::move(t), 0);
}

inline Formula mk_and(std::vector<Formula> kids) {
  std::vector<Formula> out;
  for (auto& k : kids) {
    if (k->kind == Kind::False) return bottom();
    if (k->kind == Kind::True) continue;
    if (k->kind == Kind::And) out.insert(out.end(), k->kids.begin(), k->kids.end());
    else out.push_back(k);
  }
  if (out.empty()) return top();
  if (out.size() == 1) return out[0];
  return nary(Kind::And, std::move(out));
}

inline Formula mk_or(std::vector<Formula> kids) {
  std::vector<Formula> out;
  for (auto& k : kids) {
    if (k->kind == Kind::True) return top();
    if (k->kind == Kind::False) continue;
    if (k->kind == Kind::Or) out.insert(out.end(), k->kids.begin(), k->kids.end());
    else out.push_back(k);
  }
  if (out.empty()) return bottom();
  if (out.size() == 1) return out[0];
  return nary(Kind::Or, std::move(out));
}

/// Negation normal form over Lt / Eq / Dvd / NDvd atoms with Eq and its
/// negation expanded into Lt atoms only where needed.
inline Formula nnf(const Formula& f, bool neg) {
  switch (f->kind) {
    case Kind::True: return boolean(!neg);
    case Kind::False: return boolean(neg);
    case Kind::Ge:
      return neg ? normalize_atom(Kind::Lt, -f->term, 0) : normalize_atom(Kind::Lt, f->term + 1, 0);
    case Kind::Lt:
      return neg ? normalize_atom(Kind::Lt, 1 - f->term, 0) : normalize_atom(Kind::Lt, f->term, 0);
    case Kind::Eq:
      if (!neg) return normalize_atom(Kind::Eq, f->term, 0);
      return mk_or({normalize_atom(Kind::Lt, f->term, 0), normalize_atom(Kind::Lt, -f->term, 0)});
    case Kind::Dvd: return normalize_atom(neg ? Kind::NDvd : Kind::Dvd, f->term, f->modulus);
    case Kind::NDvd: return normalize_atom(neg ? Kind::Dvd : Kind::NDvd, f->term, f->modulus);
    case Kind::Not: return nnf(f->kids[0], !neg);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(nnf(k, neg));
      bool conj = (f->kind == Kind::And) != neg;
      return conj ? mk_and(std::move(ks)) : mk_or(std::move(ks));
    }
    default: fail(ErrorKind::InvalidArgument, "nnf expects a quantifier-free formula");
  }
}

inline Formula substitute(const Formula& f, const std::string& v, const LinearTerm& s) {
  switch (f->kind) {
    case Kind::True: case Kind::False: return f;
    case Kind::Lt: case Kind::Eq: case Kind::Dvd: case Kind::NDvd:
      if (f->term.coeff(v) == 0) return f;
      return normalize_atom(f->kind, f->term.substitute(v, s), f->modulus);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      ks.reserve(f->kids.size());
      for (auto& k : f->kids) {
        ks.push_back(substitute(k, v, s));
        if (f->kind == Kind::And && ks.back()->kind == Kind::False) return bottom();
        if (f->kind == Kind::Or && ks.back()->kind == Kind::True) return top();
      }
      return f->kind == Kind::And ? mk_and(std::move(ks)) : mk_or(std::move(ks));
    }
    default: fail(ErrorKind::InvalidArgument, "substitute expects NNF");
  }
}

inline bool mentions(const Formula& f, const std::string& v) {
  switch (f->kind) {
    case Kind::Lt: case Kind::Eq: case Kind::Dvd: case Kind::NDvd: return f->term.coeff(v) != 0;
    default:
      return std::any_of(f->kids.begin(), f->kids.end(), [&](const Formula& k) { return mentions(k, v); });
  }
}

inline void lcm_coeffs(const Formula& f, const std::string& v, std::int64_t& l, const Options& o) {
  switch (f->kind) {
    case Kind::Lt: case Kind::Eq: case Kind::Dvd: case Kind::NDvd: {
      std::int64_t c = std::abs(f->term.coeff(v));
      if (c) {
        l = checked_mul(l / std::gcd(l, c), c);
        if (l > o.modulus_bound) fail(ErrorKind::ModulusOverflow, "coefficient lcm exceeds bound");
      }
      return;
    }
    default:
      for (auto& k : f->kids) lcm_coeffs(k, v, l, o);
  }
}

// Rescales every atom so the coefficient of v is +-1 (v now stands for l*v).
inline Formula unitize(const Formula& f, const std::string& v, std::int64_t l) {
  switch (f->kind) {
    case Kind::Lt: case Kind::Eq: case Kind::Dvd: case Kind::NDvd: {
      std::int64_t c = f->term.coeff(v);
      if (c == 0) return f;
      std::int64_t m = l / std::abs(c);
      LinearTerm t = m * f->term;
      t.coeffs[v] = c > 0 ? 1 : -1;
      auto n = std::make_shared<Node>(*f);
      n->term = std::move(t);
      if (f->kind == Kind::Dvd || f->kind == Kind::NDvd) n->modulus = checked_mul(f->modulus, m);
      return n;
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(unitize(k, v, l));
      return nary(f->kind, std::move(ks));
    }
    default: return f;
  }
}

inline Formula negate_var(const Formula& f, const std::string& v) {
  switch (f->kind) {
    case Kind::Lt: case Kind::Eq: case Kind::Dvd: case Kind::NDvd: {
      if (f->term.coeff(v) == 0) return f;
      auto n = std::make_shared<Node>(*f);
      n->term.coeffs[v] = -n->term.coeffs[v];
      return n;
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(negate_var(k, v));
      return nary(f->kind, std::move(ks));
    }
    default: return f;
  }
}

// Collects the Cooper boundary points: lower (coefficient +1) or upper
// (coefficient -1) depending on `lower`; also the divisor lcm.
inline void boundary(const Formula& f, const std::string& v, bool lower, std::set<LinearTerm>& pts,
                     std::int64_t& delta, const Options& o) {
  switch (f->kind) {
    case Kind::Lt: case Kind::Eq: {
      std::int64_t c = f->term.coeff(v);
      if (c == 0) return;
      LinearTerm rest = f->term;
      rest.coeffs.erase(v);
      // c = +1: 0 < v + rest  <=> v > -rest.  c = -1: v < rest.
      bool is_lower = (c > 0);
      if (f->kind == Kind::Lt) {
        if (is_lower == lower) pts.insert(is_lower ? -rest : rest);
      } else {
        // v = -rest (c = +1) or v = rest (c = -1); boundary one step outside.
        LinearTerm val = c > 0 ? -rest : rest;
        pts.insert(lower ? val - 1 : val + 1);
      }
      return;
    }
    case Kind::Dvd:
    case Kind::NDvd:
      if (f->term.coeff(v) != 0) {
        delta = checked_mul(delta / std::gcd(delta, f->modulus), f->modulus);
        if (delta > o.modulus_bound) fail(ErrorKind::ModulusOverflow, "divisor lcm exceeds bound");
      }
      return;
    default:
      for (auto& k : f->kids) boundary(k, v, lower, pts, delta, o);
  }
}

// Negated-equality atoms do not exist in our NNF (they are split into Lt),
// so the infinite projection only needs Lt and Eq.
inline Formula minus_infinity(const Formula& f, const std::string& v) {
  switch (f->kind) {
    case Kind::Lt: {
      std::int64_t c = f->term.coeff(v);
      if (c == 0) return f;
      return boolean(c < 0);
    }
    case Kind::Eq: return f->term.coeff(v) == 0 ? f : bottom();
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(minus_infinity(k, v));
      return f->kind == Kind::And ? mk_and(std::move(ks)) : mk_or(std::move(ks));
    }
    default: return f;
  }
}

inline void count_bounds(const Formula& f, const std::string& v, std::size_t& lo, std::size_t& hi) {
  switch (f->kind) {
    case Kind::Lt: {
      std::int64_t c = f->term.coeff(v);
      if (c > 0) ++lo;
      if (c < 0) ++hi;
      return;
    }
    case Kind::Eq:
      if (f->term.coeff(v)) { ++lo; ++hi; }
      return;
    default:
      for (auto& k : f->kids) count_bounds(k, v, lo, hi);
  }
}

/// exists v. f, for f quantifier-free in NNF.
inline Formula cooper(const Formula& f, const std::string& v, const Options& o) {
  if (!mentions(f, v)) return f;
  if (f->kind == Kind::Or) {
    std::vector<Formula> ks;
    for (auto& k : f->kids) {
      ks.push_back(cooper(k, v, o));
      if (ks.back()->kind == Kind::True) return top();
    }
    return mk_or(std::move(ks));
  }
  // Constant bounds on v in the top-level conjunction: enumerate a short range.
  {
    std::vector<Formula> conj = f->kind == Kind::And ? f->kids : std::vector<Formula>{f};
    std::optional<std::int64_t> lo_b, hi_b;
    for (auto& a : conj) {
      if (a->kind != Kind::Lt && a->kind != Kind::Eq) continue;
      std::int64_t c = a->term.coeff(v);
      if (c == 0 || a->term.coeffs.size() != 1) continue;
      std::int64_t k = a->term.constant;
      if (a->kind == Kind::Eq) {
        if (k % c != 0) return bottom();
        lo_b = std::max(lo_b.value_or(-k / c), -k / c);
        hi_b = std::min(hi_b.value_or(-k / c), -k / c);
      } else if (c > 0) {
        std::int64_t b = floor_div(-k, c) + 1;  // v > -k/c
        lo_b = std::max(lo_b.value_or(b), b);
      } else {
        std::int64_t b = -floor_div(-k, -c) - 1;  // v < k/|c|
        hi_b = std::min(hi_b.value_or(b), b);
      }
    }
    if (lo_b && hi_b) {
      if (*hi_b < *lo_b) return bottom();
      if (*hi_b - *lo_b < 256) {
        std::vector<Formula> out;
        for (std::int64_t x = *lo_b; x <= *hi_b; ++x) {
          Formula d = substitute(f, v, LinearTerm(x));
          if (d->kind == Kind::True) return top();
          if (d->kind != Kind::False) out.push_back(d);
        }
        return mk_or(std::move(out));
      }
    }
  }

  std::int64_t l = 1;
  lcm_coeffs(f, v, l, o);
  Formula g = unitize(f, v, l);
  if (l > 1) g = mk_and({g, normalize_atom(Kind::Dvd, LinearTerm::var(v), l)});

  // Top-level equality: substitute directly.
  if (g->kind == Kind::And || g->kind == Kind::Eq) {
    std::vector<Formula> conj = g->kind == Kind::And ? g->kids : std::vector<Formula>{g};
    for (auto& a : conj) {
      if (a->kind == Kind::Eq && a->term.coeff(v) != 0) {
        LinearTerm rest = a->term;
        std::int64_t c = rest.coeff(v);
        rest.coeffs.erase(v);
        LinearTerm val = c > 0 ? -rest : rest;
        return substitute(g, v, val);
      }
    }
  }

  std::size_t lo = 0, hi = 0;
  count_bounds(g, v, lo, hi);
  if (hi < lo) g = negate_var(g, v);

  std::set<LinearTerm> pts;
  std::int64_t delta = 1;
  boundary(g, v, true, pts, delta, o);
  if (checked_mul(delta, static_cast<std::int64_t>(pts.size() + 1)) > o.modulus_bound)
    fail(ErrorKind::ModulusOverflow, "Cooper expansion exceeds bound");

  std::vector<Formula> out;
  Formula inf = minus_infinity(g, v);
  for (std::int64_t j = 1; j <= delta; ++j) {
    Formula d = substitute(inf, v, LinearTerm(j));
    if (d->kind == Kind::True) return top();
    if (d->kind != Kind::False) out.push_back(d);
  }
  for (auto& b : pts) {
    for (std::int64_t j = 1; j <= delta; ++j) {
      Formula d = substitute(g, v, b + LinearTerm(j));
      if (d->kind == Kind::True) return top();
      if (d->kind != Kind::False) out.push_back(d);
    }
  }
  return mk_or(std::move(out));
}

inline Formula eliminate_rec(const Formula& f, const Options& o) {
  switch (f->kind) {
    case Kind::Exists: return cooper(nnf(eliminate_rec(f->kids[0], o), false), f->var, o);
    case Kind::Forall: return nnf(cooper(nnf(eliminate_rec(f->kids[0], o), true), f->var, o), true);
    case Kind::Not: return nnf(eliminate_rec(f->kids[0], o), true);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) {
        ks.push_back(eliminate_rec(k, o));
        if (f->kind == Kind::And && ks.back()->kind == Kind::False) return bottom();
        if (f->kind == Kind::Or && ks.back()->kind == Kind::True) return top();
      }
      return f->kind == Kind::And ? mk_and(std::move(ks)) : mk_or(std::move(ks));
    }
    default: return nnf(f, false);
  }
}

inline Formula substitute_env(const Formula& f, const std::map<std::string, std::int64_t>& env) {
  switch (f->kind) {
    case Kind::True: case Kind::False: return f;
    case Kind::Ge: case Kind::Eq: case Kind::Lt: case Kind::Dvd: case Kind::NDvd: {
      LinearTerm t = f->term;
      for (auto& [v, c] : f->term.coeffs) {
        auto it = env.find(v);
        if (it != env.end()) t = t.substitute(v, LinearTerm(it->second));
      }
      return atom(f->kind, std::move(t), f->modulus);
    }
    case Kind::Exists: case Kind::Forall: {
      if (env.count(f->var)) {
        auto inner = env;
        inner.erase(f->var);
        return quant(f->kind, f->var, substitute_env(f->kids[0], inner));
      }
      return quant(f->kind, f->var, substitute_env(f->kids[0], env));
    }
    default: {
      std::vector<Formula> ks;
      for (auto& k : f->kids) ks.push_back(substitute_env(k, env));
      return nary(f->kind, std::move(ks));
    }
  }
}

}  // namespace detail

/// Quantifier-free equivalent of `phi` over Z. Quantifier-free input comes
/// back unchanged up to normalization.
inline Formula eliminate(const Formula& phi, const Options& opts = {}) {
  return detail::eliminate_rec(phi, opts);
}

/// Exact truth of `phi` with its free variables taken from `env`.
inline bool decide(const Formula& phi, const std::map<std::string, std::int64_t>& env = {},
                   const Options& opts = {}) {
  for (auto& v : free_vars(phi))
    if (!env.count(v)) fail(ErrorKind::InvalidArgument, "free variable '" + v + "' not assigned");
  Formula closed = detail::substitute_env(phi, env);
  Formula qf = eliminate(closed, opts);
  return evaluate_qf(qf, {});
}

}  // namespace dpkit::presburger
