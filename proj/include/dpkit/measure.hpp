#pragma once

// Serre-Oesterle volumes of definable subsets of O^m and integrals of
// constructible functions, by counting residue cells mod w^k.
//
// A cell is a tuple of residue classes r_i + w^k O. Cells on which the
// formula is TRUE contribute to the inner bound, cells not FALSE to the
// outer bound. Only UNKNOWN cells are refined, so the bounds tighten
// monotonically with depth.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/evaluator.hpp"
#include "dpkit/formula.hpp"
#include "dpkit/numeric.hpp"
#include "dpkit/valued_field.hpp"

namespace dpkit {

struct MeasureResult {
  Rational inner;
  Rational outer;
  int depth = 0;
  bool stabilized = false;
  std::size_t cells = 0;
};

struct MeasureConfig {
  std::optional<int> depth;     // fixed counting depth; auto when empty
  int max_depth = 6;            // cap for the automatic depth
  std::size_t max_cells = 400000;
  EvalConfig eval;
};

/// The residue class of `digits` (d_0 + d_1 w + ...) modulo w^len as an element.
inline VFE residue_cell(const Structure& S, const std::vector<std::uint32_t>& digits) {
  std::size_t k = digits.size();
  std::size_t v = 0;
  while (v < k && digits[v] == 0) ++v;
  if (v == k) return VFE::ball(S.backend, S.p, static_cast<std::int64_t>(k), S.precision);
  std::vector<std::uint32_t> unit(digits.begin() + static_cast<long>(v), digits.end());
  return VFE::from_digits(S.backend, S.p, static_cast<std::int64_t>(v), unit, static_cast<int>(k - v), S.precision);
}

namespace measure_detail {

using Cell = std::vector<std::vector<std::uint32_t>>;  // digits per coordinate

inline Assignment cell_point(const Structure& S, const Signature& sig, const Cell& c) {
  Assignment a;
  for (std::size_t i = 0; i < sig.size(); ++i) a[sig[i].first] = residue_cell(S, c[i]);
  return a;
}

inline std::vector<Cell> children(const Cell& c, std::uint32_t p) {
  std::vector<Cell> out{c};
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<Cell> next;
    for (auto& cc : out)
      for (std::uint32_t d = 0; d < p; ++d) {
        Cell n = cc;
        n[i].push_back(d);
        next.push_back(std::move(n));
      }
    out = std::move(next);
  }
  return out;
}

inline void require_vf_signature(const Signature& sig) {
  for (auto& [n, s] : sig)
    if (s != Sort::VF) fail(ErrorKind::SignatureMismatch, "'" + n + "' is not VF-sorted; volumes live on O^m");
}

// Generic breadth-first refinement. `judge` returns the contribution bounds of
// a cell (already scaled by its volume) and whether it must be refined.
struct Bounds {
  Rational lo, hi;
  bool settled;
};

template <class Judge>
MeasureResult refine(const Structure& S, std::size_t m, const MeasureConfig& cfg, Judge judge) {
  std::uint32_t q = S.p;
  int target = cfg.depth ? *cfg.depth : cfg.max_depth;
  if (target < 0) fail(ErrorKind::InvalidArgument, "depth must be >= 0");
  MeasureResult r;
  std::vector<Cell> open{Cell(m)};
  Rational settled_lo = 0, settled_hi = 0;
  int level = 0;
  // Depth 0 is the whole of O^m; refine until nothing is open.
  while (true) {
    Rational open_lo = 0, open_hi = 0;
    std::vector<Cell> still;
    Rational vol = rational_pow(q, -static_cast<std::int64_t>(level) * static_cast<std::int64_t>(m));
    for (auto& c : open) {
      ++r.cells;
      Bounds b = judge(c, vol);
      if (b.settled) {
        settled_lo += b.lo;
        settled_hi += b.hi;
      } else {
        open_lo += b.lo;
        open_hi += b.hi;
        still.push_back(c);
      }
    }
    r.inner = settled_lo + open_lo;
    r.outer = settled_hi + open_hi;
    r.stabilized = still.empty();
    // A stabilized count at a coarser level equals the count at the requested depth.
    r.depth = cfg.depth && r.stabilized ? *cfg.depth : level;
    bool fixed_depth_reached = cfg.depth && level >= *cfg.depth;
    if (still.empty() || level >= target || fixed_depth_reached) break;
    double next = static_cast<double>(still.size()) * std::pow(static_cast<double>(q), static_cast<double>(m));
    if (r.cells + next > static_cast<double>(cfg.max_cells)) break;
    std::vector<Cell> nxt;
    for (auto& c : still)
      for (auto& ch : children(c, q)) nxt.push_back(std::move(ch));
    open = std::move(nxt);
    ++level;
  }
  return r;
}

}  // namespace measure_detail

/// Volume of X inside O^m, normalized so that vol(O^m) = 1.
inline MeasureResult volume(const DefinableSet& X, const Structure& S, const MeasureConfig& cfg = {}) {
  measure_detail::require_vf_signature(X.signature);
  return measure_detail::refine(S, X.signature.size(), cfg, [&](const measure_detail::Cell& c, const Rational& vol) {
    // The root cell is a ball with no digits; a long search there is wasted.
    EvalConfig ec = cfg.eval;
    if (vol == 1) ec.cell_budget = std::min<std::size_t>(ec.cell_budget, 2000);
    Truth t = evaluate(X.formula, S, measure_detail::cell_point(S, X.signature, c), ec);
    if (t == Truth::True) return measure_detail::Bounds{vol, vol, true};
    if (t == Truth::False) return measure_detail::Bounds{0, 0, true};
    return measure_detail::Bounds{0, vol, false};
  });
}

// ---- constructible functions ------------------------------------------------

/// coeff * L^exponent * #{r in k^n : fiber} * 1_indicator
struct ConstructibleTerm {
  Rational coeff = 1;
  std::optional<Term> exponent;
  Signature fiber_vars;
  std::optional<Formula> fiber;
  std::optional<Formula> indicator;
};

struct ConstructibleExpr {
  Signature domain;
  std::vector<ConstructibleTerm> terms;
};

struct IntegralResult {
  Rational lower;
  Rational upper;
  int depth = 0;
  bool exact = false;
  std::size_t cells = 0;

  Rational value() const { return exact ? lower : (lower + upper) / 2; }
};

namespace measure_detail {

// Integer interval with optional infinite ends.
struct Interval {
  std::optional<std::int64_t> lo, hi;  // nullopt = -inf / +inf

  friend Interval operator+(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo && b.lo) r.lo = *a.lo + *b.lo;
    if (a.hi && b.hi) r.hi = *a.hi + *b.hi;
    return r;
  }
  Interval scaled(std::int64_t k) const {
    Interval r;
    if (k >= 0) {
      if (lo) r.lo = *lo * k;
      if (hi) r.hi = *hi * k;
    } else {
      if (hi) r.lo = *hi * k;
      if (lo) r.hi = *lo * k;
    }
    return r;
  }
};

inline VFE vf_value(const Term& t, const Structure& S, const Assignment& a) {
  switch (t->kind) {
    case TermKind::Var: return std::get<VFE>(a.at(t->name));
    case TermKind::Int: return S.integer(t->value);
    case TermKind::Const: return S.constant(t->name);
    case TermKind::Add: return vf_value(t->args[0], S, a) + vf_value(t->args[1], S, a);
    case TermKind::Sub: return vf_value(t->args[0], S, a) - vf_value(t->args[1], S, a);
    case TermKind::Neg: return -vf_value(t->args[0], S, a);
    case TermKind::Mul: return vf_value(t->args[0], S, a) * vf_value(t->args[1], S, a);
    default: fail(ErrorKind::SortError, "not a VF term: " + print(t));
  }
}

inline Interval vg_interval(const Term& t, const Structure& S, const Assignment& a) {
  switch (t->kind) {
    case TermKind::Int: return {t->value, t->value};
    case TermKind::Var: fail(ErrorKind::SignatureMismatch, "exponent may only use the domain's VF variables");
    case TermKind::Add: return vg_interval(t->args[0], S, a) + vg_interval(t->args[1], S, a);
    case TermKind::Sub: return vg_interval(t->args[0], S, a) + vg_interval(t->args[1], S, a).scaled(-1);
    case TermKind::Neg: return vg_interval(t->args[0], S, a).scaled(-1);
    case TermKind::Mul: {
      const Term& l = t->args[0];
      const Term& rr = t->args[1];
      if (l->kind == TermKind::Int) return vg_interval(rr, S, a).scaled(l->value);
      return vg_interval(l, S, a).scaled(rr->value);
    }
    case TermKind::Ord: {
      VFE v = vf_value(t->args[0], S, a);
      if (v.is_zero()) return {std::nullopt, std::nullopt};
      std::int64_t o = v.valuation().value();
      if (v.is_ball()) return {o, std::nullopt};
      return {o, o};
    }
    default: fail(ErrorKind::SortError, "not a VG term: " + print(t));
  }
}

}  // namespace measure_detail

/// Integral over O^m (the domain) of a constructible expression, L = q.
inline IntegralResult integrate(const ConstructibleExpr& phi, const Structure& S, const MeasureConfig& cfg = {}) {
  measure_detail::require_vf_signature(phi.domain);
  for (auto& t : phi.terms) {
    for (auto& [n, s] : t.fiber_vars)
      if (s != Sort::RF) fail(ErrorKind::SignatureMismatch, "fiber variable '" + n + "' must be RF-sorted");
    if (t.fiber_vars.size() > 4) fail(ErrorKind::InvalidArgument, "at most 4 fiber variables");
  }
  std::uint32_t q = S.p;
  auto judge = [&](const measure_detail::Cell& c, const Rational& vol) {
    Assignment pt = measure_detail::cell_point(S, phi.domain, c);
    Rational lo = 0, hi = 0;
    bool settled = true;
    for (auto& term : phi.terms) {
      if (term.coeff == 0) continue;
      int ind_lo = 1, ind_hi = 1;
      if (term.indicator) {
        Truth t = evaluate(*term.indicator, S, pt, cfg.eval);
        ind_lo = t == Truth::True;
        ind_hi = t != Truth::False;
      }
      if (ind_hi == 0) continue;
      std::int64_t f_lo = 1, f_hi = 1;
      if (term.fiber) {
        f_lo = f_hi = 0;
        std::size_t n = term.fiber_vars.size();
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= q;
        for (std::size_t idx = 0; idx < total; ++idx) {
          Assignment a = pt;
          std::size_t rem = idx;
          for (std::size_t i = 0; i < n; ++i) {
            a[term.fiber_vars[i].first] = ResidueElement(static_cast<std::int64_t>(rem % q), q);
            rem /= q;
          }
          Truth t = evaluate(*term.fiber, S, a, cfg.eval);
          f_lo += t == Truth::True;
          f_hi += t != Truth::False;
        }
      }
      if (f_hi == 0) continue;
      Rational e_lo = 1, e_hi = 1;
      if (term.exponent) {
        auto iv = measure_detail::vg_interval(*term.exponent, S, pt);
        if (!iv.hi) fail(ErrorKind::UnboundedExponent, "exponent " + print(*term.exponent) + " is unbounded above on a cell");
        e_hi = rational_pow(q, *iv.hi);
        e_lo = iv.lo ? rational_pow(q, *iv.lo) : Rational(0);
      }
      Rational a = term.coeff * e_lo * f_lo * ind_lo * vol;
      Rational b = term.coeff * e_hi * f_hi * ind_hi * vol;
      if (term.coeff < 0) std::swap(a, b);
      lo += a;
      hi += b;
      if (a != b) settled = false;
    }
    return measure_detail::Bounds{lo, hi, settled};
  };
  MeasureResult m = measure_detail::refine(S, phi.domain.size(), cfg, judge);
  return {m.inner, m.outer, m.depth, m.inner == m.outer, m.cells};
}

/// 1 / vol_count(GL_m(O)) = q^{m^2} / #GL_m(F_q): rescales counting volume on
/// gl_m(O) to the Haar measure giving GL_m(O) volume 1.
inline Rational haar_glm_volume(int m, const Structure& S) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "dimension must be >= 1");
  BigInt q = S.p;
  BigInt qm = boost::multiprecision::pow(q, static_cast<unsigned>(m));
  BigInt order = 1;
  for (int i = 0; i < m; ++i) order *= qm - boost::multiprecision::pow(q, static_cast<unsigned>(i));
  return Rational(boost::multiprecision::pow(q, static_cast<unsigned>(m * m)), order);
}

/// Factor q^{-(n-1)^2} between Haar and Serre-Oesterle measure on GL_{n-1}.
inline Rational so_conversion_factor(int n, const Structure& S) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "n must be >= 2");
  return rational_pow(S.p, -static_cast<std::int64_t>(n - 1) * (n - 1));
}

}  // namespace dpkit
