#pragma once

// Brute-force oracles shared by the unit and acceptance tests. None of them
// calls the code path it checks.

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dpkit/dpkit.hpp"

namespace oracle {

using namespace dpkit;

// ---- Presburger ---------------------------------------------------------------

// Random formula over integer variables. Quantifiers are bounded to
// [lo, hi] inside [-60, 60], so enumeration is exact.
struct PNode {
  enum K { Ge, Eq, Cong, Not, And, Or, Ex, All } k;
  std::map<std::string, std::int64_t> coeffs;
  std::int64_t c = 0, d = 0;
  std::string var;
  std::int64_t lo = 0, hi = 0;
  std::vector<std::shared_ptr<PNode>> kids;
};
using PF = std::shared_ptr<PNode>;

inline std::int64_t lin(const PNode& n, const std::map<std::string, std::int64_t>& env) {
  std::int64_t s = n.c;
  for (auto& [v, a] : n.coeffs) s += a * env.at(v);
  return s;
}

inline bool brute(const PF& f, std::map<std::string, std::int64_t>& env) {
  switch (f->k) {
    case PNode::Ge: return lin(*f, env) >= 0;
    case PNode::Eq: return lin(*f, env) == 0;
    case PNode::Cong: return mod_floor(lin(*f, env), f->d) == 0;
    case PNode::Not: return !brute(f->kids[0], env);
    case PNode::And: return brute(f->kids[0], env) && brute(f->kids[1], env);
    case PNode::Or: return brute(f->kids[0], env) || brute(f->kids[1], env);
    case PNode::Ex:
    case PNode::All: {
      bool ex = f->k == PNode::Ex;
      auto saved = env.count(f->var) ? std::optional<std::int64_t>(env[f->var]) : std::nullopt;
      bool result = !ex;
      for (std::int64_t x = f->lo; x <= f->hi; ++x) {
        env[f->var] = x;
        if (brute(f->kids[0], env) == ex) {
          result = ex;
          break;
        }
      }
      if (saved) env[f->var] = *saved;
      else env.erase(f->var);
      return result;
    }
  }
  return false;
}

inline presburger::Formula to_pb(const PF& f) {
  namespace pb = presburger;
  auto term = [&] {
    pb::LinearTerm t(f->c);
    for (auto& [v, a] : f->coeffs) t = t + pb::LinearTerm::var(v, a);
    return t;
  };
  switch (f->k) {
    case PNode::Ge: return pb::ge(term(), pb::LinearTerm(0));
    case PNode::Eq: return pb::eq(term(), pb::LinearTerm(0));
    case PNode::Cong: return pb::congr(term(), pb::LinearTerm(0), f->d);
    case PNode::Not: return pb::lnot(to_pb(f->kids[0]));
    case PNode::And: return pb::land(to_pb(f->kids[0]), to_pb(f->kids[1]));
    case PNode::Or: return pb::lor(to_pb(f->kids[0]), to_pb(f->kids[1]));
    case PNode::Ex:
    case PNode::All: {
      auto x = pb::LinearTerm::var(f->var);
      auto guard = pb::land(pb::ge(x, pb::LinearTerm(f->lo)), pb::ge(pb::LinearTerm(f->hi), x));
      auto body = to_pb(f->kids[0]);
      return f->k == PNode::Ex ? pb::exists(f->var, pb::land(guard, body))
                               : pb::forall(f->var, pb::lor(pb::lnot(guard), body));
    }
  }
  return pb::top();
}

struct PresburgerGen {
  std::mt19937_64 rng;
  explicit PresburgerGen(std::uint64_t seed) : rng(seed) {}

  std::int64_t uni(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  PF atom(const std::vector<std::string>& vars) {
    auto n = std::make_shared<PNode>();
    int r = static_cast<int>(uni(0, 2));
    n->k = r == 0 ? PNode::Ge : r == 1 ? PNode::Eq : PNode::Cong;
    for (auto& v : vars)
      if (uni(0, 2) > 0) n->coeffs[v] = uni(-9, 9);
    n->c = uni(-20, 20);
    if (n->k == PNode::Cong) n->d = uni(2, 12);
    return n;
  }

  PF body(const std::vector<std::string>& vars, int size) {
    if (size <= 1) return atom(vars);
    auto n = std::make_shared<PNode>();
    int r = static_cast<int>(uni(0, 4));
    if (r == 0) {
      n->k = PNode::Not;
      n->kids = {body(vars, size - 1)};
      return n;
    }
    n->k = r <= 2 ? PNode::And : PNode::Or;
    n->kids = {body(vars, size / 2), body(vars, size - size / 2)};
    return n;
  }

  /// Closed formula with `q` (1..3) nested bounded quantifiers.
  PF closed(int q) {
    std::vector<std::string> vars;
    for (int i = 0; i < q; ++i) vars.push_back("v" + std::to_string(i));
    PF f = body(vars, static_cast<int>(uni(1, 4)));
    for (int i = q - 1; i >= 0; --i) {
      auto n = std::make_shared<PNode>();
      n->k = uni(0, 1) ? PNode::Ex : PNode::All;
      n->var = vars[static_cast<std::size_t>(i)];
      std::int64_t span = q == 3 ? 20 : 60;
      n->lo = uni(-span, 0);
      n->hi = uni(0, span);
      n->kids = {f};
      f = n;
    }
    return f;
  }
};

// ---- finite-field counts ----------------------------------------------------

inline std::int64_t count_gl2(std::int64_t p) {
  std::int64_t n = 0;
  for (std::int64_t a = 0; a < p; ++a)
    for (std::int64_t b = 0; b < p; ++b)
      for (std::int64_t c = 0; c < p; ++c)
        for (std::int64_t d = 0; d < p; ++d)
          if (mod_floor(a * d - b * c, p) != 0) ++n;
  return n;
}

// ---- E-matrices with rational entries ---------------------------------------

// x + y sqrt(e) over Q, e a fixed integer.
struct QE2 {
  Rational x{0}, y{0};
};

struct RatE {
  std::int64_t e;
  QE2 add(const QE2& a, const QE2& b) const { return {a.x + b.x, a.y + b.y}; }
  QE2 sub(const QE2& a, const QE2& b) const { return {a.x - b.x, a.y - b.y}; }
  QE2 mul(const QE2& a, const QE2& b) const { return {a.x * b.x + Rational(e) * a.y * b.y, a.x * b.y + a.y * b.x}; }
  QE2 scale(const Rational& r, const QE2& a) const { return {r * a.x, r * a.y}; }
};

using RMat = std::vector<std::vector<QE2>>;

inline RMat rmul(const RatE& E, const RMat& a, const RMat& b) {
  std::size_t n = a.size();
  RMat c(n, std::vector<QE2>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] = E.add(c[i][j], E.mul(a[i][k], b[k][j]));
  return c;
}

/// Char-poly coefficients c_0..c_{n-1} by Faddeev-LeVerrier (characteristic 0).
inline std::vector<QE2> faddeev(const RatE& E, const RMat& A) {
  std::size_t n = A.size();
  std::vector<QE2> c(n + 1);
  c[n] = {Rational(1), Rational(0)};
  RMat M(n, std::vector<QE2>(n));
  for (std::size_t k = 1; k <= n; ++k) {
    RMat AM = rmul(E, A, M);
    for (std::size_t i = 0; i < n; ++i) AM[i][i] = E.add(AM[i][i], c[n - k + 1]);
    M = AM;
    RMat AMk = rmul(E, A, M);
    QE2 tr;
    for (std::size_t i = 0; i < n; ++i) tr = E.add(tr, AMk[i][i]);
    c[n - k] = E.scale(Rational(-1) / Rational(static_cast<std::int64_t>(k)), tr);
  }
  c.pop_back();
  return c;
}

/// Hankel moment determinant by fraction-free Gaussian elimination over Q(sqrt e).
inline QE2 hankel_delta(const RatE& E, const RMat& A) {
  std::size_t n = A.size();
  std::vector<QE2> mom;
  RMat P(n, std::vector<QE2>(n));
  for (std::size_t i = 0; i < n; ++i) P[i][i] = {Rational(1), Rational(0)};
  for (std::size_t k = 0; k + 1 < 2 * n; ++k) {
    mom.push_back(P[0][0]);
    P = rmul(E, P, A);
  }
  // Expand by permutations (n <= 3).
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  QE2 det;
  do {
    int inv = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inv;
    QE2 t{Rational(inv % 2 ? -1 : 1), Rational(0)};
    for (std::size_t i = 0; i < n; ++i) t = E.mul(t, mom[i + perm[i]]);
    det = E.add(det, t);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

/// Rational in Q_p / F_p((t)) (denominator prime to p for LAURENT).
inline VFE embed(const Structure& S, const Rational& r) {
  VFE num = S.integer(boost::multiprecision::numerator(r));
  VFE den = S.integer(boost::multiprecision::denominator(r));
  return num * den.inverse();
}

inline QE embed(const Structure& S, const QE2& z) { return {embed(S, z.x), embed(S, z.y)}; }

// ---- n = 2 orbital integral by residue enumeration -----------------------------

struct OrbitalOracle {
  Rational value{0}, plus{0}, minus{0};
};

/// Sum over t = w^m * u (u a unit residue cell mod w^depth, |m| <= window) of
/// eta(t) * vol(cell) * [g^-1 A g is an integral point of s_2], g = diag(1, t),
/// with the integrality decided by the evaluator on the s_2_integral fixture.
inline OrbitalOracle orbital_gl_enumerate(const QuadField& E, const MatrixE& A, int depth, int window) {
  const Structure& S = E.base();
  DefinableSet X = fixtures::s_n_integral(2);
  Evaluator ev(S);
  OrbitalOracle out;
  std::uint32_t p = S.p;
  // Unit cells: first digit nonzero, remaining depth-1 digits free.
  std::vector<std::vector<std::uint32_t>> cells;
  std::function<void(std::vector<std::uint32_t>)> rec = [&](std::vector<std::uint32_t> ds) {
    if (static_cast<int>(ds.size()) == depth) {
      cells.push_back(ds);
      return;
    }
    for (std::uint32_t d = (ds.empty() ? 1u : 0u); d < p; ++d) {
      auto n = ds;
      n.push_back(d);
      rec(n);
    }
  };
  rec({});
  Rational w = Rational(1) / Rational(static_cast<std::int64_t>(cells.size()));
  for (int m = -window; m <= window; ++m)
    for (auto& ds : cells) {
      VFE t = VFE::from_digits(S.backend, p, m, ds, depth, S.precision);
      VFE ti = t.inverse();
      Assignment pt;
      auto put = [&](int i, int j, const QE& z) {
        pt["x" + std::to_string(i) + std::to_string(j)] = z.x;
        pt["y" + std::to_string(i) + std::to_string(j)] = z.y;
      };
      put(0, 0, A.at(0, 0));
      put(0, 1, E.scale(t, A.at(0, 1)));
      put(1, 0, E.scale(ti, A.at(1, 0)));
      put(1, 1, A.at(1, 1));
      Truth tr = ev.evaluate(X.formula, pt).value;
      if (tr == Truth::Unknown) throw std::runtime_error("oracle cell undecided");
      if (tr == Truth::True) (m % 2 == 0 ? out.plus : out.minus) += w;
    }
  out.value = out.plus - out.minus;
  return out;
}

}  // namespace oracle
