#pragma once

// The unramified quadratic extension E = F(sqrt(eps)) as pairs of
// F-elements, and square matrices over it.

#include <functional>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/numeric.hpp"
#include "dpkit/valued_field.hpp"

namespace dpkit {

/// x + y*sqrt(eps); in the split variant the ordered pair (x, y).
struct QuadExtElement {
  VFE x, y;
};

using QE = QuadExtElement;

/// Arithmetic context for E over a Structure.
class QuadField {
 public:
  explicit QuadField(const Structure& S, bool split = false) : S_(S), split_(split) {
    if (!split) eps_ = S.eps();
  }

  const Structure& base() const { return S_; }
  bool split() const { return split_; }
  const VFE& eps() const { return eps_; }

  QE zero() const { return {S_.zero(), S_.zero()}; }
  QE one() const { return split_ ? QE{S_.one(), S_.one()} : QE{S_.one(), S_.zero()}; }
  QE from_base(const VFE& a) const { return split_ ? QE{a, a} : QE{a, S_.zero()}; }
  QE sqrt_eps() const {
    if (split_) fail(ErrorKind::InvalidArgument, "no sqrt(eps) in the split algebra");
    return {S_.zero(), S_.one()};
  }
  QE integer(std::int64_t n) const { return from_base(S_.integer(n)); }

  QE add(const QE& a, const QE& b) const { return {a.x + b.x, a.y + b.y}; }
  QE neg(const QE& a) const { return {-a.x, -a.y}; }
  QE sub(const QE& a, const QE& b) const { return {a.x - b.x, a.y - b.y}; }
  QE mul(const QE& a, const QE& b) const {
    if (split_) return {a.x * b.x, a.y * b.y};
    return {a.x * b.x + eps_ * a.y * b.y, a.x * b.y + a.y * b.x};
  }
  QE scale(const VFE& c, const QE& a) const { return {c * a.x, c * a.y}; }

  QE sigma(const QE& a) const { return split_ ? QE{a.y, a.x} : QE{a.x, -a.y}; }
  VFE norm(const QE& a) const { return split_ ? a.x * a.y : a.x * a.x - eps_ * a.y * a.y; }
  /// Trace a + sigma(a), an element of F.
  VFE trace(const QE& a) const { return split_ ? a.x + a.y : a.x + a.x; }

  QE inverse(const QE& a) const {
    if (split_) return {a.x.inverse(), a.y.inverse()};
    VFE n = norm(a);
    if (n.is_zero()) fail(ErrorKind::DivisionByZero, "inverse of 0 in E");
    VFE ni = n.inverse();
    QE s = sigma(a);
    return {s.x * ni, s.y * ni};
  }

  bool is_zero(const QE& a) const { return a.x.is_zero() && a.y.is_zero(); }
  /// Known nonzero (some coordinate known nonzero).
  bool is_nonzero(const QE& a) const { return a.x.is_nonzero() || a.y.is_nonzero(); }

  /// E-valuation: min of the coordinate valuations (unramified case).
  ZExt ord(const QE& a) const {
    ZExt ox = a.x.valuation(), oy = a.y.valuation();
    bool known = (!a.x.is_ball() || !a.y.is_ball());
    ZExt m = ox < oy ? ox : oy;
    if (a.x.is_ball() || a.y.is_ball()) {
      // The minimum is only determined when a known coordinate sits strictly
      // below every ball bound.
      ZExt known_min = ZExt::infinity(), ball_min = ZExt::infinity();
      for (const VFE* c : {&a.x, &a.y}) {
        if (c->is_ball()) ball_min = std::min(ball_min, c->valuation());
        else known_min = std::min(known_min, c->valuation());
      }
      if (!known || !(known_min < ball_min))
        fail(ErrorKind::PrecisionExhausted, "valuation in E not determined at working precision");
      return known_min;
    }
    return m;
  }

  bool equal(const QE& a, const QE& b) const {
    QE d = sub(a, b);
    return !is_nonzero(d);
  }

  std::string str(const QE& a) const {
    if (split_) return "(" + a.x.str() + ", " + a.y.str() + ")";
    if (a.y.is_zero()) return a.x.str();
    if (a.x.is_zero()) return "(" + a.y.str() + ")*sqrt(eps)";
    return a.x.str() + " + (" + a.y.str() + ")*sqrt(eps)";
  }

 private:
  Structure S_;
  bool split_;
  VFE eps_;
};

/// Row-major n x n matrix over E.
struct MatrixE {
  int n = 0;
  std::vector<QE> a;

  QE& at(int i, int j) { return a[static_cast<std::size_t>(i * n + j)]; }
  const QE& at(int i, int j) const { return a[static_cast<std::size_t>(i * n + j)]; }
};

inline MatrixE mat_zero(const QuadField& E, int n) { return {n, std::vector<QE>(static_cast<std::size_t>(n * n), E.zero())}; }

inline MatrixE mat_identity(const QuadField& E, int n) {
  MatrixE m = mat_zero(E, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = E.one();
  return m;
}

inline MatrixE mat_mul(const QuadField& E, const MatrixE& A, const MatrixE& B) {
  if (A.n != B.n) fail(ErrorKind::InvalidArgument, "matrix size mismatch");
  MatrixE C = mat_zero(E, A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) {
      QE s = E.zero();
      for (int k = 0; k < A.n; ++k) s = E.add(s, E.mul(A.at(i, k), B.at(k, j)));
      C.at(i, j) = s;
    }
  return C;
}

inline MatrixE mat_sigma_transpose(const QuadField& E, const MatrixE& A) {
  MatrixE T = mat_zero(E, A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) T.at(i, j) = E.sigma(A.at(j, i));
  return T;
}

/// Determinant by cofactor expansion over any commutative ring.
template <class T, class Add, class Mul, class Neg>
T laplace_det(const std::vector<std::vector<T>>& m, const T& zero, const T& one, Add add, Mul mul, Neg neg) {
  std::size_t n = m.size();
  if (n == 0) return one;
  if (n == 1) return m[0][0];
  T acc = zero;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::vector<T>> minor;
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<T> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(m[i][k]);
      minor.push_back(std::move(row));
    }
    T term = mul(m[0][j], laplace_det(minor, zero, one, add, mul, neg));
    acc = add(acc, j % 2 ? neg(term) : term);
  }
  return acc;
}

inline QE det(const QuadField& E, const std::vector<std::vector<QE>>& m) {
  return laplace_det<QE>(
      m, E.zero(), E.one(), [&](const QE& a, const QE& b) { return E.add(a, b); },
      [&](const QE& a, const QE& b) { return E.mul(a, b); }, [&](const QE& a) { return E.neg(a); });
}

inline QE det(const QuadField& E, const MatrixE& A) {
  std::vector<std::vector<QE>> rows(static_cast<std::size_t>(A.n));
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) rows[static_cast<std::size_t>(i)].push_back(A.at(i, j));
  return det(E, rows);
}

/// Coefficients c_0..c_n of det(lambda I - A) = sum c_i lambda^i (c_n = 1).
inline std::vector<QE> char_poly(const QuadField& E, const MatrixE& A) {
  using P = std::vector<QE>;
  auto trim = [&](P p) {
    while (p.size() > 1 && E.is_zero(p.back())) p.pop_back();
    return p;
  };
  auto padd = [&](const P& a, const P& b) {
    P r(std::max(a.size(), b.size()), E.zero());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = E.add(r[i], a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = E.add(r[i], b[i]);
    return trim(r);
  };
  auto pmul = [&](const P& a, const P& b) {
    P r(a.size() + b.size() - 1, E.zero());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = E.add(r[i + j], E.mul(a[i], b[j]));
    return trim(r);
  };
  auto pneg = [&](const P& a) {
    P r;
    for (auto& c : a) r.push_back(E.neg(c));
    return r;
  };
  std::vector<std::vector<P>> m(static_cast<std::size_t>(A.n));
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) {
      P e{E.neg(A.at(i, j))};
      if (i == j) e.push_back(E.one());
      m[static_cast<std::size_t>(i)].push_back(e);
    }
  P d = laplace_det<P>(m, P{E.zero()}, P{E.one()}, padd, pmul, pneg);
  d.resize(static_cast<std::size_t>(A.n) + 1, E.zero());
  return d;
}

/// Square root of a unit-square element of F to relative precision `prec`
/// (Newton iteration from a residue root).
inline VFE sqrt_in_base(const Structure& S, const VFE& w, int prec) {
  if (w.is_zero()) return w;
  if (!w.is_nonzero()) fail(ErrorKind::PrecisionExhausted, "square root of an element with no known digits");
  std::int64_t v = w.valuation().value();
  if (v % 2 != 0) fail(ErrorKind::InvalidArgument, "odd valuation has no square root");
  std::uint32_t p = S.p;
  std::uint32_t lead = *w.leading_digit();
  std::optional<std::uint32_t> r0;
  for (std::uint32_t r = 1; r < p && !r0; ++r)
    if (static_cast<std::uint64_t>(r) * r % p == lead) r0 = r;
  if (!r0) fail(ErrorKind::InvalidArgument, "not a square");
  VFE u = w * S.pi_power(-v);
  if (u.is_exact()) u = u.truncated(prec);
  VFE r = S.integer(*r0).truncated(prec);
  VFE half = S.integer(2).inverse().truncated(prec);
  for (int i = 0; (1 << i) <= 2 * prec + 2; ++i) r = half * (r + u * r.inverse());
  return r * S.pi_power(v / 2);
}

}  // namespace dpkit
