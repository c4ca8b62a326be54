#pragma once

// Matrix invariants, strong regularity, matching and orbital integrals for
// the pair (s_n, GL_{n-1}) / (u_n, U_{n-1}). Basis e_0..e_{n-1}; GL_{n-1}
// acts on W = span(e_1..e_{n-1}) via g -> diag(1, g). The Hermitian form is
// the identity matrix.

#include <optional>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/numeric.hpp"
#include "dpkit/quadext.hpp"
#include "dpkit/valued_field.hpp"

namespace dpkit::jr {

/// eta(x) = (-1)^ord(x); 0 at x = 0.
inline int eta(const VFE& x, const Structure& S) {
  (void)S.eps();
  if (x.is_zero()) return 0;
  if (x.is_ball()) fail(ErrorKind::PrecisionExhausted, "eta of an element with unknown valuation");
  return x.valuation().value() % 2 == 0 ? 1 : -1;
}

/// eta on E via the E-valuation (used for transfer factors).
inline int eta_e(const QuadField& E, const QE& z) {
  if (E.is_zero(z)) return 0;
  ZExt v = E.ord(z);
  return v.value() % 2 == 0 ? 1 : -1;
}

struct InvariantVector {
  std::vector<QE> a;  // a_0 .. a_{n-1}
  std::vector<QE> b;  // b_1 .. b_{n-1}
  QE delta;
  ZExt nu = ZExt::infinity();
};

inline std::vector<MatrixE> powers(const QuadField& E, const MatrixE& A, int count) {
  std::vector<MatrixE> out{mat_identity(E, A.n)};
  for (int i = 1; i < count; ++i) out.push_back(mat_mul(E, out.back(), A));
  return out;
}

inline void require_square(const MatrixE& A) {
  if (A.n < 2 || A.a.size() != static_cast<std::size_t>(A.n * A.n))
    fail(ErrorKind::InvalidArgument, "expected a square matrix of size >= 2");
}

inline InvariantVector invariants(const QuadField& E, const MatrixE& A) {
  require_square(A);
  int n = A.n;
  InvariantVector iv;
  auto cp = char_poly(E, A);
  iv.a.assign(cp.begin(), cp.begin() + n);
  auto pw = powers(E, A, 2 * n - 1);
  for (int i = 1; i < n; ++i) iv.b.push_back(pw[static_cast<std::size_t>(i)].at(0, 0));
  std::vector<std::vector<QE>> h(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h[static_cast<std::size_t>(i)].push_back(pw[static_cast<std::size_t>(i + j)].at(0, 0));
  iv.delta = det(E, h);
  if (!E.is_zero(iv.delta) && !E.is_nonzero(iv.delta))
    fail(ErrorKind::PrecisionExhausted, "delta is not determined at working precision");
  iv.nu = E.is_zero(iv.delta) ? ZExt::infinity() : E.ord(iv.delta);
  return iv;
}

/// det[e_0, A e_0, ..., A^{n-1} e_0] (columns).
inline QE krylov_det(const QuadField& E, const MatrixE& A) {
  auto pw = powers(E, A, A.n);
  std::vector<std::vector<QE>> m(static_cast<std::size_t>(A.n));
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) m[static_cast<std::size_t>(i)].push_back(pw[static_cast<std::size_t>(j)].at(i, 0));
  return det(E, m);
}

/// det[e_0*; e_0* A; ...; e_0* A^{n-1}] (rows).
inline QE dual_krylov_det(const QuadField& E, const MatrixE& A) {
  auto pw = powers(E, A, A.n);
  std::vector<std::vector<QE>> m(static_cast<std::size_t>(A.n));
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) m[static_cast<std::size_t>(i)].push_back(pw[static_cast<std::size_t>(i)].at(0, j));
  return det(E, m);
}

inline bool strongly_regular(const QuadField& E, const MatrixE& A) {
  require_square(A);
  auto decided = [&](const QE& d) {
    if (E.is_zero(d)) return false;
    if (E.is_nonzero(d)) return true;
    fail(ErrorKind::PrecisionExhausted, "near-singular basis test");
  };
  bool both = decided(krylov_det(E, A)) && decided(dual_krylov_det(E, A));
  bool delta = !E.is_zero(invariants(E, A).delta);
  if (both != delta) fail(ErrorKind::PrecisionExhausted, "basis test disagrees with delta at working precision");
  return both;
}

inline bool invariants_match(const QuadField& E, const InvariantVector& u, const InvariantVector& v) {
  if (u.a.size() != v.a.size()) return false;
  for (std::size_t i = 0; i < u.a.size(); ++i)
    if (!E.equal(u.a[i], v.a[i])) return false;
  for (std::size_t i = 0; i < u.b.size(); ++i)
    if (!E.equal(u.b[i], v.b[i])) return false;
  return true;
}

/// s_n: entries in sqrt(eps) * F.
inline bool in_s(const MatrixE& A) {
  for (auto& e : A.a)
    if (!e.x.is_zero()) return false;
  return true;
}

/// u_n: sigma(A)^T = -A.
inline bool in_u(const QuadField& E, const MatrixE& A) {
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      if (E.is_nonzero(E.add(A.at(i, j), E.sigma(A.at(j, i))))) return false;
  return true;
}

namespace detail {

// +1 integral, 0 not integral, -1 undetermined.
inline int integral(const VFE& v) {
  if (v.is_zero()) return 1;
  if (v.is_ball()) return v.valuation().value() >= 0 ? 1 : -1;
  return v.valuation().value() >= 0 ? 1 : 0;
}

inline bool all_integral(const std::vector<VFE>& xs) {
  for (auto& v : xs) {
    int r = integral(v);
    if (r < 0) fail(ErrorKind::PrecisionExhausted, "integrality not determined at working precision");
    if (r == 0) return false;
  }
  return true;
}

using FMat = std::vector<VFE>;  // row-major

inline FMat fmul(const FMat& A, const FMat& B, int n, const Structure& S) {
  FMat C(static_cast<std::size_t>(n * n), S.zero());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const VFE& a = A[static_cast<std::size_t>(i * n + k)];
      if (a.is_zero()) continue;
      for (int j = 0; j < n; ++j) {
        const VFE& b = B[static_cast<std::size_t>(k * n + j)];
        if (b.is_zero()) continue;
        auto& c = C[static_cast<std::size_t>(i * n + j)];
        c = c + a * b;
      }
    }
  return C;
}

inline void ensure_orbital_input(const QuadField& E, const MatrixE& A) {
  require_square(A);
  if (A.n != 2 && A.n != 3) fail(ErrorKind::InvalidArgument, "orbital integrals are implemented for n in {2, 3}");
  if (!strongly_regular(E, A)) fail(ErrorKind::NotStronglyRegular, "matrix is not strongly regular");
}

}  // namespace detail

enum class Method { ClosedForm, Enumeration };

inline std::string to_string(Method m) { return m == Method::ClosedForm ? "CLOSED_FORM" : "ENUMERATION"; }

struct OrbitalConfig {
  int depth = 0;      // 0: automatic
  int max_depth = 4;  // automatic search limit for n = 3
  bool force_enumeration = false;
};

struct OrbitalResult {
  Rational value{0}, plus_part{0}, minus_part{0};
  Method method = Method::ClosedForm;
  int depth = 0;
  bool depth_insufficient = false;
  long cosets = 0;
};

namespace detail {

// Lattice sum over GL_{n-1}(F)/GL_{n-1}(O) for A = sqrt(eps) * Y, window D.
// Returns (plus, minus, boundary hit, cosets).
struct LatticeSum {
  long plus = 0, minus = 0, cosets = 0;
  bool boundary = false;
};

inline LatticeSum gl_lattices(const Structure& S, const FMat& Y, int n, int D) {
  LatticeSum out;
  auto conj_ok = [&](const FMat& h, const FMat& hinv) { return all_integral(fmul(fmul(hinv, Y, n, S), h, n, S)); };
  auto ordv = [&](const VFE& v) -> std::optional<std::int64_t> {
    if (v.is_zero()) return std::nullopt;
    return v.valuation().value();
  };
  if (n == 2) {
    for (int a = -D; a <= D; ++a) {
      FMat h{S.one(), S.zero(), S.zero(), S.pi_power(a)};
      FMat hi{S.one(), S.zero(), S.zero(), S.pi_power(-a)};
      ++out.cosets;
      if (!conj_ok(h, hi)) continue;
      (a % 2 == 0 ? out.plus : out.minus) += 1;
      if (a == D || a == -D) out.boundary = true;
    }
    return out;
  }
  auto at = [&](int i, int j) -> const VFE& { return Y[static_cast<std::size_t>(i * 3 + j)]; };
  // Necessary conditions: pi^a Y01 and pi^-b Y20 integral.
  auto o01 = ordv(at(0, 1)), o20 = ordv(at(2, 0));
  int a_lo = -D, b_hi = D;
  if (o01) a_lo = std::max<int>(a_lo, static_cast<int>(-*o01));
  if (o20) b_hi = std::min<int>(b_hi, static_cast<int>(*o20));
  std::uint32_t p = S.p;
  for (int a = a_lo; a <= D; ++a)
    for (int b = -D; b <= b_hi; ++b) {
      int ndig = a + D;  // digits of c at pi^-D .. pi^(a-1)
      std::vector<std::uint32_t> dig(static_cast<std::size_t>(std::max(ndig, 0)), 0);
      while (true) {
        VFE c = S.zero();
        bool low = false;
        for (int i = 0; i < ndig; ++i)
          if (dig[static_cast<std::size_t>(i)] != 0) {
            c = c + S.integer(dig[static_cast<std::size_t>(i)]) * S.pi_power(i - D);
            if (i == 0) low = true;
          }
        VFE pa = S.pi_power(a), pb = S.pi_power(b);
        FMat h{S.one(), S.zero(), S.zero(), S.zero(), pa, c, S.zero(), S.zero(), pb};
        FMat hi{S.one(),         S.zero(), S.zero(), S.zero(), S.pi_power(-a), -(c * S.pi_power(-a - b)),
                S.zero(),        S.zero(), S.pi_power(-b)};
        ++out.cosets;
        if (conj_ok(h, hi)) {
          ((a + b) % 2 == 0 ? out.plus : out.minus) += 1;
          if (a == D || a == -D || b == D || b == -D || low) out.boundary = true;
        }
        int k = 0;
        while (k < ndig && ++dig[static_cast<std::size_t>(k)] == p) dig[static_cast<std::size_t>(k++)] = 0;
        if (k >= ndig) break;
      }
    }
  return out;
}

// Self-dual O_E-lattices in E^2 (identity form) stable for A', window a <= D.
inline LatticeSum u_lattices(const QuadField& E, const MatrixE& A, int D) {
  const Structure& S = E.base();
  LatticeSum out;
  auto check = [&](const MatrixE& h, const MatrixE& hi) {
    MatrixE C = mat_mul(E, mat_mul(E, hi, A), h);
    std::vector<VFE> xs;
    for (auto& e : C.a) {
      xs.push_back(e.x);
      xs.push_back(e.y);
    }
    return all_integral(xs);
  };
  if (A.n == 2) {
    ++out.cosets;
    if (check(mat_identity(E, 2), mat_identity(E, 2))) out.plus = 1;
    return out;
  }
  std::uint32_t p = S.p;
  for (int a = 0; a <= D; ++a) {
    int levels = 2 * a;
    // Depth-first over digits of c' = sum (x_i + y_i sqrt eps) pi^i with
    // N(c') = -1 mod pi^(i+1) at every level.
    std::vector<std::pair<QE, int>> stack{{E.zero(), 0}};
    while (!stack.empty()) {
      auto [cp, lvl] = stack.back();
      stack.pop_back();
      if (lvl == levels) {
        QE c = E.scale(S.pi_power(-a), cp);
        MatrixE h = mat_identity(E, 3), hi = mat_identity(E, 3);
        h.at(1, 1) = E.from_base(S.pi_power(a));
        h.at(1, 2) = c;
        h.at(2, 2) = E.from_base(S.pi_power(-a));
        hi.at(1, 1) = E.from_base(S.pi_power(-a));
        hi.at(1, 2) = E.neg(c);
        hi.at(2, 2) = E.from_base(S.pi_power(a));
        ++out.cosets;
        if (check(h, hi)) {
          out.plus += 1;
          if (a == D) out.boundary = true;
        }
        continue;
      }
      VFE w = S.pi_power(lvl);
      for (std::uint32_t x = 0; x < p; ++x)
        for (std::uint32_t y = 0; y < p; ++y) {
          QE nc = E.add(cp, QE{S.integer(x) * w, S.integer(y) * w});
          VFE r = E.norm(nc) + S.one();
          if (!r.is_zero() && r.valuation().value() < lvl + 1) continue;
          stack.push_back({nc, lvl + 1});
        }
    }
  }
  return out;
}

inline FMat y_part(const MatrixE& A) {
  FMat Y;
  for (auto& e : A.a) Y.push_back(e.y);
  return Y;
}

}  // namespace detail

inline OrbitalResult orbital_gl(const QuadField& E, const MatrixE& A, const OrbitalConfig& cfg = {}) {
  detail::ensure_orbital_input(E, A);
  if (!in_s(A)) fail(ErrorKind::InvalidArgument, "matrix is not in s_n (entries must lie in sqrt(eps)*F)");
  const Structure& S = E.base();
  detail::FMat Y = detail::y_part(A);
  OrbitalResult r;
  if (A.n == 2 && !cfg.force_enumeration) {
    r.method = Method::ClosedForm;
    if (detail::all_integral({Y[0], Y[3]})) {
      if (!Y[1].is_nonzero() || !Y[2].is_nonzero())
        fail(ErrorKind::PrecisionExhausted, "off-diagonal valuation not determined");
      std::int64_t lo = -Y[1].valuation().value(), hi = Y[2].valuation().value();
      for (std::int64_t m = lo; m <= hi; ++m) (m % 2 == 0 ? r.plus_part : r.minus_part) += 1;
    }
    r.value = r.plus_part - r.minus_part;
    return r;
  }
  r.method = Method::Enumeration;
  auto run = [&](int D) {
    auto s = detail::gl_lattices(S, Y, A.n, D);
    r.plus_part = s.plus;
    r.minus_part = s.minus;
    r.value = r.plus_part - r.minus_part;
    r.depth = D;
    r.cosets = s.cosets;
    r.depth_insufficient = s.boundary;
  };
  if (cfg.depth > 0) {
    run(cfg.depth);
  } else {
    for (int D = 2; D <= cfg.max_depth; ++D) {
      run(D);
      if (!r.depth_insufficient) break;
    }
  }
  return r;
}

inline OrbitalResult orbital_unitary(const QuadField& E, const MatrixE& A, const OrbitalConfig& cfg = {}) {
  detail::ensure_orbital_input(E, A);
  if (!in_u(E, A)) fail(ErrorKind::NotInUnitarySide, "matrix is not in u_n");
  OrbitalResult r;
  auto run = [&](int D) {
    auto s = detail::u_lattices(E, A, D);
    r.plus_part = s.plus;
    r.minus_part = 0;
    r.value = r.plus_part;
    r.depth = D;
    r.cosets = s.cosets;
    r.depth_insufficient = s.boundary;
  };
  if (A.n == 2) {
    r.method = Method::ClosedForm;
    run(0);
    return r;
  }
  r.method = Method::Enumeration;
  if (cfg.depth > 0) {
    run(cfg.depth);
  } else {
    for (int D = 2; D <= cfg.max_depth; ++D) {
      run(D);
      if (!r.depth_insufficient) break;
    }
  }
  return r;
}

struct MatchedPair {
  MatrixE A, A_prime;
};

/// Unitary partner of A in s_2: same diagonal, off-diagonal z with
/// N(z) = -eps * Y01 * Y10.
inline MatrixE match_unitary(const QuadField& E, const MatrixE& A) {
  if (A.n != 2 || !in_s(A)) fail(ErrorKind::InvalidArgument, "matching is implemented for A in s_2");
  const Structure& S = E.base();
  detail::FMat Y = detail::y_part(A);
  VFE c = -(E.eps() * Y[1] * Y[2]);
  QE z = E.zero();
  if (!c.is_zero()) {
    if (!c.is_nonzero()) fail(ErrorKind::PrecisionExhausted, "off-diagonal product not determined");
    std::int64_t v = c.valuation().value();
    if (v % 2 != 0)
      fail(ErrorKind::InvalidArgument, "-eps*A01*A10 is not a norm; no partner for this Hermitian form");
    VFE u = c * S.pi_power(-v);
    int prec = c.is_exact() ? S.precision : c.precision();
    std::optional<QE> unit;
    for (std::uint32_t y0 = 0; y0 < S.p && !unit; ++y0) {
      VFE yy = S.integer(y0);
      VFE w = u + E.eps() * yy * yy;
      if (!w.is_nonzero() || w.valuation().value() != 0) continue;
      std::uint32_t l = *w.leading_digit();
      if (legendre(l, S.p) != 1) continue;
      unit = QE{sqrt_in_base(S, w, prec), yy};
    }
    if (!unit) fail(ErrorKind::PrecisionExhausted, "no norm preimage found");
    z = E.scale(S.pi_power(v / 2), *unit);
  }
  MatrixE B = A;
  B.at(0, 1) = z;
  B.at(1, 0) = E.neg(E.sigma(z));
  return B;
}

enum class SignMode { Plus, Minus, EtaDelta, ParityNu };

inline std::string to_string(SignMode m) {
  switch (m) {
    case SignMode::Plus: return "PLUS";
    case SignMode::Minus: return "MINUS";
    case SignMode::EtaDelta: return "ETA_DELTA";
    case SignMode::ParityNu: return "PARITY_NU";
  }
  return "?";
}

inline SignMode parse_sign_mode(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (char& ch : s)
    if (ch == '-') ch = '_';
  if (s == "PLUS") return SignMode::Plus;
  if (s == "MINUS") return SignMode::Minus;
  if (s == "ETA_DELTA") return SignMode::EtaDelta;
  if (s == "PARITY_NU") return SignMode::ParityNu;
  fail(ErrorKind::InvalidArgument, "unknown sign mode '" + s + "'");
}

inline const std::vector<SignMode>& all_sign_modes() {
  static const std::vector<SignMode> m{SignMode::Plus, SignMode::Minus, SignMode::EtaDelta, SignMode::ParityNu};
  return m;
}

struct FlReport {
  OrbitalResult gl, u;
  SignMode mode = SignMode::Plus;
  int factor = 1;
  Rational residual{0};
  bool equal = false;
  ZExt nu;
};

/// Transfer factor: ETA_DELTA uses eta of the Krylov determinant
/// det[e_0, A e_0, ..., A^{n-1} e_0]; PARITY_NU uses (-1)^nu.
inline int transfer_factor(const QuadField& E, const MatrixE& A, SignMode mode, const InvariantVector& iv) {
  switch (mode) {
    case SignMode::Plus: return 1;
    case SignMode::Minus: return -1;
    case SignMode::EtaDelta: return eta_e(E, krylov_det(E, A));
    case SignMode::ParityNu: return iv.nu.is_infinite() ? 0 : (iv.nu.value() % 2 == 0 ? 1 : -1);
  }
  return 1;
}

inline FlReport fl_check(const QuadField& E, const MatchedPair& pair, SignMode mode, const OrbitalConfig& cfg = {}) {
  auto ia = invariants(E, pair.A), ib = invariants(E, pair.A_prime);
  if (!invariants_match(E, ia, ib)) fail(ErrorKind::InvariantMismatch, "the two matrices have different invariants");
  FlReport r;
  r.mode = mode;
  r.nu = ia.nu;
  r.gl = orbital_gl(E, pair.A, cfg);
  r.u = orbital_unitary(E, pair.A_prime, cfg);
  r.factor = transfer_factor(E, pair.A, mode, ia);
  r.residual = Rational(r.factor) * r.gl.value - r.u.value;
  r.equal = r.residual == 0;
  return r;
}

}  // namespace dpkit::jr
