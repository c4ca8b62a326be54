#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace dpkit;
using namespace dpkit::jr;

namespace {

Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n) / Rational(d); }

// A = sqrt(eps) * Y, Y given row-major over F.
MatrixE s_matrix(const QuadField& E, int n, const std::vector<VFE>& y) {
  MatrixE A{n, {}};
  for (auto& v : y) A.a.push_back({E.base().zero(), v});
  return A;
}

MatrixE s_int(const QuadField& E, int n, const std::vector<std::int64_t>& y) {
  std::vector<VFE> v;
  for (auto c : y) v.push_back(E.base().integer(c));
  return s_matrix(E, n, v);
}

MatrixE base_matrix(const QuadField& E, int n, const std::vector<std::int64_t>& x) {
  MatrixE A{n, {}};
  for (auto c : x) A.a.push_back(E.integer(c));
  return A;
}

// y = u * pi^v with a unit u.
VFE unit_times(const Structure& S, std::int64_t u, std::int64_t v) { return S.integer(u) * S.pi_power(v); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::InvalidArgument;
}

bool same(const QuadField& E, const QE& a, const QE& b) { return E.equal(a, b); }

}  // namespace

TEST(Eta, Examples) {
  auto S = Structure::make(Backend::Padic, 5);
  EXPECT_EQ(eta(S.integer(3), S), 1);
  EXPECT_EQ(eta(S.pi_power(1), S), -1);
  EXPECT_EQ(eta(S.pi_power(2) * S.integer(2), S), 1);
  EXPECT_EQ(eta(S.zero(), S), 0);
}

TEST(Eta, Homomorphism) {
  std::mt19937_64 rng(9);
  for (std::uint32_t p : {3u, 5u, 7u}) {
    auto S = Structure::make(Backend::Laurent, p);
    for (int i = 0; i < 100; ++i) {
      VFE x = unit_times(S, 1 + static_cast<std::int64_t>(rng() % (p - 1)), static_cast<std::int64_t>(rng() % 9) - 4);
      VFE y = unit_times(S, 1 + static_cast<std::int64_t>(rng() % (p - 1)), static_cast<std::int64_t>(rng() % 9) - 4);
      EXPECT_EQ(eta(x * y, S), eta(x, S) * eta(y, S));
    }
  }
}

TEST(Invariants, SwapMatrix) {
  QuadField E(Structure::make(Backend::Padic, 5));
  auto iv = invariants(E, base_matrix(E, 2, {0, 1, 1, 0}));
  ASSERT_EQ(iv.a.size(), 2u);
  EXPECT_TRUE(same(E, iv.a[0], E.integer(-1)));
  EXPECT_TRUE(same(E, iv.a[1], E.zero()));
  ASSERT_EQ(iv.b.size(), 1u);
  EXPECT_TRUE(same(E, iv.b[0], E.zero()));
  EXPECT_TRUE(same(E, iv.delta, E.one()));
  EXPECT_EQ(iv.nu.value(), 0);
  EXPECT_TRUE(strongly_regular(E, base_matrix(E, 2, {0, 1, 1, 0})));
}

TEST(Invariants, DegenerateMatrices) {
  QuadField E(Structure::make(Backend::Padic, 7));
  auto d = base_matrix(E, 2, {2, 0, 0, 5});
  EXPECT_TRUE(E.is_zero(invariants(E, d).delta));
  EXPECT_FALSE(strongly_regular(E, d));
  for (int n : {2, 3}) {
    auto I = mat_identity(E, n);
    EXPECT_TRUE(E.is_zero(invariants(E, I).delta));
    EXPECT_TRUE(invariants(E, I).nu.is_infinite());
  }
}

TEST(Invariants, AgainstRationalOracle) {
  std::mt19937_64 rng(17);
  for (std::uint32_t p : {5u, 7u}) {
    auto S = Structure::make(Backend::Padic, p);
    QuadField E(S);
    std::int64_t e = static_cast<std::int64_t>(smallest_nonresidue(p));
    oracle::RatE RE{e};
    for (int n : {2, 3}) {
      for (int trial = 0; trial < 40; ++trial) {
        oracle::RMat M(static_cast<std::size_t>(n), std::vector<oracle::QE2>(static_cast<std::size_t>(n)));
        MatrixE A{n, {}};
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            std::int64_t x = static_cast<std::int64_t>(rng() % 11) - 5, y = static_cast<std::int64_t>(rng() % 11) - 5;
            M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = {Rational(x), Rational(y)};
            A.a.push_back({S.integer(x), S.integer(y)});
          }
        auto iv = invariants(E, A);
        auto want = oracle::faddeev(RE, M);
        for (int k = 0; k < n; ++k)
          EXPECT_TRUE(same(E, iv.a[static_cast<std::size_t>(k)], oracle::embed(S, want[static_cast<std::size_t>(k)])));
        EXPECT_TRUE(same(E, iv.delta, oracle::embed(S, oracle::hankel_delta(RE, M))));
        EXPECT_EQ(strongly_regular(E, A), !E.is_zero(iv.delta));
      }
    }
  }
}

TEST(Invariants, ConjugationByEmbeddedGroup) {
  std::mt19937_64 rng(23);
  auto S = Structure::make(Backend::Padic, 5);
  QuadField E(S);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixE A{3, {}};
    // Singular A would give an undetermined delta after inexact unit inverses.
    do {
      A.a.clear();
      for (int k = 0; k < 9; ++k)
        A.a.push_back({S.zero(), S.integer(static_cast<std::int64_t>(rng() % 13) - 6)});
    } while (E.is_zero(invariants(E, A).delta));
    // g = diag(1, h) with h a product of elementary and unit-diagonal factors.
    auto rnd = [&](std::int64_t m) { return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(m)); };
    MatrixE up = mat_identity(E, 3), up_i = mat_identity(E, 3);
    MatrixE lo = mat_identity(E, 3), lo_i = mat_identity(E, 3);
    MatrixE dg = mat_identity(E, 3), dg_i = mat_identity(E, 3);
    std::int64_t b = rnd(25) - 12, c = rnd(25) - 12;
    up.at(1, 2) = E.integer(b);
    up_i.at(1, 2) = E.integer(-b);
    lo.at(2, 1) = E.integer(c);
    lo_i.at(2, 1) = E.integer(-c);
    for (int k : {1, 2}) {
      dg.at(k, k) = E.integer(1 + rnd(4));
      dg_i.at(k, k) = E.inverse(dg.at(k, k));
    }
    MatrixE g = mat_mul(E, mat_mul(E, up, lo), dg);
    MatrixE gi = mat_mul(E, mat_mul(E, dg_i, lo_i), up_i);
    MatrixE B = mat_mul(E, mat_mul(E, gi, A), g);
    auto u = invariants(E, A), v = invariants(E, B);
    EXPECT_TRUE(invariants_match(E, u, v));
    EXPECT_TRUE(same(E, u.delta, v.delta));
  }
}

TEST(Orbital, ClosedFormExamples) {
  auto S = Structure::make(Backend::Padic, 5);
  QuadField E(S);
  auto A = [&](std::int64_t o01, std::int64_t o10) {
    return s_matrix(E, 2, {S.integer(1), unit_times(S, 2, o01), unit_times(S, 3, o10), S.integer(4)});
  };
  EXPECT_EQ(orbital_gl(E, A(1, 0)).value, R(0));
  EXPECT_EQ(orbital_gl(E, A(2, 0)).value, R(1));
  EXPECT_EQ(orbital_gl(E, A(-2, 1)).value, R(0));  // support empty
  EXPECT_EQ(orbital_gl(E, A(2, 0)).method, Method::ClosedForm);
}

TEST(Orbital, ClosedFormEqualsEnumerations) {
  for (std::uint32_t p : {3u, 5u}) {
    auto S = Structure::make(Backend::Padic, p);
    QuadField E(S);
    for (std::int64_t o01 = 0; o01 <= 2; ++o01)
      for (std::int64_t o10 = 0; o10 <= 2; ++o10) {
        MatrixE A = s_matrix(E, 2, {S.integer(1), unit_times(S, 1, o01), unit_times(S, p - 1, o10), S.integer(2)});
        auto closed = orbital_gl(E, A);
        OrbitalConfig cfg;
        cfg.force_enumeration = true;
        auto lat = orbital_gl(E, A, cfg);
        int nu = static_cast<int>(invariants(E, A).nu.value());
        auto cells = oracle::orbital_gl_enumerate(E, A, 1, nu + 2);
        EXPECT_EQ(closed.value, lat.value) << p << " " << o01 << " " << o10;
        EXPECT_EQ(closed.value, cells.value) << p << " " << o01 << " " << o10;
      }
  }
}

TEST(Orbital, UnimodularChangeOfVariable) {
  auto S = Structure::make(Backend::Padic, 3);
  QuadField E(S);
  MatrixE A = s_int(E, 3, {1, 1, 0, 2, 0, 1, 1, 3, 2});
  ASSERT_TRUE(strongly_regular(E, A));
  MatrixE g = mat_identity(E, 3), gi = mat_identity(E, 3);
  g.at(1, 2) = E.integer(1);
  gi.at(1, 2) = E.integer(-1);
  MatrixE B = mat_mul(E, mat_mul(E, gi, A), g);
  EXPECT_EQ(orbital_gl(E, A).value, orbital_gl(E, B).value);
}

TEST(Orbital, NotStronglyRegular) {
  QuadField E(Structure::make(Backend::Padic, 5));
  EXPECT_EQ(kind_of([&] { orbital_gl(E, s_int(E, 2, {1, 0, 0, 2})); }), ErrorKind::NotStronglyRegular);
}

TEST(Unitary, TwoByTwoIndicator) {
  auto S = Structure::make(Backend::Padic, 5);
  QuadField E(S);
  MatrixE A = s_int(E, 2, {1, 1, 2, 3});
  MatrixE U = match_unitary(E, A);
  EXPECT_TRUE(in_u(E, U));
  EXPECT_EQ(orbital_unitary(E, U).value, R(1));
  MatrixE B = s_matrix(E, 2, {S.integer(1), S.pi_power(-2), S.integer(2), S.integer(3)});
  EXPECT_EQ(orbital_unitary(E, match_unitary(E, B)).value, R(0));
  EXPECT_EQ(kind_of([&] { orbital_unitary(E, base_matrix(E, 2, {0, 1, 1, 0})); }), ErrorKind::NotInUnitarySide);
}

TEST(Unitary, ThreeByThreeStableAcrossDepth) {
  auto S = Structure::make(Backend::Padic, 3);
  QuadField E(S);
  MatrixE U{3, {}};
  QE r = E.sqrt_eps();
  U.a = {r, E.one(), E.zero(),
         E.integer(-1), E.zero(), E.one(),
         E.zero(), E.integer(-1), E.add(r, r)};
  ASSERT_TRUE(in_u(E, U));
  ASSERT_TRUE(strongly_regular(E, U));
  OrbitalConfig c2, c3;
  c2.depth = 2;
  c3.depth = 3;
  auto a = orbital_unitary(E, U, c2), b = orbital_unitary(E, U, c3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_FALSE(b.depth_insufficient);
  EXPECT_GT(b.cosets, a.cosets);
}

TEST(FundamentalLemma, ZeroCaseEqualUnderEveryMode) {
  auto S = Structure::make(Backend::Padic, 5);
  QuadField E(S);
  // A non-integral diagonal entry empties both supports.
  MatrixE A = s_matrix(E, 2, {S.pi_power(-1), unit_times(S, 1, 1), unit_times(S, 1, 1), S.integer(2)});
  MatchedPair pair{A, match_unitary(E, A)};
  auto r = fl_check(E, pair, SignMode::Plus);
  ASSERT_EQ(r.gl.value, R(0));
  ASSERT_EQ(r.u.value, R(0));
  for (auto m : all_sign_modes()) EXPECT_TRUE(fl_check(E, pair, m).equal);
}

TEST(FundamentalLemma, EtaDeltaIsTheConsistentMode) {
  std::map<SignMode, int> failures;
  int pairs = 0;
  for (std::uint32_t p : {3u, 5u, 7u}) {
    auto S = Structure::make(Backend::Padic, p);
    QuadField E(S);
    for (std::int64_t o01 = 0; o01 <= 3; ++o01)
      for (std::int64_t o10 = 0; o10 <= 3; ++o10) {
        if ((o01 + o10) % 2 != 0) continue;
        MatrixE A = s_matrix(E, 2, {S.integer(1), unit_times(S, 1, o01), unit_times(S, 1, o10), S.zero()});
        MatchedPair pair{A, match_unitary(E, A)};
        ++pairs;
        for (auto m : all_sign_modes())
          if (!fl_check(E, pair, m).equal) ++failures[m];
      }
  }
  EXPECT_GE(pairs, 20);
  EXPECT_EQ(failures[SignMode::EtaDelta], 0);
  EXPECT_GT(failures[SignMode::Plus], 0);
  EXPECT_GT(failures[SignMode::Minus], 0);
  EXPECT_GT(failures[SignMode::ParityNu], 0);
}

TEST(FundamentalLemma, BackendsAgree) {
  for (std::uint32_t p : {5u, 7u}) {
    QuadField Ep(Structure::make(Backend::Padic, p)), El(Structure::make(Backend::Laurent, p));
    auto A = [&](const QuadField& E) {
      const auto& S = E.base();
      return s_matrix(E, 2, {S.integer(1), unit_times(S, 1, 2), unit_times(S, 2, 0), S.integer(1)});
    };
    auto rp = fl_check(Ep, {A(Ep), match_unitary(Ep, A(Ep))}, SignMode::EtaDelta);
    auto rl = fl_check(El, {A(El), match_unitary(El, A(El))}, SignMode::EtaDelta);
    EXPECT_EQ(rp.gl.value, rl.gl.value);
    EXPECT_EQ(rp.u.value, rl.u.value);
    EXPECT_EQ(rp.residual, rl.residual);
  }
}

TEST(FundamentalLemma, InvariantMismatch) {
  auto S = Structure::make(Backend::Padic, 5);
  QuadField E(S);
  MatrixE A = s_int(E, 2, {1, 1, 1, 2});
  MatrixE U = match_unitary(E, s_int(E, 2, {1, 1, 4, 2}));
  EXPECT_EQ(kind_of([&] { fl_check(E, {A, U}, SignMode::EtaDelta); }), ErrorKind::InvariantMismatch);
}

TEST(SignMode, Parsing) {
  EXPECT_EQ(parse_sign_mode("eta-delta"), SignMode::EtaDelta);
  EXPECT_EQ(parse_sign_mode("PARITY_NU"), SignMode::ParityNu);
  EXPECT_THROW(parse_sign_mode("sometimes"), Error);
}
