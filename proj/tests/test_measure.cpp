#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpkit;

namespace {

Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n) / Rational(d); }

MeasureResult vol(const std::string& fixture, const Structure& S, std::optional<int> depth = std::nullopt) {
  MeasureConfig cfg;
  cfg.depth = depth;
  return volume(fixtures::get(fixture).set, S, cfg);
}

// #{x mod p^k : pred(x)} / p^k by direct enumeration of integers.
template <class Pred>
Rational count_fraction(std::int64_t p, int k, Pred pred) {
  std::int64_t n = 1;
  for (int i = 0; i < k; ++i) n *= p;
  std::int64_t hits = 0;
  for (std::int64_t x = 0; x < n; ++x)
    if (pred(x)) ++hits;
  return R(hits, n);
}

ConstructibleTerm term_with(const std::optional<std::string>& exponent, const std::optional<std::string>& indicator) {
  ConstructibleTerm t;
  ParseOptions po;
  po.declared = {{"x", Sort::VF}};
  if (exponent) t.exponent = parse_term(*exponent, Sort::VG, po);
  if (indicator) t.indicator = parse_formula(*indicator, po);
  return t;
}

}  // namespace

TEST(Volume, DeepBallIsOneCell) {
  for (auto b : {Backend::Padic, Backend::Laurent})
    for (std::int64_t p : {3, 5, 7}) {
      auto S = Structure::make(b, static_cast<std::uint32_t>(p));
      auto r = vol("ord_ge_2", S, 2);
      EXPECT_EQ(r.inner, R(1, p * p));
      EXPECT_EQ(r.outer, R(1, p * p));
      EXPECT_EQ(r.inner, count_fraction(p, 2, [](std::int64_t x) { return x == 0; }));
    }
}

TEST(Volume, Units) {
  for (std::int64_t p : {3, 5, 7}) {
    auto r = vol("units", Structure::make(Backend::Padic, static_cast<std::uint32_t>(p)), 1);
    Rational want = count_fraction(p, 1, [&](std::int64_t x) { return x % p != 0; });
    EXPECT_EQ(r.inner, want);
    EXPECT_EQ(r.outer, want);
    EXPECT_EQ(want, R(p - 1, p));
  }
}

TEST(Volume, UnitSquares) {
  for (std::int64_t p : {3, 5, 7}) {
    auto r = vol("unit_squares", Structure::make(Backend::Laurent, static_cast<std::uint32_t>(p)), 1);
    Rational want = count_fraction(p, 1, [&](std::int64_t x) {
      for (std::int64_t y = 1; y < p; ++y)
        if ((y * y - x) % p == 0) return true;
      return false;
    });
    EXPECT_EQ(r.inner, want);
    EXPECT_EQ(r.outer, want);
  }
}

TEST(Volume, GL2AgainstFiniteFieldCount) {
  for (std::int64_t p : {3, 5}) {
    auto r = vol("gl_2", Structure::make(Backend::Padic, static_cast<std::uint32_t>(p)), 1);
    Rational want = R(oracle::count_gl2(p), p * p * p * p);
    EXPECT_EQ(r.inner, want);
    EXPECT_EQ(r.outer, want);
  }
  EXPECT_EQ(oracle::count_gl2(5), 480);
}

TEST(Volume, SeriesOracles) {
  // cylinder: sum_{v>=1} q^-v * q^-1 = 1/(q(q-1)).
  // even_ord_pair: (1 + ((q-1)/(q+1))^2) / 2.
  for (std::int64_t q : {3, 5}) {
    auto S = Structure::make(Backend::Padic, static_cast<std::uint32_t>(q));
    auto c = vol("cylinder", S, 4);
    Rational cw = R(1, q * (q - 1));
    EXPECT_LE(c.inner, cw);
    EXPECT_GE(c.outer, cw);
    auto e = vol("even_ord_pair", S, 3);
    Rational t = R(q - 1, q + 1);
    Rational ew = (1 + t * t) / 2;
    EXPECT_LE(e.inner, ew);
    EXPECT_GE(e.outer, ew);
    EXPECT_LE(e.outer - e.inner, R(4, q * q));
  }
}

TEST(Volume, RejectsNonVFSignature) {
  auto X = DefinableSet::make({{"r", Sort::RF}}, parse_formula("r == ac(pi)"));
  EXPECT_THROW(volume(X, Structure::make(Backend::Padic, 5)), Error);
}

TEST(Haar, GLmVolumes) {
  auto S5 = Structure::make(Backend::Padic, 5);
  auto S3 = Structure::make(Backend::Padic, 3);
  EXPECT_EQ(haar_glm_volume(1, S5), R(5, 4));
  EXPECT_EQ(haar_glm_volume(2, S3), R(81, oracle::count_gl2(3)));
  EXPECT_EQ(haar_glm_volume(2, S5), R(625, oracle::count_gl2(5)));
  EXPECT_EQ(so_conversion_factor(2, S5), R(1, 5));
}

TEST(Integrate, GeometricSeries) {
  auto S = Structure::make(Backend::Padic, 5);
  ConstructibleExpr e{{{"x", Sort::VF}}, {term_with("-ord(x)", std::nullopt)}};
  MeasureConfig cfg;
  cfg.depth = 8;
  auto r = integrate(e, S, cfg);
  // Truncated series: sum_{v<8} (1-1/q) q^{-2v}.
  Rational partial = 0;
  for (int v = 0; v < 8; ++v) partial += R(4, 5) * rational_pow(5, -2 * v);
  EXPECT_LE(r.lower, R(5, 6));
  EXPECT_GE(r.upper, R(5, 6));
  EXPECT_GE(r.lower, partial - rational_pow(5, -8));
  EXPECT_LE(r.upper - r.lower, rational_pow(5, -8));
}

TEST(Integrate, IndicatorReducesToVolume) {
  auto S = Structure::make(Backend::Laurent, 7);
  ConstructibleExpr e{{{"x", Sort::VF}}, {term_with(std::nullopt, "ord(x) == 0")}};
  auto r = integrate(e, S);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.lower, R(6, 7));
}

TEST(Integrate, FiberCount) {
  auto S = Structure::make(Backend::Padic, 5);
  ConstructibleTerm t = term_with(std::nullopt, "ord(x) == 0");
  t.fiber_vars = {{"r", Sort::RF}};
  t.fiber = parse_formula("r*r == ac(x)");
  auto r = integrate({{{"x", Sort::VF}}, {t}}, S);
  // Each unit residue has 0 or 2 square roots; half of them have 2.
  EXPECT_EQ(r.lower, R(4, 5));
  EXPECT_EQ(r.upper, R(4, 5));
}

TEST(Integrate, UnboundedExponent) {
  auto S = Structure::make(Backend::Padic, 5);
  ConstructibleExpr e{{{"x", Sort::VF}}, {term_with("ord(x)", std::nullopt)}};
  try {
    (void)integrate(e, S);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::UnboundedExponent);
  }
}
