#include <gtest/gtest.h>

#include <random>

#include "dpkit/dpkit.hpp"

using namespace dpkit;

namespace {

Structure padic(std::uint32_t p) { return Structure::make(Backend::Padic, p); }

Truth ev(const std::string& text, const Structure& S, const Assignment& pt = {}, const EvalConfig& cfg = {}) {
  return evaluate(parse_formula(text), S, pt, cfg);
}

bool mentions(const EvalResult& r, const std::string& needle) {
  for (auto& c : r.certificate)
    if (c.find(needle) != std::string::npos) return true;
  return false;
}

// Residue squares by enumeration.
bool residue_square(std::int64_t u, std::int64_t p) {
  for (std::int64_t r = 0; r < p; ++r)
    if ((r * r - u) % p == 0) return true;
  return false;
}

}  // namespace

TEST(Evaluator, LambdaAtNonresidueUnit) {
  auto S = padic(7);
  ASSERT_EQ(ac(S.eps()).value, 3u);
  Evaluator e(S);
  auto r = e.evaluate(parse_formula("ord(eps) == 0 && !(exists y:VF. y*y == eps)"), {});
  EXPECT_EQ(r.value, Truth::True);
  EXPECT_TRUE(mentions(r, "discriminant")) << "expected a residue certificate";
}

TEST(Evaluator, OrdOfUniformizer) {
  auto S = padic(5);
  EXPECT_EQ(ev("ord(x) == 0", S, {{"x", S.pi_power(1)}}), Truth::False);
  EXPECT_EQ(ev("ord(x) == 1", S, {{"x", S.pi_power(1)}}), Truth::True);
}

TEST(Evaluator, SquareRootOfUniformizerSquared) {
  auto S = padic(5);
  EXPECT_EQ(ev("exists y:VF. y*y == x", S, {{"x", S.pi_power(2)}}), Truth::True);
  EXPECT_EQ(ev("exists y:VF. y*y == x", S, {{"x", S.pi_power(1)}}), Truth::False);
}

TEST(Evaluator, ResidueQuantifiers) {
  auto S = padic(7);
  EXPECT_EQ(ev("exists r:RF. r*r == ac(eps)", S), Truth::False);
  EXPECT_EQ(ev("forall r:RF. r*0 == 0", S), Truth::True);
  EXPECT_EQ(ev("exists r:RF. r + 1 == 0", S), Truth::True);
}

TEST(Evaluator, ValueGroupQuantifiers) {
  auto S = padic(5);
  EXPECT_EQ(ev("exists m:VG. ord(x) == m + m", S, {{"x", S.pi_power(4)}}), Truth::True);
  EXPECT_EQ(ev("exists m:VG. ord(x) == m + m", S, {{"x", S.pi_power(3)}}), Truth::False);
  EXPECT_EQ(ev("congr(ord(x), 0, 2)", S, {{"x", S.pi_power(3)}}), Truth::False);
}

TEST(Evaluator, InfinityLowering) {
  auto S = padic(5);
  Assignment z{{"x", S.zero()}};
  // Every integer lies below ord(0).
  EXPECT_EQ(ev("forall m:VG. ord(x) >= m", S, z), Truth::True);
  EXPECT_EQ(ev("forall m:VG. m >= ord(x)", S, z), Truth::False);
  EXPECT_EQ(ev("ord(x) == ord(x) + 1", S, z), Truth::True);
  EXPECT_EQ(ev("exists m:VG. ord(x) == m", S, z), Truth::False);
}

TEST(Evaluator, RefutationIsCertifiedNotExhausted) {
  Evaluator e(padic(7));
  auto r = e.evaluate(parse_formula("exists y:VF. y*y == eps"), {});
  EXPECT_EQ(r.value, Truth::False);
  EXPECT_FALSE(mentions(r, "window"));
}

TEST(Evaluator, WindowExhaustionIsUnknown) {
  auto S = padic(5);
  EvalConfig cfg;
  Assignment pt{{"x", S.pi_power(20)}};
  EXPECT_EQ(ev("exists y:VF. y*x == 1", S, pt, cfg), Truth::Unknown);
  cfg.v_min = -24;
  EXPECT_EQ(ev("exists y:VF. y*x == 1", S, pt, cfg), Truth::True);
}

TEST(Evaluator, SignatureMismatch) {
  auto S = padic(5);
  try {
    (void)ev("ord(x) == ord(y)", S, {{"x", S.one()}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SignatureMismatch);
  }
}

TEST(Evaluator, KleeneShortCircuit) {
  auto S = padic(5);
  Assignment pt{{"x", S.pi_power(20)}};
  EXPECT_EQ(ev("(exists y:VF. y*x == 1) || ord(x) >= 0", S, pt), Truth::True);
  EXPECT_EQ(ev("(exists y:VF. y*x == 1) && ord(x) < 0", S, pt), Truth::False);
}

TEST(Evaluator, SquaresAgainstResidueOracle) {
  std::mt19937_64 rng(5);
  for (std::uint32_t p : {3u, 5u, 7u, 11u}) {
    auto S = padic(p);
    Formula f = parse_formula("exists y:VF. y*y == x");
    for (int i = 0; i < 60; ++i) {
      std::int64_t u = static_cast<std::int64_t>(rng() % 1000) + 1;
      if (u % p == 0) continue;
      std::int64_t v = static_cast<std::int64_t>(rng() % 7) - 3;
      VFE x = S.integer(u) * S.pi_power(v);
      bool want = v % 2 == 0 && residue_square(u, p);
      EXPECT_EQ(evaluate(f, S, {{"x", x}}), want ? Truth::True : Truth::False) << p << " " << u << " " << v;
    }
  }
}

TEST(Evaluator, LaurentSquaresAgainstResidueOracle) {
  for (std::uint32_t p : {5u, 7u}) {
    auto S = Structure::make(Backend::Laurent, p);
    Formula f = parse_formula("exists y:VF. y*y == x");
    for (std::uint32_t u = 1; u < p; ++u)
      for (std::int64_t v = -2; v <= 2; ++v) {
        VFE x = VFE::from_digits(Backend::Laurent, p, v, {u, 1}, VFE::kExact);
        bool want = v % 2 == 0 && residue_square(u, p);
        EXPECT_EQ(evaluate(f, S, {{"x", x}}), want ? Truth::True : Truth::False);
      }
  }
}

TEST(Evaluator, UnitCountByCellsMatchesFiniteField) {
  // x in O with ord(x) == 0 and ac(x) a nonzero square: (p-1)/2 residue classes.
  for (std::uint32_t p : {3u, 5u, 7u}) {
    auto S = padic(p);
    Formula f = parse_formula("ord(x) == 0 && exists r:RF. r*r == ac(x)");
    int n = 0;
    for (std::uint32_t a = 0; a < p; ++a) {
      VFE x = a == 0 ? S.zero() : S.integer(a);
      if (evaluate(f, S, {{"x", x}}) == Truth::True) ++n;
    }
    EXPECT_EQ(n, static_cast<int>((p - 1) / 2));
  }
}

TEST(Evaluator, Determinism) {
  auto S = padic(5);
  Formula f = parse_formula("exists y:VF. y*y - eps*x*x == pi");
  Evaluator e(S);
  auto a = e.evaluate(f, {{"x", S.integer(2)}});
  auto b = e.evaluate(f, {{"x", S.integer(2)}});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.certificate, b.certificate);
}
