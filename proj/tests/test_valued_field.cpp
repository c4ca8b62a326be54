#include <gtest/gtest.h>

#include <random>

#include "dpkit/valued_field.hpp"

using namespace dpkit;

namespace {

Structure padic(std::uint32_t p) { return Structure::make(Backend::Padic, p); }
Structure laurent(std::uint32_t p) { return Structure::make(Backend::Laurent, p); }

// Independent ord/ac of a nonzero integer: strip factors of p by division.
std::pair<std::int64_t, std::uint32_t> int_ord_ac(BigInt n, std::uint32_t p) {
  std::int64_t v = 0;
  while (n % p == 0) {
    n /= p;
    ++v;
  }
  BigInt r = n % p;
  if (r < 0) r += p;
  return {v, static_cast<std::uint32_t>(r)};
}

}  // namespace

TEST(ZExt, InfinityAbsorbsAndDominates) {
  ZExt inf = ZExt::infinity();
  EXPECT_TRUE((inf + ZExt(5)).is_infinite());
  EXPECT_TRUE(ZExt(1000000) < inf);
  EXPECT_EQ(inf.str(), "INFINITY");
}

TEST(Residue, InverseMultipliesToOne) {
  for (std::int64_t a = 1; a < 11; ++a) {
    ResidueElement r(a, 11);
    EXPECT_EQ((r * r.inverse()).value, 1u);
  }
}

TEST(Arith, PadicCarry) {
  auto S = padic(5);
  VFE s = vf_arith(ArithOp::Add, S.integer(2), &static_cast<const VFE&>(S.integer(3)));
  EXPECT_EQ(ord(s).value(), 1);
  EXPECT_EQ(ac(s).value, 1u);
}

TEST(Arith, LaurentNoCarry) {
  auto S = laurent(5);
  VFE s = S.integer(2) + S.integer(3);
  EXPECT_TRUE(s.is_zero());
  EXPECT_TRUE(ord(s).is_infinite());
}

TEST(Arith, InverseOfUniformizer) {
  auto S = padic(7);
  VFE i = vf_arith(ArithOp::Inv, S.integer(7));
  EXPECT_EQ(ord(i).value(), -1);
  EXPECT_EQ(i.digits(), std::vector<std::uint32_t>{1});
}

TEST(Arith, DivisionByZero) {
  auto S = padic(5);
  try {
    (void)vf_arith(ArithOp::Inv, S.zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivisionByZero);
  }
}

TEST(Arith, BackendMismatch) {
  VFE a = padic(5).integer(1), b = laurent(5).integer(1);
  try {
    (void)vf_arith(ArithOp::Add, a, &b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendMismatch);
  }
}

TEST(Arith, CancellationExhaustsPrecision) {
  auto S = padic(5);
  VFE x = S.integer(7).truncated(2);
  VFE y = -S.integer(7).truncated(2);
  try {
    (void)vf_arith(ArithOp::Add, x, &y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PrecisionExhausted);
  }
  // The raw operator stays total and returns a ball.
  EXPECT_TRUE((x + y).is_ball());
}

TEST(Arith, PrecisionPropagates) {
  auto S = padic(5);
  VFE x = S.integer(3).truncated(4);  // known mod 5^4
  VFE y = S.integer(25);             // exact
  VFE s = x + y;
  EXPECT_EQ(s.absolute_precision().value(), 4);
  VFE m = x * S.integer(5);
  EXPECT_EQ(m.precision(), 4);
  EXPECT_EQ(m.valuation().value(), 1);
}

TEST(OrdAc, Examples) {
  auto S = padic(5);
  EXPECT_EQ(ord(S.integer(50)).value(), 2);
  EXPECT_EQ(ac(S.integer(50)).value, 2u);
  EXPECT_TRUE(ord(S.zero()).is_infinite());
  EXPECT_EQ(ac(S.zero()).value, 0u);
  auto L = laurent(7);
  VFE x = VFE::from_digits(Backend::Laurent, 7, -3, {4, 1}, VFE::kExact);
  EXPECT_EQ(ord(x).value(), -3);
  EXPECT_EQ(ac(x).value, 4u);
  (void)L;
}

TEST(OrdAc, DivergenceWitness) {
  for (std::uint32_t p : {3u, 5u, 7u}) {
    VFE lp = laurent(p).integer(p - 1) + laurent(p).integer(1);
    EXPECT_TRUE(lp.is_zero());
    VFE pp = padic(p).integer(p - 1) + padic(p).integer(1);
    EXPECT_EQ(ord(pp).value(), 1);
  }
}

TEST(OrdAc, PadicAgainstIntegerOracle) {
  std::mt19937_64 rng(7);
  for (std::uint32_t p : {3u, 5u, 7u}) {
    auto S = padic(p);
    for (int i = 0; i < 2000; ++i) {
      std::int64_t a = static_cast<std::int64_t>(rng() % 2000000) - 1000000;
      std::int64_t b = static_cast<std::int64_t>(rng() % 2000000) - 1000000;
      if (a == 0 || b == 0) continue;
      VFE x = S.integer(a), y = S.integer(b);
      auto [v, r] = int_ord_ac(BigInt(a) * b, p);
      EXPECT_EQ(ord(x * y).value(), v);
      EXPECT_EQ(ac(x * y).value, r);
    }
  }
}

TEST(OrdAc, LaurentAgainstPolynomialOracle) {
  std::mt19937_64 rng(11);
  for (std::uint32_t p : {3u, 5u, 7u}) {
    for (int i = 0; i < 1000; ++i) {
      std::vector<std::uint32_t> da(4), db(4);
      for (auto& d : da) d = static_cast<std::uint32_t>(rng() % p);
      for (auto& d : db) d = static_cast<std::uint32_t>(rng() % p);
      da[0] = 1 + static_cast<std::uint32_t>(rng() % (p - 1));
      db[0] = 1 + static_cast<std::uint32_t>(rng() % (p - 1));
      std::int64_t va = static_cast<std::int64_t>(rng() % 9) - 4, vb = static_cast<std::int64_t>(rng() % 9) - 4;
      VFE x = VFE::from_digits(Backend::Laurent, p, va, da, VFE::kExact);
      VFE y = VFE::from_digits(Backend::Laurent, p, vb, db, VFE::kExact);
      // Schoolbook product over F_p.
      std::vector<std::uint32_t> prod(7, 0);
      for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t w = 0; w < 4; ++w) prod[u + w] = (prod[u + w] + da[u] * db[w]) % p;
      VFE xy = x * y;
      EXPECT_EQ(ord(xy).value(), va + vb);
      EXPECT_EQ(xy.digits(7), std::vector<std::uint32_t>(prod.begin(), prod.begin() + static_cast<long>(xy.digits(7).size())));
      EXPECT_EQ(ac(xy).value, prod[0]);
    }
  }
}

TEST(OrdAc, Ultrametric) {
  std::mt19937_64 rng(3);
  for (auto b : {Backend::Padic, Backend::Laurent}) {
    auto S = Structure::make(b, 5);
    for (int i = 0; i < 500; ++i) {
      VFE x = S.integer(static_cast<std::int64_t>(rng() % 400) + 1) * S.pi_power(static_cast<std::int64_t>(rng() % 5) - 2);
      VFE y = S.integer(static_cast<std::int64_t>(rng() % 400) + 1) * S.pi_power(static_cast<std::int64_t>(rng() % 5) - 2);
      if (x.is_zero() || y.is_zero()) continue;
      VFE s = x + y;
      ZExt lo = std::min(ord(x), ord(y));
      EXPECT_FALSE(ord(s) < lo);
      if (ord(x) != ord(y)) {
        EXPECT_EQ(ord(s), lo);
      }
    }
  }
}

TEST(Arith, InverseIsTwoSided) {
  for (auto b : {Backend::Padic, Backend::Laurent}) {
    auto S = Structure::make(b, 7);
    for (std::int64_t n : {1, 2, 3, 10, 48, 99, 343 * 2}) {
      VFE x = S.integer(n);
      if (x.is_zero()) continue;
      VFE one = x * x.inverse();
      VFE d = one - S.one();
      EXPECT_FALSE(d.is_nonzero());
      EXPECT_TRUE(d.is_zero() || d.absolute_precision().value() >= S.precision);
    }
  }
}

TEST(Structure, RejectsTwoAndSquares) {
  EXPECT_THROW(Structure::make(Backend::Padic, 2), Error);
  EXPECT_THROW(Structure::make(Backend::Padic, 9), Error);
  try {
    Structure::make(Backend::Padic, 7, 12, 2);  // 2 = 3^2 mod 7
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidStructure);
  }
  auto S = Structure::make(Backend::Laurent, 7);
  EXPECT_EQ(ac(S.eps()).value, 3u);
}

TEST(Structure, ParseSpec) {
  auto S = Structure::parse("laurent:7:20");
  EXPECT_EQ(S.backend, Backend::Laurent);
  EXPECT_EQ(S.p, 7u);
  EXPECT_EQ(S.precision, 20);
  EXPECT_EQ(Structure::parse("padic:5").precision, 12);
}

TEST(Literal, RoundTrip) {
  VFE x = parse_element_literal("padic(p=5, val=2, digits=[2])");
  EXPECT_EQ(ord(x).value(), 2);
  EXPECT_EQ(ac(x).value, 2u);
  EXPECT_EQ(parse_element_literal(x.literal()), x);
  VFE y = parse_element_literal("laurent(p=7, val=-1, digits=[3])");
  EXPECT_EQ(ord(y).value(), -1);
  EXPECT_EQ(parse_element_literal(y.literal()), y);
  EXPECT_EQ(x.str(), "50");
}
