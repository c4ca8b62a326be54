#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpkit::presburger;
using dpkit::Error;
using dpkit::ErrorKind;

namespace {
LinearTerm v(const std::string& n, std::int64_t c = 1) { return LinearTerm::var(n, c); }
}  // namespace

TEST(Eliminate, EvenWitness) {
  Formula f = exists("x", eq(v("x", 2), v("y")));
  Formula q = eliminate(f);
  EXPECT_FALSE(has_quantifier(q));
  for (std::int64_t y = -10; y <= 10; ++y) {
    EXPECT_EQ(evaluate_qf(q, {{"y", y}}), y % 2 == 0);
    EXPECT_EQ(decide(f, {{"y", y}}), y % 2 == 0);
  }
}

TEST(Eliminate, ContradictoryCongruences) {
  Formula f = exists("x", land(congr(v("x"), 1, 2), congr(v("x"), 0, 2)));
  EXPECT_FALSE(decide(f));
  EXPECT_FALSE(evaluate_qf(eliminate(f), {}));
}

TEST(Eliminate, ParitySplit) {
  Formula f = forall("x", exists("y", lor(eq(v("x"), v("y", 2)), eq(v("x"), v("y", 2) + 1))));
  EXPECT_TRUE(decide(f));
}

TEST(Decide, Literals) {
  EXPECT_TRUE(decide(ge(7, 3)));
  EXPECT_FALSE(decide(exists("x", eq(v("x", 3), v("z"))), {{"z", 5}}));
  EXPECT_TRUE(decide(exists("x", eq(v("x", 3), v("z"))), {{"z", 6}}));
}

TEST(Decide, UnassignedFreeVariable) {
  EXPECT_THROW(decide(ge(v("a"), 0)), Error);
}

TEST(Eliminate, IdempotentOnQuantifierFree) {
  Formula f = land(ge(v("a", 2), v("b")), congr(v("a"), v("b"), 3));
  Formula once = eliminate(f);
  EXPECT_EQ(str(eliminate(once)), str(once));
  for (std::int64_t a = -6; a <= 6; ++a)
    for (std::int64_t b = -6; b <= 6; ++b) EXPECT_EQ(evaluate_qf(once, {{"a", a}, {"b", b}}), evaluate_qf(f, {{"a", a}, {"b", b}}));
}

TEST(Eliminate, ModulusOverflow) {
  // Coefficient lcm grows past a tiny bound.
  Formula f = exists("x", land(eq(v("x", 7), v("a")), eq(v("x", 11), v("b"))));
  Options o;
  o.modulus_bound = 10;
  try {
    (void)eliminate(f, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ModulusOverflow);
  }
}

TEST(Random, AgreesWithBruteForce) {
  oracle::PresburgerGen gen(101);
  for (int i = 0; i < 150; ++i) {
    auto f = gen.closed(1 + i % 3);
    std::map<std::string, std::int64_t> env;
    bool want = oracle::brute(f, env);
    Formula pf = oracle::to_pb(f);
    ASSERT_EQ(decide(pf), want) << str(pf);
    EXPECT_EQ(decide(lnot(pf)), !want);
  }
}

TEST(Random, EliminationPreservesTruthOpenFormulas) {
  oracle::PresburgerGen gen(202);
  for (int i = 0; i < 60; ++i) {
    // One bounded quantifier over a body with a free variable w.
    auto body = gen.body({"v0", "w"}, 3);
    auto q = std::make_shared<oracle::PNode>();
    q->k = i % 2 ? oracle::PNode::Ex : oracle::PNode::All;
    q->var = "v0";
    q->lo = -15;
    q->hi = 15;
    q->kids = {body};
    Formula pf = oracle::to_pb(q);
    Formula qf = eliminate(pf);
    ASSERT_FALSE(has_quantifier(qf));
    for (std::int64_t w = -12; w <= 12; ++w) {
      std::map<std::string, std::int64_t> env{{"w", w}};
      ASSERT_EQ(evaluate_qf(qf, env), oracle::brute(q, env)) << str(pf) << " w=" << w;
    }
  }
}
