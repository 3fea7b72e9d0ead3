#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace pctl_smc;
using namespace testing_support;

TEST(ExactFinite, S1RowIsOne) {
  const auto m = goal_mdp();
  const auto table = exact_finite(m, path_of(PathOp::Until, AtomLiteral::truth(), lit("goal"), 5), Quantifier::Max, 5);
  for (const auto& row : table.v) EXPECT_EQ(row[*m.find_state("goal")], 1.0);
}

TEST(ExactFinite, GoalMdpOneStep) {
  const auto m = goal_mdp();
  const auto p = path_of(PathOp::Until, AtomLiteral::truth(), lit("goal"), 1);
  EXPECT_DOUBLE_EQ(exact_finite(m, p, Quantifier::Max, 1).at(0), 0.6);
  EXPECT_DOUBLE_EQ(exact_finite(m, p, Quantifier::Min, 1).at(0), 0.3);
}

TEST(BruteForce, HorizonZero) {
  const auto m = goal_mdp();
  const auto p = path_of(PathOp::Until, AtomLiteral::truth(), lit("goal"), 0);
  EXPECT_EQ(brute_force_paths(m, p, 0, Quantifier::Max, *m.find_state("goal")), 1.0);
  EXPECT_EQ(brute_force_paths(m, p, 0, Quantifier::Max), 0.0);
}

TEST(BruteForce, GuardRefusesLargeInstances) {
  const auto m = gen_dice({2, 3});
  EXPECT_THROW(brute_force_paths(m, path_of(PathOp::Until, AtomLiteral::truth(), lit("a"), 2), 2, Quantifier::Max),
               Error);
  EXPECT_THROW(brute_force_paths(goal_mdp(), path_of(PathOp::Until, AtomLiteral::truth(), lit("goal"), 5), 5,
                                 Quantifier::Max),
               Error);
}

TEST(BruteForce, AgreesWithBackwardInduction) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto m = small_random(seed);
    for (const auto q : {Quantifier::Max, Quantifier::Min}) {
      for (const auto& p : template_family(3)) {
        const auto exact = exact_finite(m, p, q, 3);
        for (StateId s = 0; s < m.num_states(); ++s) {
          ASSERT_NEAR(exact.at(s), brute_force_paths(m, p, 3, q, s), 1e-12) << "seed " << seed;
        }
      }
      const auto next = path_of(PathOp::Next, AtomLiteral::truth(), lit("a2"), std::nullopt);
      ASSERT_NEAR(exact_finite(m, next, q, 1).at(m.initial()), brute_force_paths(m, next, 1, q), 1e-12);
    }
  }
}

TEST(ExactFinite, UntilGrowsReleaseShrinks) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto m = small_random(seed);
    for (const auto q : {Quantifier::Max, Quantifier::Min}) {
      const auto u = exact_finite(m, path_of(PathOp::Until, lit("a1"), lit("a2"), 12), q, 12);
      const auto r = exact_finite(m, path_of(PathOp::Release, lit("a1"), lit("a2"), 12), q, 12);
      for (std::uint32_t h = 1; h <= 12; ++h) {
        for (StateId s = 0; s < m.num_states(); ++s) {
          EXPECT_GE(u.v[h][s], u.v[h - 1][s] - 1e-15);
          EXPECT_LE(r.v[h][s], r.v[h - 1][s] + 1e-15);
        }
      }
    }
  }
}

TEST(ExactUnbounded, CertainAndImpossible) {
  const auto m = goal_mdp();
  EXPECT_NEAR(exact_value(m, parse_formula("Pmax > 0.5 (F goal)")), 0.6, 1e-12);
  Mdp c;
  c.intern_atom("goal");
  const auto s = c.add_state("s");
  const auto g = c.add_state("g", {"goal"});
  const auto a = c.intern_action("a");
  c.add_transition(s, a, s, 0.5);
  c.add_transition(s, a, g, 0.5);
  c.add_transition(g, a, g, 1.0);
  EXPECT_NEAR(exact_value(c, parse_formula("Pmax > 0.5 (F goal)")), 1.0, 1e-10);
  c.set_initial(g);
  EXPECT_EQ(exact_value(c, parse_formula("Pmax > 0.5 (X !goal)")), 0.0);
  Mdp d;
  d.intern_atom("goal");
  const auto x = d.add_state("x");
  const auto y = d.add_state("y", {"goal"});
  d.add_transition(x, d.intern_action("a"), x, 1.0);
  d.add_transition(y, d.intern_action("a"), y, 1.0);
  EXPECT_EQ(exact_value(d, parse_formula("Pmax > 0.5 (F goal)")), 0.0);
}

TEST(ExactUnbounded, GamblerClosedForm) {
  // Absorption at the top from level i of a chain 0..n, up w.p. q:
  // (1 - r^i) / (1 - r^n) with r = (1-q)/q, or i/n when q = 1/2.
  for (const double q : {0.5, 0.4, 0.65}) {
    for (std::uint32_t i = 1; i < 3; ++i) {
      const auto m = gambler(3, q, i);
      const double r = (1.0 - q) / q;
      const double expected = q == 0.5 ? i / 3.0 : (1.0 - std::pow(r, i)) / (1.0 - std::pow(r, 3));
      EXPECT_NEAR(exact_value(m, parse_formula("Pmax > 0.5 (F goal)")), expected, 1e-10) << q << " " << i;
      EXPECT_NEAR(exact_value(m, parse_formula("Pmin > 0.5 (F goal)")), 0.0, 1e-12);
    }
  }
}

TEST(ExactUnbounded, ReleaseDuality) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto m = small_random(seed);
    for (const auto q : {Quantifier::Max, Quantifier::Min}) {
      const auto other = q == Quantifier::Max ? Quantifier::Min : Quantifier::Max;
      const auto u = exact_unbounded(m, path_of(PathOp::Until, lit("a1"), lit("a2"), std::nullopt), q);
      const auto r =
          exact_unbounded(m, path_of(PathOp::Release, lit("a1", true), lit("a2", true), std::nullopt), other);
      for (StateId s = 0; s < m.num_states(); ++s) EXPECT_NEAR(r.at(s), 1.0 - u.at(s), 1e-10);
    }
  }
}

TEST(ExactUnbounded, FiniteHorizonConverges) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = small_random(seed);
    for (const auto q : {Quantifier::Max, Quantifier::Min}) {
      for (const auto& p : template_family(std::nullopt)) {
        auto bounded = p;
        bounded.horizon = 3000;
        const auto lim = exact_unbounded(m, p, q);
        const auto fin = exact_finite(m, bounded, q, 3000);
        for (StateId s = 0; s < m.num_states(); ++s) {
          EXPECT_NEAR(fin.at(s), lim.at(s), 1e-8) << "seed " << seed << " " << to_string(p);
        }
      }
    }
  }
}

TEST(Desugaring, EventuallyIsTrueUntil) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = small_random(seed);
    for (const auto q : {Quantifier::Max, Quantifier::Min}) {
      const auto f = parse_formula(q == Quantifier::Max ? "Pmax > 0.5 (F<=4 a2)" : "Pmin > 0.5 (F<=4 a2)");
      const auto u = parse_formula(q == Quantifier::Max ? "Pmax > 0.5 (true U<=4 a2)" : "Pmin > 0.5 (true U<=4 a2)");
      EXPECT_EQ(exact_value(m, f), exact_value(m, u));
      const auto g = parse_formula(q == Quantifier::Max ? "Pmax > 0.5 (G a1)" : "Pmin > 0.5 (G a1)");
      const auto r = parse_formula(q == Quantifier::Max ? "Pmax > 0.5 (false R a1)" : "Pmin > 0.5 (false R a1)");
      EXPECT_EQ(exact_value(m, g), exact_value(m, r));
    }
  }
}

TEST(DecideExact, Examples) {
  const auto m = goal_mdp();
  EXPECT_EQ(decide_exact(m, parse_formula("Pmax > 0.3 (F<=1 goal)")).decision, ExactDecision::True);
  EXPECT_EQ(decide_exact(m, parse_formula("Pmax > 0.6 (F<=1 goal)")).decision, ExactDecision::Boundary);
  EXPECT_EQ(decide_exact(m, parse_formula("Pmax < 0.3 (F<=1 goal)")).decision, ExactDecision::False);
  const auto dice = gen_dice({3, 4});
  const auto r = decide_exact(dice, parse_formula("Pmax > 0.3 (F a)"));
  EXPECT_EQ(r.decision, ExactDecision::True);
  EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-12);
}
