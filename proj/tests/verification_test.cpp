#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "stclab/controllers.hpp"
#include "stclab/verification.hpp"

using namespace stclab;

namespace {
const GainSet kSim{std::sqrt(10.0), 10.0, 0.01, std::nullopt, 0.0};
}

TEST(InvariantSet, Membership) {
  EXPECT_TRUE(in_invariant_set({0.0, 0.0}, {0.01, 10.0}));
  EXPECT_TRUE(in_invariant_set({1.0, 2.0}, {1.0, 1.0}));
  EXPECT_FALSE(in_invariant_set({1.5, 0.0}, {1.0, 1.0}));
  EXPECT_FALSE(in_invariant_set({0.0, 1.5}, {1.0, 1.0}));
}

TEST(Lyapunov, Values) {
  EXPECT_EQ(lyapunov({0.0, 0.0}, kSim), 0.0);
  EXPECT_NEAR(lyapunov({1.0, 0.0}, kSim), 20.0, 1e-12);
  EXPECT_NEAR(lyapunov({1.0, 1.0}, {1.0, 1.0, 1.0, std::nullopt, 0.0}), 1.0, 1e-15);
}

TEST(ClassifyCase, Examples) {
  EXPECT_EQ(classify_case({5e-4, 1.0}, kSim), LyapunovCase::Case1a);
  EXPECT_EQ(classify_case({5e-4, -1.0}, kSim), LyapunovCase::Case1b);
  EXPECT_EQ(classify_case({0.0, -1.0}, kSim), LyapunovCase::Case1a);
  EXPECT_EQ(classify_case({1.0, 0.0}, kSim), LyapunovCase::Case2a);
  // z1 = 0.001 > 0, z2 = 10 - 0.1: z1 - h z2 < 0.
  EXPECT_EQ(classify_case({2e-3, 10.0}, kSim), LyapunovCase::Case2b);
  // Mirror image of the previous state.
  EXPECT_EQ(classify_case({-2e-3, -10.0}, kSim), LyapunovCase::Case2b);
  EXPECT_THROW(classify_case({0.0, 0.0}, kSim), DomainError);
}

TEST(ClassifyCase, PartitionsExterior) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x1(-0.01, 0.01), x2(-3.0, 3.0);
  std::array<int, kLyapunovCaseCount> seen{};
  for (int i = 0; i < 200000; ++i) {
    const VirtualState x{x1(rng), x2(rng)};
    if (in_invariant_set(x, {kSim.h, kSim.beta})) {
      EXPECT_THROW(classify_case(x, kSim), DomainError);
      continue;
    }
    const LyapunovCase c = classify_case(x, kSim);
    ++seen[static_cast<std::size_t>(c)];
    const double band = kSim.h * kSim.h * kSim.beta;
    const bool in_band = std::abs(x.x1) <= band;
    EXPECT_EQ(in_band, c == LyapunovCase::Case1a || c == LyapunovCase::Case1b);
  }
  for (int n : seen) EXPECT_GT(n, 0);
}

TEST(BetaBound, Examples) {
  EXPECT_NEAR(lyapunov_beta_bound(0.0, 0.49, 0.1), 5.0, 1e-12);
  EXPECT_NEAR(lyapunov_beta_bound(1.0, 1.0, 1.0), 4.0, 1e-15);
  EXPECT_NEAR(lyapunov_beta_bound(0.0, 1e-12, 1.0), 0.0, 1e-6);
  EXPECT_NEAR(lyapunov_beta_bound(1.0, 1.0, 0.01), std::sqrt(20001.0), 1e-9);
  EXPECT_THROW(lyapunov_beta_bound(-1.0, 1.0, 1.0), ParameterError);
}

TEST(CheckDecrease, UndisturbedSuite) {
  const LyapunovReport r = check_decrease(kSim, 0.0, 50.0, 20000, 5);
  EXPECT_EQ(r.samples, 20000u);
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.worst_change, 0.0);
  for (auto n : r.case_histogram) EXPECT_GT(n, 0u);
}

TEST(CheckDecrease, DisturbedSuiteNeedsBetaAboveBound) {
  GainSet g = kSim;
  try {
    check_decrease(g, 1.0, 1.0, 100, 1);
    FAIL();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sqrt(L^2+2L sqrt(V)/h^2)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(5/7)sqrt(V)/h"), std::string::npos) << msg;
  }
  // With V = 1 the bound puts the whole level set inside M: nothing to audit.
  g.beta = 150.0;
  EXPECT_THROW(check_decrease(g, 1.0, 1.0, 100, 1), DomainError);

  // V = 100: bound max(4, 714.3, 447.2); exterior states need |x2| > h beta = 8.
  g.beta = 800.0;
  const LyapunovReport r = check_decrease(g, 1.0, 100.0, 20000, 5);
  EXPECT_EQ(r.samples, 20000u);
  EXPECT_TRUE(r.passed()) << r.violation_count;
  // Case 1 needs V > 2 h^2 beta^2, which the bound places above the budget.
  EXPECT_EQ(r.case_histogram[0] + r.case_histogram[1], 0u);
  EXPECT_GT(r.case_histogram[2], 0u);
  EXPECT_GT(r.case_histogram[3], 0u);
}

TEST(CheckDecrease, SeededRunsAreIdentical) {
  const LyapunovReport a = check_decrease(kSim, 0.0, 50.0, 9000, 42);
  const LyapunovReport b = check_decrease(kSim, 0.0, 50.0, 9000, 42);
  EXPECT_EQ(a.worst_change, b.worst_change);
  EXPECT_EQ(a.case_histogram, b.case_histogram);
}

TEST(CheckDecrease, SingleExteriorStateNearBoundary) {
  // Just outside M along the x1 axis, undisturbed.
  const double band = kSim.h * kSim.h * kSim.beta;
  const VirtualState x{band * (1.0 + 1e-6), 0.0};
  ASSERT_FALSE(in_invariant_set(x, {kSim.h, kSim.beta}));
  const VirtualState next = proposed_closed_loop_step(x, kSim, 0.0);
  EXPECT_LT(lyapunov(next, kSim) - lyapunov(x, kSim), 0.0);
}

TEST(DecreaseBound, EvenInShiftedCoordinates) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> z1(-5.0, 5.0), z2(-8.0, 8.0);
  for (double L : {0.0, 1.0}) {
    for (int i = 0; i < 20000; ++i) {
      const double a = z1(rng), b = z2(rng);
      EXPECT_NEAR(case2_delta_v_bound(a, b, kSim, L), case2_delta_v_bound(-a, -b, kSim, L), 1e-12);
    }
  }
}

TEST(DecreaseBound, ShiftNeverExceedsZ1) {
  for (const GainSet& g : {kSim, GainSet{100.0, 1.0, 0.5, std::nullopt, 0.0}}) {
    for (double z = 1e-12; z < 1e6; z *= 1.1) {
      EXPECT_GE(z - implicit_shift(z, g), -1e-12 * z);
    }
  }
}

TEST(DecreaseBound, BoundsTheTrueChangeOffBand) {
  // In Case 2 the actual one-step change never exceeds the bound.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x1(-3.0, 3.0), x2(-6.0, 6.0), d(-1.0, 1.0);
  const double band = kSim.h * kSim.h * kSim.beta;
  for (int i = 0; i < 20000; ++i) {
    const VirtualState x{x1(rng), x2(rng)};
    if (std::abs(x.x1) <= band) continue;
    const double delta = d(rng);
    const double s = sign(x.x1);
    const double bound = case2_delta_v_bound(x.x1 - s * band, x.x2 - s * kSim.h * kSim.beta, kSim, 1.0);
    const double change = lyapunov(proposed_closed_loop_step(x, kSim, delta), kSim) - lyapunov(x, kSim);
    EXPECT_LE(change, bound + 1e-9 * std::max(1.0, std::abs(bound)));
  }
}

TEST(Deadbeat, Nilpotent) {
  for (double h : {0.01, 1.0}) {
    const DeadbeatReport r = deadbeat_check({std::sqrt(10.0), 10.0, h, std::nullopt, 0.0}, 2000, 1);
    EXPECT_LE(std::abs(r.trace), 1e-14);
    EXPECT_LE(std::abs(r.determinant), 1e-14);
    for (double m : r.m_squared) EXPECT_LE(std::abs(m), 1e-14);
    EXPECT_LE(r.max_eigen_modulus, 1e-7);
    EXPECT_TRUE(r.passed());
  }
}

TEST(Deadbeat, TwoStepsFromVertex) {
  const double band = kSim.h * kSim.h * kSim.beta;
  VirtualState x{band, kSim.h * kSim.beta * 0.5};
  ASSERT_TRUE(in_invariant_set(x, {kSim.h, kSim.beta}));
  x = proposed_closed_loop_step(x, kSim, 0.0);
  x = proposed_closed_loop_step(x, kSim, 0.0);
  EXPECT_LE(std::abs(x.x1), 1e-15);
}

TEST(ForwardInvariance, ResidualAndMembership) {
  const InvarianceReport r = forward_invariance_check(kSim, kSim.beta / 2.0, 2000, 100, 4);
  EXPECT_TRUE(r.stayed_in_set);
  EXPECT_LE(r.max_residual, 1e-12);
  EXPECT_THROW(forward_invariance_check(kSim, 2.0 * kSim.beta, 10, 10, 1), ParameterError);
}
