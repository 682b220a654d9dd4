#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "stclab/core.hpp"

using namespace stclab;

TEST(Sgnpow, Examples) {
  EXPECT_DOUBLE_EQ(sgnpow(-4.0, 0.5), -2.0);
  EXPECT_EQ(sgnpow(0.0, 0.5), 0.0);
  EXPECT_EQ(sgnpow(-3.0, 0.0), -1.0);
  EXPECT_EQ(sgnpow(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(sgnpow(8.0, 1.0 / 3.0), 2.0);
}

TEST(Sat, Examples) {
  EXPECT_EQ(sat(0.5), 0.5);
  EXPECT_EQ(sat(-3.0), -1.0);
  EXPECT_EQ(sat(1.0), 1.0);
  EXPECT_EQ(sat(-1.0), -1.0);
  EXPECT_EQ(sat(0.0), 0.0);
}

TEST(Sign, ZeroSelection) {
  EXPECT_EQ(sign(0.0), 0.0);
  EXPECT_EQ(sign(-0.0), 0.0);
  EXPECT_EQ(sign(1e-300), 1.0);
}

TEST(CoreProperties, OddnessAndIdentities) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  std::uniform_real_distribution<double> expo(0.0, 3.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::copysign(std::pow(10.0, mag(rng)), mag(rng));
    const double y = expo(rng);
    EXPECT_EQ(sgnpow(-x, y), -sgnpow(x, y));
    EXPECT_EQ(sat(-x), -sat(x));
    EXPECT_LE(std::abs(sat(x)), 1.0);
    if (std::abs(x) < 1.0) EXPECT_EQ(sat(x), x);
    EXPECT_EQ(sgnpow(x, 1.0), x);
    const double r = sgnpow(x, 0.5);
    EXPECT_LE(std::abs(r * r - std::abs(x)), 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST(GainSet, Validation) {
  GainSet g{1.0, 1.0, 0.1, std::nullopt, 0.0};
  EXPECT_NO_THROW(g.validate());
  GainSet bad = g;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = g;
  bad.beta = -1.0;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = g;
  bad.h = std::nan("");
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = g;
  bad.gamma = 0.0;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = g;
  bad.lipschitz_L = -0.1;
  EXPECT_THROW(bad.validate(), ParameterError);
}
