#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "erp/baselines.hpp"
#include "erp/errors.hpp"

using namespace erp;

namespace {
constexpr double S0 = 1000.0, SIGMA = 0.1283, T = 1.0;
}

TEST(BlackScholes, ReferenceAnchors) {
  EXPECT_NEAR(black_scholes_price(S0, 1000.0, SIGMA, T, OptionType::call), 51.15, 0.005);
  EXPECT_NEAR(black_scholes_price(S0, 950.0, SIGMA, T, OptionType::call), 78.80, 0.005);
  EXPECT_NEAR(black_scholes_price(S0, 1050.0, SIGMA, T, OptionType::call), 31.17, 0.005);
}

TEST(BlackScholes, PutCallParityAtZeroRate) {
  for (double k : {800.0, 950.0, 1000.0, 1200.0}) {
    const double c = black_scholes_price(S0, k, SIGMA, T, OptionType::call);
    const double p = black_scholes_price(S0, k, SIGMA, T, OptionType::put);
    EXPECT_NEAR(c - p, S0 - k, 1e-9);
  }
}

TEST(BlackScholes, Monotonicity) {
  double last = 0.0;
  for (double s = 0.05; s < 0.5; s += 0.05) {
    const double c = black_scholes_price(S0, 1000.0, s, T, OptionType::call);
    EXPECT_GT(c, last);
    last = c;
  }
  last = 1e9;
  for (double k = 800.0; k < 1300.0; k += 50.0) {
    const double c = black_scholes_price(S0, k, SIGMA, T, OptionType::call);
    EXPECT_LT(c, last);
    last = c;
  }
}

TEST(BlackScholes, DeltaBoundsAndFiniteDifference) {
  for (double s : {700.0, 950.0, 1000.0, 1100.0, 1500.0}) {
    const double dc = black_scholes_delta(s, 1000.0, SIGMA, 0.5, OptionType::call);
    const double dp = black_scholes_delta(s, 1000.0, SIGMA, 0.5, OptionType::put);
    EXPECT_GE(dc, 0.0);
    EXPECT_LE(dc, 1.0);
    EXPECT_GE(dp, -1.0);
    EXPECT_LE(dp, 0.0);
    const double h = 1e-3;
    const double fd = (black_scholes_price(s + h, 1000.0, SIGMA, 0.5, OptionType::call) -
                       black_scholes_price(s - h, 1000.0, SIGMA, 0.5, OptionType::call)) /
                      (2 * h);
    EXPECT_NEAR(dc, fd, 1e-6);
  }
}

TEST(BlackScholes, QuoteUsesRemainingTime) {
  const BaselineQuote q = black_scholes(S0, 1000.0, SIGMA, T, OptionType::call, 16);
  EXPECT_DOUBLE_EQ(q.delta0, black_scholes_delta(S0, 1000.0, SIGMA, T, OptionType::call));
  EXPECT_DOUBLE_EQ(q.delta(8, 1010.0), black_scholes_delta(1010.0, 1000.0, SIGMA, 0.5, OptionType::call));
  EXPECT_FALSE(q.exercise);
}

TEST(BlackScholes, RejectsBadInputs) {
  EXPECT_THROW(black_scholes_price(S0, 1000.0, 0.0, T, OptionType::call), ParameterError);
  EXPECT_THROW(black_scholes(S0, 1000.0, SIGMA, 0.0, OptionType::call), ParameterError);
}

TEST(Binomial, AmericanPutAnchor) {
  const auto t0 = std::chrono::steady_clock::now();
  const double p = binomial_price(S0, 1000.0, SIGMA, T, 225, OptionType::put, true);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(p, 51.21, 0.10);
  EXPECT_LT(secs, 1.0);
}

TEST(Binomial, ConvergesToBlackScholes) {
  const double tree = binomial_price(S0, 1000.0, SIGMA, T, 10000, OptionType::call, false);
  EXPECT_NEAR(tree, black_scholes_price(S0, 1000.0, SIGMA, T, OptionType::call), 0.02);
}

TEST(Binomial, AmericanAtLeastEuropean) {
  for (double k : {900.0, 1000.0, 1100.0}) {
    EXPECT_GE(binomial_price(S0, k, SIGMA, T, 200, OptionType::put, true),
              binomial_price(S0, k, SIGMA, T, 200, OptionType::put, false) - 1e-12);
  }
}

TEST(Binomial, DeepInTheMoneyPutIsIntrinsic) {
  EXPECT_NEAR(binomial_price(S0, 5000.0, 1e-4, T, 100, OptionType::put, true), 4000.0, 1e-6);
}

TEST(Binomial, TreeMatchesRollingPrice) {
  const BinomialTree tree(S0, 1000.0, SIGMA, T, 64, OptionType::put, true);
  EXPECT_NEAR(tree.price(), binomial_price(S0, 1000.0, SIGMA, T, 64, OptionType::put, true), 1e-10);
  for (int j = 0; j <= 10; ++j) EXPECT_TRUE(tree.exercise(64, j));
  EXPECT_LE(tree.delta(0, 0), 0.0);
  EXPECT_GE(tree.delta(0, 0), -1.0);
}

TEST(Binomial, AmericanQuotePolicies) {
  const BaselineQuote q = binomial_american(S0, 1000.0, SIGMA, T, 225, OptionType::put, 16);
  EXPECT_NEAR(q.price, binomial_price(S0, 1000.0, SIGMA, T, 225, OptionType::put, true), 1e-12);
  ASSERT_TRUE(q.exercise);
  EXPECT_TRUE(q.exercise(8, 600.0));
  EXPECT_FALSE(q.exercise(8, 1200.0));
  EXPECT_TRUE(q.exercise(16, 990.0));
  EXPECT_LT(q.delta(4, 950.0), q.delta(4, 1050.0));
}
