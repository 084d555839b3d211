#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "erp/errors.hpp"
#include "erp/market.hpp"

using namespace erp;

TEST(Simulation, LogReturnMeanMatchesDrift) {
  MarketParams m;
  const PathSet set = simulate_paths(m, 100000, 7);
  ASSERT_EQ(set.size(), 100000u);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& p : set.paths)
    for (double r : p.returns) {
      const double x = std::log1p(r);
      sum += x;
      sq += x * x;
      ++n;
    }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // log(1+r) ~ N(mu dt, sigma^2 dt)
  EXPECT_NEAR(mean, m.mu * m.dt(), 4.0 * std::sqrt(var / n));
  EXPECT_NEAR(var, m.sigma * m.sigma * m.dt(), 0.01 * m.sigma * m.sigma * m.dt());
}

TEST(Simulation, ReturnsStayAboveMinusOne) {
  MarketParams m;
  m.sigma = 2.0;
  for (const auto& p : simulate_paths(m, 200, 3).paths)
    for (double r : p.returns) EXPECT_GT(r, -1.0);
}

TEST(Simulation, DegenerateVolatilityGivesDriftOnly) {
  MarketParams m;
  m.sigma = 1e-12;
  for (const auto& p : simulate_paths(m, 20, 1).paths)
    for (double r : p.returns) EXPECT_NEAR(std::log1p(r), m.mu * m.dt(), 1e-8);
}

TEST(Simulation, SameSeedSamePaths) {
  MarketParams m;
  const PathSet a = simulate_paths(m, 50, 11), b = simulate_paths(m, 50, 11), c = simulate_paths(m, 50, 12);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.paths[i].returns, b.paths[i].returns);
  EXPECT_NE(a.paths[0].returns, c.paths[0].returns);
}

TEST(Simulation, PathDoesNotDependOnBatchSize) {
  MarketParams m;
  const PathSet small = simulate_paths(m, 10, 5, PathRole::train, 30);
  const PathSet big = simulate_paths(m, 100, 5);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small.paths[i].returns, big.paths[30 + i].returns);
}

TEST(Simulation, SplitIsPrefixAndSuffix) {
  MarketParams m;
  const auto split = simulate_split(m, 40, 60, 9);
  const PathSet all = simulate_paths(m, 100, 9);
  ASSERT_EQ(split.train.size(), 40u);
  ASSERT_EQ(split.test.size(), 60u);
  EXPECT_EQ(split.train.paths[39].returns, all.paths[39].returns);
  EXPECT_EQ(split.test.paths[0].returns, all.paths[40].returns);
  EXPECT_EQ(split.test.role, PathRole::test);
}

TEST(Simulation, RejectsBadParameters) {
  MarketParams m;
  m.sigma = -0.1;
  EXPECT_THROW(simulate_paths(m, 10, 1), ParameterError);
  m = {};
  m.periods = 0;
  EXPECT_THROW(simulate_paths(m, 10, 1), ParameterError);
}

TEST(PricePath, DirectProduct) {
  const auto p = price_path(1000.0, ReturnPath{{0.1, -0.05}});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0], 1000.0);
  EXPECT_NEAR(p[1], 1100.0, 1e-9);
  EXPECT_NEAR(p[2], 1045.0, 1e-9);
  for (double s : price_path(1000.0, ReturnPath{{0.0, 0.0, 0.0}})) EXPECT_EQ(s, 1000.0);
}

TEST(PricePath, RoundTripThroughPrices) {
  MarketParams m;
  for (const auto& path : simulate_paths(m, 100, 2).paths) {
    const auto again = returns_from_prices(price_path(m.s0, path));
    ASSERT_EQ(again.size(), path.size());
    for (std::size_t k = 0; k < path.size(); ++k) EXPECT_NEAR(again[k], path[k], 1e-12);
  }
}

TEST(PathsCsv, RoundTripIsExact) {
  MarketParams m;
  m.periods = 5;
  const PathSet a = simulate_paths(m, 30, 4);
  std::stringstream ss;
  write_paths_csv(ss, a);
  const PathSet b = read_paths_csv(ss);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.paths[i].returns, b.paths[i].returns);
}

TEST(PathsCsv, RejectsRaggedRows) {
  std::stringstream ss("r_1,r_2\n0.1,0.2\n0.3\n");
  EXPECT_THROW(read_paths_csv(ss), ParameterError);
}

TEST(Payoff, Vanilla) {
  const std::vector<double> s = {1000.0, 1045.0};
  EXPECT_DOUBLE_EQ(evaluate_payoff(Payoff::european_call(1000.0), s), 45.0);
  EXPECT_DOUBLE_EQ(evaluate_payoff(Payoff::european_put(1000.0), s), 0.0);
  EXPECT_DOUBLE_EQ(evaluate_payoff(Payoff::european_put(1100.0), s), 55.0);
}

TEST(Payoff, RunningMaximum) {
  // Y tracks max(S_1..S_K): 1100 here.
  const std::vector<double> s = {1000.0, 1100.0, 1045.0};
  EXPECT_NEAR(evaluate_payoff(Payoff::running_max_call(1000.0), s), 100.0, 1e-12);
}

TEST(Payoff, AsianAverage) {
  const std::vector<double> s = {1000.0, 1100.0, 1040.0};
  EXPECT_NEAR(evaluate_payoff(Payoff::asian_call(1000.0, 2), s), 70.0, 1e-12);
}

TEST(Payoff, AmericanExerciseValue) {
  const Payoff put = Payoff::american_put(1000.0);
  const std::vector<double> s = {1000.0, 950.0, 1010.0};
  EXPECT_TRUE(put.is_american());
  EXPECT_DOUBLE_EQ(evaluate_payoff(put, s, 1), 50.0);
  EXPECT_DOUBLE_EQ(evaluate_payoff(put, s), 0.0);
  EXPECT_FALSE(Payoff::european_put(1000.0).is_american());
}

TEST(Payoff, ShiftAddsConstant) {
  const std::vector<double> s = {1000.0, 1030.0};
  const Payoff f = Payoff::shifted(Payoff::european_call(1000.0), 5.0);
  EXPECT_DOUBLE_EQ(evaluate_payoff(f, s), 35.0);
  EXPECT_DOUBLE_EQ(evaluate_payoff(Payoff::constant(3.0), s), 3.0);
}
