#include <gtest/gtest.h>

#include <random>

#include "erp/errors.hpp"
#include "erp/inner.hpp"
#include "oracles.hpp"

using namespace erp;

TEST(InnerMinimax, TwoLinesMeetAtFifty) {
  const std::vector<Line> lines = {{-0.1, 10.0}, {0.1, 0.0}};
  const auto r = inner_minimax(lines);
  EXPECT_NEAR(r.value, 5.0, 1e-12);
  EXPECT_NEAR(r.zeta, 50.0, 1e-12);
}

TEST(InnerMinimax, SingleFlatLinePrefersZero) {
  const std::vector<Line> lines = {{0.0, 7.0}};
  const auto r = inner_minimax(lines);
  EXPECT_DOUBLE_EQ(r.value, 7.0);
  EXPECT_DOUBLE_EQ(r.zeta, 0.0);
}

TEST(InnerMinimax, FlatStretchPicksPointClosestToZero) {
  // Envelope is flat at 3 on [2, 6].
  const std::vector<Line> lines = {{-1.0, 5.0}, {0.0, 3.0}, {1.0, -3.0}};
  const auto r = inner_minimax(lines);
  EXPECT_DOUBLE_EQ(r.value, 3.0);
  EXPECT_DOUBLE_EQ(r.zeta, 2.0);
}

TEST(InnerMinimax, SameSignSlopesAreUnbounded) {
  const std::vector<Line> up = {{0.1, 1.0}, {0.2, 0.0}};
  const std::vector<Line> down = {{-0.1, 1.0}, {-0.2, 0.0}};
  EXPECT_THROW(inner_minimax(up), UnboundedError);
  EXPECT_THROW(inner_minimax(down), UnboundedError);
  EXPECT_THROW(inner_minimax({}), ParameterError);
}

TEST(InnerMinimax, FiftyLinesAgainstMillionPointScan) {
  std::mt19937_64 rng(50);
  const auto lines = oracle::random_lines(rng, 50);
  const auto [lo, hi] = oracle::crossing_range(lines);
  const auto scan = oracle::scan_minimum([&](double z) { return oracle::envelope(lines, z); }, lo, hi, 1000000, 3);
  EXPECT_NEAR(inner_minimax(lines).value, scan.value, 1e-6);
}

TEST(InnerMinimax, FiveHundredRandomSetsAgainstScan) {
  std::mt19937_64 rng(500);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 30);
    const auto lines = oracle::random_lines(rng, n);
    const auto [lo, hi] = oracle::crossing_range(lines);
    const auto scan = oracle::scan_minimum([&](double z) { return oracle::envelope(lines, z); }, lo, hi);
    const auto r = inner_minimax(lines);
    worst = std::max(worst, std::abs(r.value - scan.value));
    EXPECT_NEAR(oracle::envelope(lines, r.zeta), r.value, 1e-9);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(InnerMinimax, NearlyParallelLines) {
  // Slopes agree to rounding; the minimizer must still be the true crossing.
  const std::vector<Line> lines = {{-0.05, 10.0}, {-0.05 + 3e-15, 10.0 - 1e-13}, {0.04, 1.0}};
  const auto r = inner_minimax(lines);
  EXPECT_NEAR(r.zeta, 100.0, 1e-6);
  EXPECT_NEAR(r.value, 5.0, 1e-9);
}

TEST(MinimizePosition, CvarAgainstScan) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 20.0), rd(0.0, 0.05);
  for (double beta : {0.5, 0.75, 0.9}) {
    const RiskMapping m = RiskMapping::cvar(beta);
    for (int t = 0; t < 20; ++t) {
      const int n = 11;
      std::vector<double> a(n), r(n), w(n, 1.0 / n);
      for (int j = 0; j < n; ++j) {
        a[j] = nd(rng);
        r[j] = rd(rng);
      }
      r[0] = -0.04;
      r[1] = 0.04;
      auto f = [&](double z) {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) x[j] = a[j] - z * r[j];
        return m.apply(x, w);
      };
      // Convex and piecewise linear: unbounded iff it drops far out on either side.
      const double far = 1e6, f0 = f(0.0);
      if (f(far) < f0 || f(-far) < f0) {
        EXPECT_THROW(minimize_position(m, a, r, w), UnboundedError);
        continue;
      }
      const auto res = minimize_position(m, a, r, w);
      const auto scan = oracle::scan_minimum(f, res.zeta - 5000.0, res.zeta + 5000.0, 2000, 8);
      EXPECT_NEAR(res.value, scan.value, 1e-6);
      EXPECT_NEAR(f(res.zeta), res.value, 1e-9);
    }
  }
}

TEST(MinimizePosition, SmoothSemideviationAgainstScan) {
  const RiskMapping m = RiskMapping::mean_semidev(0.6, 2.0);
  const std::vector<double> a = {10.0, 4.0, -2.0, 7.0, 1.0}, r = {-0.05, -0.01, 0.0, 0.02, 0.06}, w(5, 0.2);
  auto f = [&](double z) {
    std::vector<double> x(5);
    for (int j = 0; j < 5; ++j) x[j] = a[j] - z * r[j];
    return m.apply(x, w);
  };
  const auto res = minimize_position(m, a, r, w);
  const auto scan = oracle::scan_minimum(f, -2000.0, 2000.0, 4000, 8);
  EXPECT_NEAR(res.value, scan.value, 1e-6);
}

TEST(MinimizePosition, ExpectationWithDriftIsUnbounded) {
  const std::vector<double> a = {1.0, 2.0}, r = {0.01, 0.03}, w = {0.5, 0.5};
  EXPECT_THROW(minimize_position(RiskMapping::expectation(), a, r, w), UnboundedError);
}

TEST(MinimizePosition, WorstCaseDefersToEnvelope) {
  const std::vector<double> a = {10.0, 0.0}, r = {0.1, -0.1};
  const auto res = minimize_position(RiskMapping::worst_case(), a, r, {});
  EXPECT_NEAR(res.value, 5.0, 1e-12);
  EXPECT_NEAR(res.zeta, 50.0, 1e-12);
}
