#include <gtest/gtest.h>

#include <cmath>

#include "erp/dp.hpp"
#include "erp/epsilon.hpp"
#include "erp/errors.hpp"

using namespace erp;

namespace {

// Closed-form replication of a call over terminal prices in [l, u].
struct ClosedForm {
  double xi, price, error;
};
ClosedForm closed_form(double s0, double l, double u, double k) {
  const double xi = (u - k) / (u - l);
  return {xi, xi * (s0 - 0.5 * (k + l)), (u - k) * (k - l) / (2.0 * (u - l))};
}

// Brute-force worst absolute error of (p0, xi) over a fine price grid.
double worst_error(double s0, double l, double u, double k, double p0, double xi) {
  double worst = 0.0;
  for (int i = 0; i <= 40000; ++i) {
    const double s = l + (u - l) * i / 40000.0;
    worst = std::max(worst, std::abs(std::max(s - k, 0.0) - p0 - xi * (s - s0)));
  }
  return worst;
}

}  // namespace

TEST(OnePeriod, ClosedFormPrices) {
  const auto atm = epsilon_one_period(100, 90, 130, 100);
  EXPECT_NEAR(atm.price, 3.75, 1e-12);
  EXPECT_NEAR(atm.xi, 0.75, 1e-12);
  const auto otm = epsilon_one_period(100, 90, 130, 120);
  EXPECT_NEAR(otm.price, -1.25, 1e-12);
  const auto edge = epsilon_one_period(100, 90, 130, 130);
  EXPECT_NEAR(edge.price, 0.0, 1e-12);
  EXPECT_NEAR(edge.xi, 0.0, 1e-12);
  EXPECT_THROW(epsilon_one_period(100, 90, 90, 90), ParameterError);
  EXPECT_THROW(epsilon_one_period(100, 90, 130, 140), ParameterError);
}

TEST(OnePeriod, MatchesBruteForceWorstCase) {
  for (double k = 90; k <= 130; k += 2.5) {
    const auto q = epsilon_one_period(100, 90, 130, k);
    const ClosedForm c = closed_form(100, 90, 130, k);
    EXPECT_NEAR(q.price, c.price, 1e-12);
    EXPECT_NEAR(q.worst_abs_error, c.error, 1e-12);
    EXPECT_NEAR(worst_error(100, 90, 130, k, q.price, q.xi), c.error, 1e-9);
    // Nearby pairs do no better.
    for (double dp : {-0.05, 0.05})
      for (double dx : {-0.01, 0.01})
        EXPECT_GE(worst_error(100, 90, 130, k, q.price + dp, q.xi + dx), c.error - 1e-9);
  }
}

TEST(Subgradient, CertificateAtClosedForm) {
  const double s0 = 100, l = 90, u = 130, k = 100;
  const auto q = epsilon_one_period(s0, l, u, k);
  const auto cert = verify_subgradient(s0, l, u, k, q.xi, q.price);
  EXPECT_TRUE(cert.valid);
  EXPECT_TRUE(cert.common_max);
  EXPECT_TRUE(cert.zero_in_hull);
  const std::array<double, 4> want = {0.5 * (k - l) / (u - l), 0.5 * (u - k) / (u - l), 0.0, 0.5};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(cert.lambda[i], want[i], 1e-12) << i;
}

TEST(Subgradient, PerturbedPositionFails) {
  const auto q = epsilon_one_period(100, 90, 130, 100);
  const auto cert = verify_subgradient(100, 90, 130, 100, q.xi + 0.1, q.price);
  EXPECT_FALSE(cert.valid);
  EXPECT_FALSE(cert.common_max);
  // phi values recomputed by hand: (u-K) - xi(u-S0) - p0 and friends
  const double xi = q.xi + 0.1, p0 = q.price;
  EXPECT_NEAR(cert.phi[0], 30 - xi * 30 - p0, 1e-12);
  EXPECT_NEAR(cert.phi[1], xi * 10 - p0, 1e-12);
  EXPECT_NEAR(cert.phi[2], p0, 1e-12);
}

TEST(Subgradient, DegenerateStrikeAtUpperEnd) {
  const auto q = epsilon_one_period(100, 90, 130, 130);
  EXPECT_TRUE(verify_subgradient(100, 90, 130, 130, q.xi, q.price).valid);
}

TEST(MultiPeriod, OnePeriodBoxMatchesClosedForm) {
  MarketParams m;
  m.s0 = 100.0;
  m.periods = 1;
  const UncertaintySpec box = UncertaintySpec::box(m, -0.1, 0.3);
  EpsilonOptions o;
  o.wealth_nodes = 201;
  for (double k : {95.0, 100.0, 110.0, 120.0}) {
    const Payoff call = Payoff::european_call(k);
    const StateLattice lat = StateLattice::build(box, PathSet{}, call);
    const auto sol = epsilon_multi_period(box, call, lat, o);
    const ClosedForm c = closed_form(100, 90, 130, k);
    const double cell = sol.wealth[1] - sol.wealth[0];
    EXPECT_NEAR(sol.price, c.price, cell) << k;
    EXPECT_NEAR(sol.worst_abs_error, c.error, cell) << k;
    EXPECT_NEAR(sol.root_zeta, c.xi * 100.0, 1.0) << k;
  }
}

TEST(MultiPeriod, ZeroPayoffNeedsNoCapital) {
  MarketParams m;
  m.periods = 4;
  const PathSet train = simulate_paths(m, 3000, 3);
  const UncertaintySpec spec = UncertaintySpec::u2(m, calibrate_gamma(UncertaintyKind::u2, m, 2, train, 0.95).gamma, 2);
  const Payoff zero = Payoff::constant(0.0);
  LatticeOptions lo;
  lo.price_nodes = 61;
  lo.theta_nodes = 21;
  const StateLattice lat = StateLattice::build(spec, train, zero, lo);
  EpsilonOptions o;
  o.wealth_nodes = 41;
  const auto sol = epsilon_multi_period(spec, zero, lat, o);
  EXPECT_NEAR(sol.price, 0.0, 1e-6);
  EXPECT_NEAR(sol.worst_abs_error, 0.0, 1e-6);
}

TEST(MultiPeriod, ShiftMovesPriceByTheConstant) {
  MarketParams m;
  m.periods = 4;
  const PathSet train = simulate_paths(m, 3000, 3);
  const UncertaintySpec spec = UncertaintySpec::u2(m, calibrate_gamma(UncertaintyKind::u2, m, 2, train, 0.95).gamma, 2);
  const Payoff call = Payoff::european_call(1000.0);
  LatticeOptions lo;
  lo.price_nodes = 61;
  lo.theta_nodes = 21;
  const StateLattice lat = StateLattice::build(spec, train, call, lo);
  EpsilonOptions o;
  o.wealth_nodes = 81;
  const auto a = epsilon_multi_period(spec, call, lat, o);
  // Same axis moved by c, so the grids line up exactly.
  const double c = 10.0;
  EpsilonOptions shifted = o;
  shifted.wealth = a.wealth;
  for (double& x : shifted.wealth) x += c;
  const auto b = epsilon_multi_period(spec, Payoff::shifted(call, c), lat, shifted);
  EXPECT_NEAR(b.price, a.price + c, 1e-6);
  EXPECT_NEAR(b.worst_abs_error, a.worst_abs_error, 1e-6);
  EXPECT_GE(a.min_second_difference, -1e-8);
}

TEST(MultiPeriod, OutOfTheMoneyBelowEqualRisk) {
  MarketParams m;
  const PathSet train = simulate_paths(m, 20000, 7);
  const double g = calibrate_gamma(UncertaintyKind::u1prime, m, 1, train, 0.95).gamma;
  const UncertaintySpec spec = UncertaintySpec::u1prime(m, g);
  const Payoff call = Payoff::european_call(1050.0);
  LatticeOptions lo;
  lo.price_nodes = 121;
  const StateLattice lat = StateLattice::build(spec, train, call, lo);
  EpsilonOptions o;
  o.wealth_nodes = 61;
  const auto eps = epsilon_multi_period(spec, call, lat, o);
  const auto pair = solve_european_batch(TransitionModel::robust(spec), {call}, lat).front();
  const double erp = erp_and_fpi(pair.writer.value.root, pair.buyer.value.root).erp;
  EXPECT_LT(eps.price, erp);
  EXPECT_GE(eps.min_second_difference, -1e-8);
}
