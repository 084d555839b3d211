#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "erp/dp.hpp"
#include "erp/errors.hpp"

using namespace erp;

namespace {

struct U2Setup {
  MarketParams market;
  PathSet train;
  UncertaintySpec spec;
  LatticeOptions grid;

  explicit U2Setup(int periods = 16) {
    market.periods = periods;
    train = simulate_paths(market, 20000, 7);
    const int parts = default_partitions(periods);
    spec = UncertaintySpec::u2(market, calibrate_gamma(UncertaintyKind::u2, market, parts, train, 0.95).gamma, parts);
    grid.price_nodes = 101;
    grid.theta_nodes = 41;
  }
  StateLattice lattice(const Payoff& f) const { return StateLattice::build(spec, train, f, grid); }
};

const U2Setup& u2() {
  static const U2Setup s;
  return s;
}

// One-period box on prices [L, U]: the cheapest superhedge is the chord of
// the payoff through its values at L and U, the best subhedge its tangent at S0.
double chord_at_s0(double s0, double L, double U, double strike) {
  const double fl = std::max(L - strike, 0.0), fu = std::max(U - strike, 0.0);
  return fl + (fu - fl) * (s0 - L) / (U - L);
}

}  // namespace

TEST(OnePeriodBox, IntroInstance) {
  MarketParams m;
  m.s0 = 100.0;
  m.periods = 1;
  const UncertaintySpec box = UncertaintySpec::box(m, -0.1, 0.3);
  const Payoff call = Payoff::european_call(100.0);
  const StateLattice lat = StateLattice::build(box, PathSet{}, call);
  const auto model = TransitionModel::robust(box);
  const auto w = solve_european(Side::writer, model, call, lat);
  const auto b = solve_european(Side::buyer, model, call, lat);
  EXPECT_NEAR(w.value.root, 7.5, 1e-9);
  EXPECT_NEAR(b.value.root, 0.0, 1e-9);
  const PriceInterval p = erp_and_fpi(w.value.root, b.value.root);
  EXPECT_NEAR(p.erp, 3.75, 1e-9);
  EXPECT_NEAR(p.fpi_lower, 0.0, 1e-9);
  EXPECT_NEAR(p.fpi_upper, 7.5, 1e-9);
  // Superhedge: hold (fu - fl) / (U - L) shares, i.e. 0.75 * 100 in money.
  EXPECT_NEAR(w.hedge.root, 75.0, 1e-7);
}

TEST(OnePeriodBox, ChordAndTangentAcrossStrikes) {
  MarketParams m;
  m.s0 = 100.0;
  m.periods = 1;
  const UncertaintySpec box = UncertaintySpec::box(m, -0.1, 0.3);
  LatticeOptions o;
  o.explicit_prices = uniform_grid(90.0, 130.0, 41);
  const auto model = TransitionModel::robust(box);
  for (double strike = 90.0; strike <= 130.0; strike += 5.0) {
    const Payoff call = Payoff::european_call(strike);
    const StateLattice lat = StateLattice::build(box, PathSet{}, call, o);
    const auto pair = solve_european_batch(model, {call}, lat).front();
    EXPECT_NEAR(pair.writer.value.root, chord_at_s0(100.0, 90.0, 130.0, strike), 1e-6) << strike;
    EXPECT_NEAR(pair.buyer.value.root, -std::max(100.0 - strike, 0.0), 1e-6) << strike;
  }
}

TEST(RobustDp, ConstantPayoffHasNoRisk) {
  const U2Setup& s = u2();
  const Payoff c = Payoff::constant(12.5);
  const StateLattice lat = s.lattice(c);
  const auto pair = solve_european_batch(TransitionModel::robust(s.spec), {c}, lat).front();
  EXPECT_NEAR(pair.writer.value.root, 12.5, 1e-9);
  EXPECT_NEAR(pair.buyer.value.root, -12.5, 1e-9);
}

TEST(RobustDp, PureTradingRootIsZero) {
  const U2Setup& s = u2();
  const Payoff zero = Payoff::constant(0.0);
  const StateLattice lat = s.lattice(zero);
  const auto w = solve_european(Side::writer, TransitionModel::robust(s.spec), zero, lat);
  EXPECT_NEAR(w.value.root, 0.0, 1e-10);
  for (const auto& slice : w.value.values)
    for (double v : slice) ASSERT_NEAR(v, 0.0, 1e-10);
}

TEST(RobustDp, MidpointIdentityAndTranslation) {
  const U2Setup& s = u2();
  const Payoff call = Payoff::european_call(1000.0);
  const StateLattice lat = s.lattice(call);
  const auto model = TransitionModel::robust(s.spec);
  const auto pairs = solve_european_batch(model, {call, Payoff::shifted(call, 7.0)}, lat);
  const PriceInterval a = erp_and_fpi(pairs[0].writer.value.root, pairs[0].buyer.value.root);
  const PriceInterval b = erp_and_fpi(pairs[1].writer.value.root, pairs[1].buyer.value.root);
  EXPECT_EQ(a.erp, 0.5 * (a.fpi_lower + a.fpi_upper));
  EXPECT_LT(a.fpi_lower, a.erp);
  EXPECT_LT(a.erp, a.fpi_upper);
  EXPECT_NEAR(b.erp, a.erp + 7.0, 1e-8);
  EXPECT_NEAR(b.fpi_upper - b.fpi_lower, a.fpi_upper - a.fpi_lower, 1e-8);
}

TEST(RobustDp, BatchMatchesSingleSolves) {
  const U2Setup& s = u2();
  const Payoff put = Payoff::european_put(1050.0);
  const StateLattice lat = s.lattice(put);
  const auto model = TransitionModel::robust(s.spec);
  const auto pair = solve_european_batch(model, {put}, lat).front();
  EXPECT_DOUBLE_EQ(pair.writer.value.root, solve_european(Side::writer, model, put, lat).value.root);
  EXPECT_DOUBLE_EQ(pair.buyer.value.root, solve_european(Side::buyer, model, put, lat).value.root);
}

TEST(RobustDp, ThreadCountDoesNotChangeResults) {
  const U2Setup& s = u2();
  const Payoff call = Payoff::european_call(1000.0);
  const StateLattice lat = s.lattice(call);
  SolverOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto model = TransitionModel::robust(s.spec);
  const auto a = solve_european(Side::writer, model, call, lat, one);
  const auto b = solve_european(Side::writer, model, call, lat, many);
  EXPECT_EQ(a.value.values, b.value.values);
  EXPECT_EQ(a.hedge.zeta, b.hedge.zeta);
}

TEST(ProbabilisticDp, CvarRiskGrowsWithBeta) {
  MarketParams m;
  m.periods = 4;
  const PathSet train = simulate_paths(m, 5000, 1);
  const Payoff call = Payoff::european_call(1000.0);
  LatticeOptions o;
  o.price_nodes = 121;
  const StateLattice lat = StateLattice::build_plain(m, train, call, o);
  double last_w = -1e300, last_b = -1e300;
  for (double beta : {0.5, 0.7, 0.8, 0.9, 0.95}) {
    const auto model = TransitionModel::probabilistic(RiskMapping::cvar(beta), m, 51);
    const auto pair = solve_european_batch(model, {call}, lat).front();
    EXPECT_GE(pair.writer.value.root, last_w - 1e-9) << beta;
    EXPECT_GE(pair.buyer.value.root, last_b - 1e-9) << beta;
    last_w = pair.writer.value.root;
    last_b = pair.buyer.value.root;
    const PriceInterval p = erp_and_fpi(pair.writer.value.root, pair.buyer.value.root);
    EXPECT_LE(p.fpi_lower, p.fpi_upper);
  }
}

TEST(ProbabilisticDp, CvarPureTradingIsZero) {
  MarketParams m;
  m.periods = 4;
  const PathSet train = simulate_paths(m, 2000, 1);
  const Payoff zero = Payoff::constant(0.0);
  const StateLattice lat = StateLattice::build_plain(m, train, zero);
  const auto model = TransitionModel::probabilistic(RiskMapping::cvar(0.9), m, 51);
  EXPECT_NEAR(solve_european(Side::writer, model, zero, lat).value.root, 0.0, 1e-9);
}

TEST(ProbabilisticDp, ExpectationWithDriftIsUnbounded) {
  MarketParams m;
  m.periods = 2;
  const PathSet train = simulate_paths(m, 1000, 1);
  const Payoff call = Payoff::european_call(1000.0);
  const StateLattice lat = StateLattice::build_plain(m, train, call);
  const auto model = TransitionModel::probabilistic(RiskMapping::expectation(), m, 21);
  EXPECT_THROW(solve_european(Side::writer, model, call, lat), UnboundedError);
}

TEST(AmericanDp, PostExerciseSlicesVanish) {
  const U2Setup& s = u2();
  const Payoff put = Payoff::american_put(1000.0);
  const StateLattice lat = s.lattice(put);
  SolverOptions o;
  o.verify_post_exercise = true;
  const AmericanSet set = solve_american_all(TransitionModel::robust(s.spec), put, lat, o);
  for (const AmericanSolution* a : {&set.buyer, &set.writer_commit, &set.writer_no_commit}) {
    ASSERT_FALSE(a->post_exercise.values.empty());
    double worst = 0.0;
    for (const auto& slice : a->post_exercise.values)
      for (double v : slice) worst = std::max(worst, std::abs(v));
    EXPECT_LE(worst, 1e-8);
  }
}

TEST(AmericanDp, CommitNeverAboveNoCommit) {
  const U2Setup& s = u2();
  const auto model = TransitionModel::robust(s.spec);
  for (double strike : {950.0, 1000.0, 1050.0}) {
    const Payoff put = Payoff::american_put(strike);
    const AmericanSet set = solve_american_all(model, put, s.lattice(put));
    EXPECT_LE(set.writer_commit.value.root, set.writer_no_commit.value.root + 1e-9) << strike;
    const double intrinsic = std::max(strike - 1000.0, 0.0);
    EXPECT_GE(set.writer_no_commit.value.root, intrinsic - 1e-9);
  }
}

TEST(AmericanDp, NoEarlyValueMatchesEuropean) {
  const U2Setup& s = u2();
  Payoff put = Payoff::european_put(1000.0);
  Payoff late = put;
  late.intermediate = [](double, double) { return 0.0; };
  const StateLattice lat = s.lattice(put);
  const auto model = TransitionModel::robust(s.spec);
  const auto eu = solve_european(Side::writer, model, put, lat);
  const auto am = solve_american(Side::writer, model, late, lat, AmericanMode::no_commit);
  EXPECT_NEAR(am.value.root, eu.value.root, 1e-9);
}

TEST(AmericanDp, ExerciseRowAtMaturityIsAllOnes) {
  const U2Setup& s = u2();
  const Payoff put = Payoff::american_put(1050.0);
  const StateLattice lat = s.lattice(put);
  const auto b = solve_american(Side::buyer, TransitionModel::robust(s.spec), put, lat, AmericanMode::commit);
  for (auto flag : b.exercise.exercise.back()) ASSERT_EQ(flag, 1);
}

TEST(PriceInterval, Examples) {
  const PriceInterval intro = erp_and_fpi(7.5, -0.0);
  EXPECT_DOUBLE_EQ(intro.erp, 3.75);
  EXPECT_DOUBLE_EQ(intro.fpi_lower, 0.0);
  EXPECT_DOUBLE_EQ(intro.fpi_upper, 7.5);
  EXPECT_NEAR(erp_and_fpi(75.96, -34.03).erp, 54.995, 1e-12);
  const PriceInterval point = erp_and_fpi(4.0, -4.0);
  EXPECT_DOUBLE_EQ(point.erp, 4.0);
  EXPECT_DOUBLE_EQ(point.fpi_lower, point.fpi_upper);
  EXPECT_THROW(erp_and_fpi(std::numeric_limits<double>::infinity(), 0.0), NumericalError);
}

TEST(Bisection, LinearAndStep) {
  EXPECT_NEAR(bisect_price([](double p) { return 10.0 - 2.0 * p; }, 0.0, 10.0), 5.0, 1e-8);
  const double jump = 3.3;
  const double p = bisect_price([&](double x) { return x < jump ? 1.0 : -1.0; }, 0.0, 10.0, 1e-8);
  EXPECT_NEAR(p, jump, 1e-8);
  EXPECT_THROW(bisect_price([](double p) { return p; }, 1.0, 2.0), NumericalError);
}

TEST(Bisection, AgreesWithMidpointForInvariantMappings) {
  MarketParams m;
  m.s0 = 100.0;
  m.periods = 1;
  const UncertaintySpec box = UncertaintySpec::box(m, -0.1, 0.3);
  const Payoff call = Payoff::european_call(100.0);
  const StateLattice lat = StateLattice::build(box, PathSet{}, call);
  const auto model = TransitionModel::robust(box);
  auto delta = [&](double p0) {
    const Payoff f = Payoff::shifted(call, -p0);
    return solve_european(Side::writer, model, f, lat).value.root -
           solve_european(Side::buyer, model, f, lat).value.root;
  };
  EXPECT_NEAR(bisect_price(delta, 0.0, 7.5, 1e-10), 3.75, 1e-8);
}

TEST(SurfaceCsv, HeaderAndRowCount) {
  MarketParams m;
  m.s0 = 100.0;
  m.periods = 2;
  const UncertaintySpec box = UncertaintySpec::box(m, -0.1, 0.1);
  const Payoff call = Payoff::european_call(100.0);
  LatticeOptions o;
  o.price_nodes = 11;
  const StateLattice lat = StateLattice::build(box, PathSet{}, call, o);
  const auto w = solve_european(Side::writer, TransitionModel::robust(box), call, lat);
  std::ostringstream os;
  write_surface_csv(os, lat, w.value, w.hedge);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "k,S,theta,value,zeta,exercise_flag");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3 * 11);
}
