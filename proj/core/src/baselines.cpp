#include "erp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "erp/errors.hpp"

namespace erp {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_inputs(double s, double strike, double sigma, double tau) {
  if (!(s > 0.0) || !(strike > 0.0)) throw ParameterError("baseline: price and strike must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("baseline: sigma must be > 0");
  if (!(tau >= 0.0)) throw ParameterError("baseline: time to maturity must be >= 0");
}

double payoff(double s, double strike, OptionType type) {
  return type == OptionType::call ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
}

}  // namespace

double black_scholes_price(double s, double strike, double sigma, double tau, OptionType type) {
  check_inputs(s, strike, sigma, tau);
  if (tau == 0.0) return payoff(s, strike, type);
  const double v = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / strike) + 0.5 * v * v) / v;
  const double d2 = d1 - v;
  if (type == OptionType::call) return s * norm_cdf(d1) - strike * norm_cdf(d2);
  return strike * norm_cdf(-d2) - s * norm_cdf(-d1);
}

double black_scholes_delta(double s, double strike, double sigma, double tau, OptionType type) {
  check_inputs(s, strike, sigma, tau);
  if (tau == 0.0) {
    if (type == OptionType::call) return s > strike ? 1.0 : 0.0;
    return s < strike ? -1.0 : 0.0;
  }
  const double v = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / strike) + 0.5 * v * v) / v;
  return type == OptionType::call ? norm_cdf(d1) : norm_cdf(d1) - 1.0;
}

BaselineQuote black_scholes(double s0, double strike, double sigma, double maturity, OptionType type,
                            int periods) {
  if (!(maturity > 0.0)) throw ParameterError("black_scholes: maturity must be > 0");
  if (periods < 1) throw ParameterError("black_scholes: periods must be >= 1");
  BaselineQuote q;
  q.price = black_scholes_price(s0, strike, sigma, maturity, type);
  q.delta0 = black_scholes_delta(s0, strike, sigma, maturity, type);
  q.delta = [=](int k, double s) {
    const double tau = maturity * (periods - k) / periods;
    return black_scholes_delta(s, strike, sigma, std::max(tau, 0.0), type);
  };
  return q;
}

double binomial_price(double s0, double strike, double sigma, double maturity, int steps,
                      OptionType type, bool american) {
  check_inputs(s0, strike, sigma, maturity);
  if (steps < 1) throw ParameterError("binomial: steps must be >= 1");
  const double u = std::exp(sigma * std::sqrt(maturity / steps));
  const double d = 1.0 / u;
  const double p = (1.0 - d) / (u - d);
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("binomial: risk-neutral probability outside [0, 1]");
  std::vector<double> v(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) v[j] = payoff(s0 * std::pow(u, 2 * j - steps), strike, type);
  for (int n = steps - 1; n >= 0; --n) {
    for (int j = 0; j <= n; ++j) {
      double c = p * v[j + 1] + (1.0 - p) * v[j];
      if (american) c = std::max(c, payoff(s0 * std::pow(u, 2 * j - n), strike, type));
      v[j] = c;
    }
  }
  return v[0];
}

BinomialTree::BinomialTree(double s0, double strike, double sigma, double maturity, int steps,
                           OptionType type, bool american)
    : s0_(s0), strike_(strike), maturity_(maturity), steps_(steps), type_(type) {
  check_inputs(s0, strike, sigma, maturity);
  if (steps < 1) throw ParameterError("binomial: steps must be >= 1");
  up_ = std::exp(sigma * std::sqrt(maturity / steps));
  const double d = 1.0 / up_;
  const double p = (1.0 - d) / (up_ - d);
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("binomial: risk-neutral probability outside [0, 1]");
  values_.resize(static_cast<std::size_t>(steps) + 1);
  exercise_.resize(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) {
    values_[n].resize(static_cast<std::size_t>(n) + 1);
    exercise_[n].assign(static_cast<std::size_t>(n) + 1, 0);
  }
  for (int j = 0; j <= steps; ++j) {
    values_[steps][j] = intrinsic(node_price(steps, j));
    exercise_[steps][j] = 1;
  }
  for (int n = steps - 1; n >= 0; --n) {
    for (int j = 0; j <= n; ++j) {
      const double cont = p * values_[n + 1][j + 1] + (1.0 - p) * values_[n + 1][j];
      const double now = intrinsic(node_price(n, j));
      const bool ex = american && now > 0.0 && now >= cont;
      values_[n][j] = ex ? now : cont;
      exercise_[n][j] = ex;
    }
  }
}

double BinomialTree::intrinsic(double s) const { return payoff(s, strike_, type_); }

double BinomialTree::node_price(int step, int j) const { return s0_ * std::pow(up_, 2 * j - step); }

double BinomialTree::delta(int step, int j) const {
  if (step >= steps_) return 0.0;
  const double su = node_price(step + 1, j + 1), sd = node_price(step + 1, j);
  return (values_[step + 1][j + 1] - values_[step + 1][j]) / (su - sd);
}

int BinomialTree::nearest_step(double t) const {
  const int n = static_cast<int>(std::lround(t / maturity_ * steps_));
  return std::clamp(n, 0, steps_);
}

double BinomialTree::delta_at(double t, double s) const {
  const int n = nearest_step(t);
  if (n >= steps_) return 0.0;
  const double x = std::clamp((std::log(s / s0_) / std::log(up_) + n) / 2.0, 0.0, static_cast<double>(n));
  const int j0 = static_cast<int>(std::floor(x));
  const int j1 = std::min(j0 + 1, n);
  const double w = x - j0;
  return (1.0 - w) * delta(n, j0) + w * delta(n, j1);
}

bool BinomialTree::exercise_at(double t, double s) const {
  const int n = nearest_step(t);
  if (n >= steps_) return true;
  const double x = (std::log(s / s0_) / std::log(up_) + n) / 2.0;
  const int j = std::clamp(static_cast<int>(std::lround(x)), 0, n);
  return exercise(n, j) && intrinsic(s) > 0.0;
}

BaselineQuote binomial_american(double s0, double strike, double sigma, double maturity, int steps,
                                OptionType type, int periods) {
  if (periods <= 0) periods = steps;
  BaselineQuote q;
  q.price = binomial_price(s0, strike, sigma, maturity, steps, type, true);
  auto tree = std::make_shared<const BinomialTree>(s0, strike, sigma, maturity, periods, type, true);
  q.delta0 = tree->delta(0, 0);
  q.delta = [tree, maturity, periods](int k, double s) {
    return tree->delta_at(maturity * k / periods, s);
  };
  q.exercise = [tree, maturity, periods](int k, double s) {
    return tree->exercise_at(maturity * k / periods, s);
  };
  return q;
}

}  // namespace erp
