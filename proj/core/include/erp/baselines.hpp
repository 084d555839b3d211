#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "erp/market.hpp"

namespace erp {

enum class OptionType { call, put };

/// Price with a hedge ratio in shares at (k, S). Rates are zero throughout.
struct BaselineQuote {
  double price = 0.0;
  double delta0 = 0.0;  // shares held at t = 0
  std::function<double(int k, double price)> delta;
  /// Early-exercise rule at (k, S); empty for European quotes.
  std::function<bool(int k, double price)> exercise;
};

double black_scholes_price(double s, double strike, double sigma, double tau, OptionType type);
double black_scholes_delta(double s, double strike, double sigma, double tau, OptionType type);

/// Black-Scholes quote; the delta policy uses the remaining time to maturity
/// of rebalancing date k on a grid of `periods` equal steps.
BaselineQuote black_scholes(double s0, double strike, double sigma, double maturity, OptionType type,
                            int periods = 1);

/// CRR tree price with O(steps) memory; `american` enables early exercise.
double binomial_price(double s0, double strike, double sigma, double maturity, int steps,
                      OptionType type, bool american);

/// Recombining CRR tree, u = exp(sigma sqrt(T / steps)), d = 1 / u.
class BinomialTree {
 public:
  BinomialTree(double s0, double strike, double sigma, double maturity, int steps, OptionType type,
               bool american);

  double price() const { return values_[0][0]; }
  int steps() const { return steps_; }
  double node_price(int step, int j) const;  // j up-moves out of `step`
  double value(int step, int j) const { return values_[step][j]; }
  bool exercise(int step, int j) const { return exercise_[step][j] != 0; }
  /// Shares held over (step, step + 1] from adjacent child values.
  double delta(int step, int j) const;

  /// Delta at time t and price S, read from the nearest tree step and
  /// interpolated linearly in log price between nodes.
  double delta_at(double t, double s) const;
  /// Whether early exercise is optimal at time t and price S (nearest step,
  /// nearest node in log price). Always true at maturity.
  bool exercise_at(double t, double s) const;

 private:
  double s0_, strike_, maturity_, up_;
  int steps_;
  OptionType type_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint8_t>> exercise_;

  double intrinsic(double s) const;
  int nearest_step(double t) const;
};

/// American quote priced on `steps` tree steps. The delta and exercise
/// policies come from a second tree with `periods` steps so that they line up
/// with rebalancing dates k = 0..periods (periods = 0 reuses `steps`).
BaselineQuote binomial_american(double s0, double strike, double sigma, double maturity, int steps,
                                OptionType type, int periods = 0);

}  // namespace erp
