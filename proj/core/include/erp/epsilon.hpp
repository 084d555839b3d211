#pragma once

#include <array>
#include <limits>
#include <vector>

#include "erp/lattice.hpp"
#include "erp/market.hpp"
#include "erp/uncertainty.hpp"

namespace erp {

/// Price and replication of a call whose terminal price ranges over [l, u]
/// with one trade: min over (xi, p0) of max |(S1 - K)^+ - p0 - xi (S1 - S0)|.
struct OnePeriodQuote {
  double price = 0.0;
  double xi = 0.0;  // shares
  double worst_abs_error = 0.0;
};

OnePeriodQuote epsilon_one_period(double s0, double l, double u, double strike);

/// The objective's four linear pieces evaluated at (xi, p0) and a convex
/// combination of their gradients that vanishes, if one exists.
struct SubgradientCertificate {
  bool valid = false;
  std::array<double, 4> phi{};
  std::array<double, 4> lambda{};
  bool common_max = false;
  bool zero_in_hull = false;
};

SubgradientCertificate verify_subgradient(double s0, double l, double u, double strike, double xi,
                                          double price, double tol = 1e-9);

struct EpsilonOptions {
  int wealth_nodes = 201;
  /// Half width of the default wealth axis as a fraction of S0.
  double wealth_half_width = 0.2;
  /// Centre of the default axis; NaN picks Black-Scholes for calls and puts
  /// and the payoff at S0 otherwise.
  double wealth_center = std::numeric_limits<double>::quiet_NaN();
  /// Explicit sorted wealth axis; overrides the three fields above.
  std::vector<double> wealth;
  bool include_outside_nodes = true;
  bool extend_outside_states = true;
  int threads = 0;
};

struct EpsilonSolution {
  double price = 0.0;
  double worst_abs_error = 0.0;
  double root_zeta = 0.0;  // money in the asset at t = 0
  std::vector<double> wealth;
  /// value[k][node * W + i] and zeta[k][node * W + i] for wealth node i, k < K.
  std::vector<std::vector<double>> value;
  std::vector<std::vector<double>> zeta;
  /// Most negative second difference of W_k along the wealth axis.
  double min_second_difference = 0.0;

  std::size_t wealth_count() const { return wealth.size(); }
  /// Position at date k for state (S, theta, Y) and accumulated wealth X.
  double zeta_at(const StateLattice& lattice, int k, double price, double theta, double aux,
                 double x) const;
};

/// Wealth-augmented minimax replication over the robust set. Terminal error is
/// |F - X|; the price minimizes the root value over X.
EpsilonSolution epsilon_multi_period(const UncertaintySpec& spec, const Payoff& payoff,
                                     const StateLattice& lattice, const EpsilonOptions& options = {});

}  // namespace erp
