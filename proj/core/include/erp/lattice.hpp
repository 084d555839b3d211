#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "erp/market.hpp"
#include "erp/uncertainty.hpp"

namespace erp {

/// How the Markov state theta is represented on the lattice.
///  - none: no theta dimension (box sets, probabilistic mappings).
///  - log_price: theta = log(S / S0) is a function of the price node itself.
///  - axis: theta has its own grid (cumulative squared return).
enum class ThetaMode { none, log_price, axis };

struct LatticeOptions {
  int price_nodes = 201;
  int theta_nodes = 101;
  int aux_nodes = 41;
  /// Overrides the automatic price grid when non-empty (sorted, positive).
  std::vector<double> explicit_prices;
};

/// Time-independent tensor grid over (price, theta, aux). Node index is
/// (p * T + t) * A + a. Values between nodes are multilinear interpolants;
/// queries outside the hull are clamped to it.
class StateLattice {
 public:
  struct Stencil {
    std::array<std::size_t, 8> index{};
    std::array<double, 8> weight{};
    int size = 0;

    double apply(std::span<const double> slice) const {
      double v = 0.0;
      for (int i = 0; i < size; ++i) v += weight[i] * slice[index[i]];
      return v;
    }
  };

  StateLattice(std::vector<double> prices, ThetaMode mode, std::vector<double> thetas,
               std::vector<double> aux, double s0);

  /// Default grid for a robust run: prices log-spaced over the train price
  /// range (or the box hull), theta per the set family, aux over train values.
  static StateLattice build(const UncertaintySpec& spec, const PathSet& train, const Payoff& payoff,
                            const LatticeOptions& options = {});
  /// Price (and aux) grid only, for probabilistic mappings.
  static StateLattice build_plain(const MarketParams& market, const PathSet& train,
                                  const Payoff& payoff, const LatticeOptions& options = {});

  std::size_t size() const { return prices_.size() * theta_count() * aux_count(); }
  std::size_t price_count() const { return prices_.size(); }
  std::size_t theta_count() const { return mode_ == ThetaMode::axis ? thetas_.size() : 1; }
  std::size_t aux_count() const { return aux_.empty() ? 1 : aux_.size(); }
  ThetaMode theta_mode() const { return mode_; }
  bool has_aux() const { return !aux_.empty(); }
  double s0() const { return s0_; }

  const std::vector<double>& prices() const { return prices_; }
  const std::vector<double>& thetas() const { return thetas_; }
  const std::vector<double>& aux() const { return aux_; }

  std::size_t index(std::size_t p, std::size_t t, std::size_t a) const {
    return (p * theta_count() + t) * aux_count() + a;
  }
  double price_at(std::size_t node) const { return prices_[node / (theta_count() * aux_count())]; }
  double theta_at(std::size_t node) const;
  double aux_at(std::size_t node) const { return aux_.empty() ? 0.0 : aux_[node % aux_count()]; }

  double min_price() const { return prices_.front(); }
  double max_price() const { return prices_.back(); }

  Stencil stencil(double price, double theta, double aux) const;
  double interpolate(std::span<const double> slice, double price, double theta, double aux) const {
    return stencil(price, theta, aux).apply(slice);
  }

 private:
  std::vector<double> prices_;
  ThetaMode mode_;
  std::vector<double> thetas_;
  std::vector<double> aux_;
  double s0_;
};

/// n log-spaced points on [lo, hi] split into two runs that meet exactly at
/// `anchor`; lo, anchor and hi are all nodes.
std::vector<double> anchored_log_grid(double lo, double hi, double anchor, int n);
std::vector<double> uniform_grid(double lo, double hi, int n);

}  // namespace erp
