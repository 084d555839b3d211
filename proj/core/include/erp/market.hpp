#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace erp {

/// Discretely observed geometric Brownian motion. Drift and volatility are
/// annualized; the horizon is split into `periods` equal rebalancing steps.
struct MarketParams {
  double mu = 0.0718;
  double sigma = 0.1283;
  double s0 = 1000.0;
  double maturity = 1.0;
  int periods = 16;

  void validate() const;
  double dt() const { return maturity / periods; }
  /// Time of rebalancing date k, k in [0, periods].
  double time(int k) const { return maturity * k / periods; }
  bool operator==(const MarketParams&) const = default;
};

/// Simple returns r_1..r_K of one sample path.
struct ReturnPath {
  std::vector<double> returns;

  std::size_t size() const { return returns.size(); }
  double operator[](std::size_t k) const { return returns[k]; }
};

enum class PathRole { train, test };

std::string to_string(PathRole role);

struct PathSet {
  std::vector<ReturnPath> paths;
  std::uint64_t seed = 0;
  PathRole role = PathRole::train;

  std::size_t size() const { return paths.size(); }
  bool empty() const { return paths.empty(); }
  /// Common path length; 0 for an empty set.
  int periods() const;
};

/// Simulates `n` paths with (1 + r_k) i.i.d. lognormal(mu*dt, sigma^2*dt).
/// Path i draws from its own stream keyed by (seed, first_index + i), so a
/// path never depends on how many others are generated alongside it.
PathSet simulate_paths(const MarketParams& params, std::size_t n, std::uint64_t seed,
                       PathRole role = PathRole::train, std::size_t first_index = 0);

struct TrainTestSplit {
  PathSet train;
  PathSet test;
};

/// Simulates n_train + n_test paths from one seed: the first n_train form the
/// train set, the rest the test set.
TrainTestSplit simulate_split(const MarketParams& params, std::size_t n_train, std::size_t n_test,
                              std::uint64_t seed);

/// S_0 = s0, S_k = S_{k-1} (1 + r_k).
std::vector<double> price_path(double s0, const ReturnPath& path);
ReturnPath returns_from_prices(std::span<const double> prices);

/// CSV layout: header `r_1,...,r_K`, then one row of simple returns per path.
void write_paths_csv(std::ostream& os, const PathSet& set);
PathSet read_paths_csv(std::istream& is, PathRole role = PathRole::train);

enum class PayoffKind { call, put, custom };

/// Option payout as a function of the price and an optional auxiliary
/// process Y (running maximum, running average, ...). Y is advanced only at
/// rebalancing dates by `aux_update(Y_k, S_k, r_{k+1})`.
struct Payoff {
  using PayoutFn = std::function<double(double price, double aux)>;
  using AuxUpdateFn = std::function<double(double aux, double price, double ret)>;

  PayoffKind kind = PayoffKind::custom;
  double strike = 0.0;
  PayoutFn terminal;
  PayoutFn intermediate;  // exercise value F_k before maturity; empty for European
  AuxUpdateFn aux_update;
  double aux_initial = 0.0;
  std::string name;

  bool is_american() const { return static_cast<bool>(intermediate); }
  bool has_aux() const { return static_cast<bool>(aux_update); }

  double terminal_value(double price, double aux = 0.0) const { return terminal(price, aux); }
  double exercise_value(double price, double aux = 0.0) const;
  double next_aux(double aux, double price, double ret) const {
    return aux_update ? aux_update(aux, price, ret) : aux;
  }

  static Payoff european_call(double strike);
  static Payoff european_put(double strike);
  static Payoff american_call(double strike);
  static Payoff american_put(double strike);
  /// Pays (Y_T - strike)^+ where Y_T is the maximum of S_1..S_K.
  static Payoff running_max_call(double strike);
  /// Pays (Y_T - strike)^+ where Y_T is the average of S_1..S_K.
  static Payoff asian_call(double strike, int periods);
  /// Pays a constant amount; handy for translation checks.
  static Payoff constant(double amount);
  /// Adds a constant to every payout of `base`.
  static Payoff shifted(Payoff base, double amount);
};

/// Evaluates the payoff along a price path. `at` selects an intermediate date
/// (American exercise value F_k); nullopt or the last index means maturity.
double evaluate_payoff(const Payoff& payoff, std::span<const double> prices,
                       std::optional<int> at = std::nullopt);

}  // namespace erp
