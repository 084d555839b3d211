#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "erp/backtest.hpp"
#include "erp/baselines.hpp"
#include "erp/dp.hpp"
#include "erp/epsilon.hpp"
#include "erp/lattice.hpp"
#include "erp/market.hpp"
#include "erp/uncertainty.hpp"

#include "json.hpp"

namespace erp::app {

Payoff make_payoff(const RunConfig& config);

/// Train paths per the config (CSV file or simulation). Box sets need none.
PathSet train_paths(const RunConfig& config);
/// Test paths come from the same seed, after the train paths.
PathSet test_paths(const RunConfig& config);

/// Γ from the config, or calibrated on the train paths.
struct Calibration {
  UncertaintySpec spec;
  std::optional<CalibrationResult> result;  // absent when Γ was given
};

Calibration calibrate(const RunConfig& config, const PathSet& train);

/// Everything needed to price and replay one contract.
struct Model {
  Payoff payoff;
  TransitionModel transition;
  std::optional<Calibration> calibration;  // robust models only
  std::shared_ptr<const StateLattice> lattice;
  SolverOptions solver;
};

Model build_model(const RunConfig& config, const PathSet& train);

struct AmericanQuote {
  AmericanMode mode;
  PriceInterval interval;
};

struct PricingReport {
  PriceInterval interval;
  std::vector<AmericanQuote> american;  // one per requested writer model
  bool translation_invariant = true;
  double bs = 0.0;  // NaN for payoffs without a closed form
  std::optional<double> binomial;
  std::optional<double> epsilon;
  std::optional<double> epsilon_error;
  std::optional<double> gamma;
  int partitions = 0;
  std::size_t lattice_nodes = 0;
  std::size_t price_nodes = 0, theta_nodes = 0, aux_nodes = 0;
  double wall_time = 0.0;

  /// fpi_lower <= erp <= fpi_upper whenever the interval is nonempty.
  void check() const;
};

/// Pricing artifacts kept for the backtest.
struct Solved {
  Model model;
  PricingReport report;
  std::optional<EuropeanPair> european;
  std::optional<AmericanSet> american;
};

Solved price(const RunConfig& config, const PathSet& train);

struct EpsilonReport {
  double price = 0.0;
  double worst_abs_error = 0.0;
  double min_second_difference = 0.0;
  std::size_t wealth_nodes = 0;
  double wealth_lo = 0.0, wealth_hi = 0.0;
  double wall_time = 0.0;
};

EpsilonReport epsilon_price(const RunConfig& config, const PathSet& train,
                            std::shared_ptr<const EpsilonSolution>* keep = nullptr);

struct BaselineReport {
  double bs = 0.0;
  double bs_delta = 0.0;
  double binomial = 0.0;
  int binomial_steps = 0;
};

BaselineReport baselines(const RunConfig& config);

BacktestReport backtest(const RunConfig& config, const PathSet& train, const PathSet& test);
/// Same, reusing an earlier pricing run of the same config.
BacktestReport backtest(const RunConfig& config, const PathSet& train, const PathSet& test, const Solved& solved);

nlohmann::json to_json(const PricingReport& r);
nlohmann::json to_json(const EpsilonReport& r);
nlohmann::json to_json(const BaselineReport& r);
nlohmann::json to_json(const CalibrationResult& r, const UncertaintySpec& spec);

/// ERP,FPI and baselines as a single CSV header + row.
std::string pricing_csv(const PricingReport& r);

}  // namespace erp::app
