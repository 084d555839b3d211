#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "erp/market.hpp"
#include "erp/risk.hpp"
#include "erp/uncertainty.hpp"

namespace erp::app {

enum class OptionStyle { european, american };

struct PayoffConfig {
  std::string type = "call";  // call | put | running_max_call | asian_call | constant
  OptionStyle style = OptionStyle::european;
  double strike = 1000.0;
  double amount = 0.0;  // constant payoffs only

  bool operator==(const PayoffConfig&) const = default;
};

struct UncertaintyConfig {
  UncertaintyKind kind = UncertaintyKind::u2;
  std::optional<double> gamma;  // calibrated from the train paths when absent
  double coverage = 0.95;
  int partitions = 0;  // 0: nearest divisor of K to sqrt(K)
  double box_lower = 0.0;
  double box_upper = 0.0;

  bool operator==(const UncertaintyConfig&) const = default;
};

struct RunConfig {
  MarketParams market;
  PayoffConfig payoff;
  RiskMapping risk;
  int risk_atoms = 51;
  UncertaintyConfig uncertainty;

  int price_nodes = 201;
  int theta_nodes = 101;
  int aux_nodes = 41;

  bool include_outside_nodes = true;
  bool extend_outside_states = true;
  bool verify_post_exercise = true;

  /// American writer models to price: commit, no_commit or both.
  std::vector<std::string> american_modes = {"commit", "no_commit"};

  int wealth_nodes = 201;
  double wealth_half_width = 0.2;
  bool price_epsilon = false;  // also run the epsilon DP inside `price`

  int binomial_steps = 225;

  std::size_t train_paths = 100000;
  std::size_t test_paths = 100000;
  std::uint64_t seed = 7;
  std::string train_file;  // read train paths from CSV instead of simulating

  std::vector<std::string> strategies = {"erp", "bs"};
  bool dump_losses = false;

  std::string out_dir = "out";
  int threads = 0;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& is);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key, in schema order, with doubles printed to round-trip exactly.
std::string emit_config(const RunConfig& config);

/// Key, default and one-line description for each setting.
struct ConfigKey {
  std::string key;
  std::string value;
  std::string help;
};
std::vector<ConfigKey> config_schema();

}  // namespace erp::app
