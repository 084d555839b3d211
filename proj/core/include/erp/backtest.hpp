#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "erp/baselines.hpp"
#include "erp/dp.hpp"
#include "erp/epsilon.hpp"
#include "erp/lattice.hpp"
#include "erp/market.hpp"

namespace erp {

enum class PricerTag { erp_robust, erp_risk, epsilon, bs, binomial };

std::string to_string(PricerTag tag);

/// What a strategy sees at date k before choosing its position.
struct PathState {
  int k = 0;
  double price = 0.0;
  double log_return = 0.0;  // log(S_k / S_0)
  double sum_sq = 0.0;      // sum of squared returns so far
  double aux = 0.0;
  double wealth = 0.0;  // own trading account: +p0 for the writer, -p0 for the buyer, plus gains
};

struct Strategy {
  using PositionFn = std::function<double(const PathState&)>;
  using ExerciseFn = std::function<bool(const PathState&)>;

  std::string name;
  PricerTag tag = PricerTag::erp_robust;
  Side side = Side::writer;
  double price = 0.0;
  PositionFn position;  // money in the asset over (t_k, t_{k+1}]
  ExerciseFn exercise;  // buyer only; empty means hold to maturity
};

/// Writer and buyer replayed on the same paths at the same price. The buyer's
/// exercise rule fixes the stopping date for both.
struct StrategyPair {
  std::string name;
  Strategy writer;
  Strategy buyer;
};

struct BacktestOptions {
  /// Paths whose price leaves [exclude_below, exclude_above] are dropped.
  double exclude_below = 0.0;
  double exclude_above = std::numeric_limits<double>::infinity();
  int threads = 0;
};

/// The default exclusion band: three times beyond the lattice hull.
BacktestOptions exclusion_for(const StateLattice& lattice, int threads = 0);

struct ReplayResult {
  int stop = 0;  // exercise date (K for European)
  double payout = 0.0;
  double writer_wealth = 0.0;  // p0 + sum zeta r
  double buyer_wealth = 0.0;   // -p0 + sum zeta r
  double writer_loss = 0.0;
  double buyer_loss = 0.0;
  bool excluded = false;
};

ReplayResult replay(const StrategyPair& pair, const ReturnPath& path, const Payoff& payoff,
                    const MarketParams& market, const BacktestOptions& options = {});

struct MetricRow {
  double rank = 0.0;  // 100 means the sample maximum
  double writer_quantile = 0.0;
  double buyer_quantile = 0.0;
  double avg = 0.0;
  double diff = 0.0;
};

std::string rank_label(double rank);
std::vector<double> default_ranks();

/// Nearest-rank style quantile: the element at 0-based index
/// min(n - 1, ceil(q n / 100)) of the sorted sample.
double sample_quantile(std::vector<double> values, double rank);

std::vector<MetricRow> quantile_metrics(const std::vector<double>& writer_losses,
                                        const std::vector<double>& buyer_losses,
                                        const std::vector<double>& ranks = default_ranks());

struct PairResult {
  std::string name;
  double price = 0.0;
  std::vector<double> writer_losses;  // included paths only
  std::vector<double> buyer_losses;
  std::vector<int> stops;
  std::size_t paths = 0;
  std::size_t excluded = 0;
  std::vector<MetricRow> metrics;
};

struct BacktestReport {
  std::vector<PairResult> pairs;
};

BacktestReport run_backtest(const std::vector<StrategyPair>& strategies, const PathSet& test,
                            const Payoff& payoff, const MarketParams& market,
                            const BacktestOptions& options = {},
                            const std::vector<double>& ranks = default_ranks());

/// strategy,rank,avg_loss,diff_loss,n_paths,n_excluded
void write_metrics_csv(std::ostream& os, const BacktestReport& report);
/// strategy,path,writer_loss,buyer_loss,stop
void write_losses_csv(std::ostream& os, const BacktestReport& report);

// Strategy builders. Lattice policies are interpolated with clamping; k = 0
// uses the root position.

Strategy lattice_strategy(std::string name, PricerTag tag, Side side, double price,
                          std::shared_ptr<const StateLattice> lattice, HedgePolicy hedge);

/// Buyer exercise rule from an American buyer solution: stop when the
/// post-exercise value less the payout is no worse than continuing.
Strategy::ExerciseFn lattice_exercise(std::shared_ptr<const StateLattice> lattice,
                                      const AmericanSolution& buyer, const Payoff& payoff);

/// Delta hedge from an analytic or tree quote; the buyer takes the opposite side.
Strategy quote_strategy(std::string name, PricerTag tag, Side side, const BaselineQuote& quote);

/// Both parties replicate with the epsilon policy; the buyer mirrors the writer.
StrategyPair epsilon_pair(std::string name, std::shared_ptr<const StateLattice> lattice,
                          std::shared_ptr<const EpsilonSolution> solution);

}  // namespace erp
