#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "erp/market.hpp"

namespace erp {

/// Families of return-path uncertainty sets.
///  - box:     every per-period return lies in [lower, upper]; no path memory.
///  - u1prime: band on cumulative log return at every date, intersected with
///             the set of prefixes whose zero continuation stays in the band.
///  - u2:      two-sided bounds on cumulative squared returns at the end of
///             each of `partitions` equal blocks.
enum class UncertaintyKind { box, u1prime, u2 };

std::string to_string(UncertaintyKind kind);
UncertaintyKind parse_uncertainty_kind(const std::string& text);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

/// Feasible values of the next return: at most two ordered disjoint intervals.
struct ReachableReturns {
  std::vector<Interval> intervals;

  bool empty() const { return intervals.empty(); }
  bool contains(double r, double tol = 0.0) const;
  double min() const { return intervals.front().lo; }
  double max() const { return intervals.back().hi; }
};

/// Markov summary of the observed prefix: cumulative log return for u1prime,
/// cumulative squared return for u2, unused for box.
struct ThetaState {
  double value = 0.0;
  int k = 0;
};

struct UncertaintySpec {
  UncertaintyKind kind = UncertaintyKind::u2;
  double gamma = 0.0;
  MarketParams market;
  int partitions = 1;  // u2 only
  double box_lower = 0.0;
  double box_upper = 0.0;

  static UncertaintySpec box(const MarketParams& market, double lower, double upper);
  static UncertaintySpec u1prime(const MarketParams& market, double gamma);
  static UncertaintySpec u2(const MarketParams& market, double gamma, int partitions);

  /// Throws ParameterError on a malformed spec (including a u1prime budget
  /// below the zero-path requirement) and CalibrationError when a u2 budget
  /// lets squared returns reach 1.
  void validate() const;

  int block_length() const { return market.periods / partitions; }
  bool uses_theta() const { return kind != UncertaintyKind::box; }

  /// u1prime: admissible cumulative log return after k periods (k >= 1), the
  /// intersection of the bands of all dates k..K.
  Interval log_band(int k) const;
  /// u2: squared-return bounds at the end of block s (1-based).
  Interval quadratic_bounds(int s) const;
};

/// Smallest budget for which the zero path lies in u1prime.
double u1prime_min_gamma(const MarketParams& market);
/// Largest u2 budget (exclusive) keeping the set inside ]-1, inf[^K.
double u2_max_gamma(const MarketParams& market);
/// Nearest divisor of K to sqrt(K); ties go to the smaller divisor.
int default_partitions(int periods);

bool contains(const UncertaintySpec& spec, const ReturnPath& path);

/// Smallest budget for which `path` lies in the set of the given family.
double critical_gamma(UncertaintyKind kind, const MarketParams& market, int partitions,
                      const ReturnPath& path);

struct CalibrationResult {
  double gamma = 0.0;
  std::size_t covered = 0;
  std::size_t required = 0;
  std::size_t total = 0;
};

/// Smallest budget (relative tolerance 1e-6 on [lower, 100]) such that at least
/// ceil(coverage * n) training paths are contained.
CalibrationResult calibrate_gamma(UncertaintyKind kind, const MarketParams& market,
                                  int partitions, const PathSet& train, double coverage);

/// Feasible r_{k+1} given the state after k periods. Empty when the state has
/// already left the projected set.
ReachableReturns reachable(const UncertaintySpec& spec, int k, double theta);
inline ReachableReturns reachable(const UncertaintySpec& spec, const ThetaState& state) {
  return reachable(spec, state.k, state.value);
}

/// Precomputed per-date bounds; answers `reachable` in O(1) per query.
class ReachableTable {
 public:
  explicit ReachableTable(const UncertaintySpec& spec);

  ReachableReturns operator()(int k, double theta) const;
  /// Whether the state after k periods is still inside the projected set.
  bool valid_state(int k, double theta) const;
  /// Extension of operator() to states outside the projected set, used for
  /// lattice nodes that only enter through interpolation. u1prime states are
  /// first clamped into the current band; a spent u2 budget leaves only r = 0.
  ReachableReturns forward(int k, double theta) const;
  const UncertaintySpec& spec() const { return spec_; }

 private:
  UncertaintySpec spec_;
  std::vector<Interval> bounds_;  // u1prime: log band per date; u2: bounds per block
};

double theta_update(const UncertaintySpec& spec, double theta, double r);
inline ThetaState theta_update(const UncertaintySpec& spec, const ThetaState& s, double r) {
  return {theta_update(spec, s.value, r), s.k + 1};
}

/// Whether the prefix lies in the no-arbitrage part of the set, i.e. the
/// prefix followed by zero returns stays inside.
bool no_arbitrage_predicate(const UncertaintySpec& spec, std::span<const double> prefix);

}  // namespace erp
