#include "erp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erp/errors.hpp"

namespace erp {

namespace {

constexpr double kStateTol = 1e-12;
constexpr double kGammaMax = 100.0;

}  // namespace

std::string to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::box: return "box";
    case UncertaintyKind::u1prime: return "u1prime";
    case UncertaintyKind::u2: return "u2";
  }
  return "?";
}

UncertaintyKind parse_uncertainty_kind(const std::string& text) {
  if (text == "box") return UncertaintyKind::box;
  if (text == "u1prime" || text == "u1") return UncertaintyKind::u1prime;
  if (text == "u2") return UncertaintyKind::u2;
  throw ParameterError("unknown uncertainty kind '" + text + "'");
}

bool ReachableReturns::contains(double r, double tol) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const Interval& i) { return i.contains(r, tol); });
}

UncertaintySpec UncertaintySpec::box(const MarketParams& market, double lower, double upper) {
  UncertaintySpec s;
  s.kind = UncertaintyKind::box;
  s.market = market;
  s.box_lower = lower;
  s.box_upper = upper;
  s.validate();
  return s;
}

UncertaintySpec UncertaintySpec::u1prime(const MarketParams& market, double gamma) {
  UncertaintySpec s;
  s.kind = UncertaintyKind::u1prime;
  s.market = market;
  s.gamma = gamma;
  s.validate();
  return s;
}

UncertaintySpec UncertaintySpec::u2(const MarketParams& market, double gamma, int partitions) {
  UncertaintySpec s;
  s.kind = UncertaintyKind::u2;
  s.market = market;
  s.gamma = gamma;
  s.partitions = partitions;
  s.validate();
  return s;
}

void UncertaintySpec::validate() const {
  market.validate();
  switch (kind) {
    case UncertaintyKind::box:
      if (!(box_lower > -1.0) || !(box_lower <= 0.0) || !(box_upper >= 0.0) ||
          !std::isfinite(box_upper) || !(box_upper > box_lower))
        throw ParameterError("box uncertainty needs -1 < lower <= 0 <= upper, lower < upper");
      break;
    case UncertaintyKind::u1prime:
      if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw ParameterError("u1prime: gamma must be finite and >= 0");
      if (gamma < u1prime_min_gamma(market) * (1.0 - 1e-12))
        throw ParameterError("u1prime: gamma below the zero-path requirement " +
                             std::to_string(u1prime_min_gamma(market)));
      break;
    case UncertaintyKind::u2:
      if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw ParameterError("u2: gamma must be finite and >= 0");
      if (partitions < 1 || market.periods % partitions != 0)
        throw ParameterError("u2: partitions must divide the number of periods");
      if (!(gamma < u2_max_gamma(market)))
        throw CalibrationError("u2: gamma " + std::to_string(gamma) +
                               " lets squared returns reach 1 (limit " +
                               std::to_string(u2_max_gamma(market)) + ")");
      break;
  }
}

Interval UncertaintySpec::log_band(int k) const {
  Interval band{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int j = std::max(k, 1); j <= market.periods; ++j) {
    const double t = market.time(j);
    const double half = gamma * market.sigma * std::sqrt(t);
    band.lo = std::max(band.lo, market.mu * t - half);
    band.hi = std::min(band.hi, market.mu * t + half);
  }
  return band;
}

Interval UncertaintySpec::quadratic_bounds(int s) const {
  const double n = block_length();
  const double centre = market.sigma * market.sigma * s * market.maturity / partitions;
  const double half = gamma * std::sqrt(s * n);
  return {centre - half, centre + half};
}

double u1prime_min_gamma(const MarketParams& market) {
  return std::abs(market.mu) * std::sqrt(market.maturity) / market.sigma;
}

double u2_max_gamma(const MarketParams& market) {
  return (1.0 - market.sigma * market.sigma * market.maturity) / std::sqrt(market.periods);
}

int default_partitions(int periods) {
  if (periods < 1) throw ParameterError("default_partitions: periods must be >= 1");
  const double root = std::sqrt(static_cast<double>(periods));
  int best = 1;
  for (int d = 1; d <= periods; ++d) {
    if (periods % d != 0) continue;
    if (std::abs(d - root) < std::abs(best - root) - 1e-12) best = d;
  }
  return best;
}

ReachableTable::ReachableTable(const UncertaintySpec& spec) : spec_(spec) {
  spec_.validate();
  const int K = spec_.market.periods;
  if (spec_.kind == UncertaintyKind::u1prime) {
    // Suffix intersection, O(K).
    bounds_.assign(static_cast<std::size_t>(K) + 2,
                   {-std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()});
    for (int j = K; j >= 1; --j) {
      const double t = spec_.market.time(j);
      const double half = spec_.gamma * spec_.market.sigma * std::sqrt(t);
      bounds_[j].lo = std::max(bounds_[j + 1].lo, spec_.market.mu * t - half);
      bounds_[j].hi = std::min(bounds_[j + 1].hi, spec_.market.mu * t + half);
    }
    bounds_[0] = bounds_[1];
  } else if (spec_.kind == UncertaintyKind::u2) {
    bounds_.resize(static_cast<std::size_t>(spec_.partitions) + 1);
    for (int s = 1; s <= spec_.partitions; ++s) bounds_[s] = spec_.quadratic_bounds(s);
  }
}

bool ReachableTable::valid_state(int k, double theta) const {
  switch (spec_.kind) {
    case UncertaintyKind::box: return true;
    case UncertaintyKind::u1prime:
      if (k == 0) return std::abs(theta) <= kStateTol;
      return bounds_[k].contains(theta, kStateTol);
    case UncertaintyKind::u2: {
      if (theta < -kStateTol) return false;
      if (k == 0) return std::abs(theta) <= kStateTol;
      const int n = spec_.block_length();
      if (k % n == 0) return bounds_[k / n].contains(theta, kStateTol);
      return theta <= bounds_[k / n + 1].hi + kStateTol;
    }
  }
  return false;
}

ReachableReturns ReachableTable::operator()(int k, double theta) const {
  if (!valid_state(k, theta)) {
    if (k < 0 || k >= spec_.market.periods) throw ParameterError("reachable: period out of range");
    return {};
  }
  return forward(k, theta);
}

ReachableReturns ReachableTable::forward(int k, double theta) const {
  ReachableReturns out;
  const int K = spec_.market.periods;
  if (k < 0 || k >= K) throw ParameterError("reachable: period out of range");
  switch (spec_.kind) {
    case UncertaintyKind::box:
      out.intervals.push_back({spec_.box_lower, spec_.box_upper});
      break;
    case UncertaintyKind::u1prime: {
      const Interval& next = bounds_[k + 1];
      if (next.lo > next.hi) break;
      // Off-set states move as if from the nearest admissible one.
      const double th = k == 0 ? 0.0 : std::clamp(theta, bounds_[k].lo, bounds_[k].hi);
      const double lo = std::expm1(next.lo - th);
      const double hi = std::expm1(next.hi - th);
      if (lo <= hi) out.intervals.push_back({lo, hi});
      break;
    }
    case UncertaintyKind::u2: {
      const int n = spec_.block_length();
      const Interval& next = bounds_[k / n + 1];
      const double hi2 = std::max(0.0, next.hi - theta);
      const double lo2 = ((k + 1) % n == 0) ? std::max(0.0, next.lo - theta) : 0.0;
      if (lo2 > hi2) break;
      const double hi = std::sqrt(hi2);
      const double lo = std::sqrt(lo2);
      if (lo == 0.0) {
        out.intervals.push_back({-hi, hi});
      } else {
        out.intervals.push_back({-hi, -lo});
        out.intervals.push_back({lo, hi});
      }
      break;
    }
  }
  return out;
}

ReachableReturns reachable(const UncertaintySpec& spec, int k, double theta) {
  return ReachableTable(spec)(k, theta);
}

double theta_update(const UncertaintySpec& spec, double theta, double r) {
  switch (spec.kind) {
    case UncertaintyKind::box: return theta;
    case UncertaintyKind::u1prime: return theta + std::log1p(r);
    case UncertaintyKind::u2: return theta + r * r;
  }
  return theta;
}

bool contains(const UncertaintySpec& spec, const ReturnPath& path) {
  const int K = spec.market.periods;
  if (static_cast<int>(path.size()) != K) return false;
  switch (spec.kind) {
    case UncertaintyKind::box:
      return std::all_of(path.returns.begin(), path.returns.end(), [&](double r) {
        return r >= spec.box_lower && r <= spec.box_upper;
      });
    case UncertaintyKind::u1prime: {
      // For every date k, the cumulative log return must sit inside the band of
      // k itself and of every later date.
      const double sigma = spec.market.sigma;
      double theta = 0.0;
      for (int k = 1; k <= K; ++k) {
        theta += std::log1p(path[k - 1]);
        for (int j = k; j <= K; ++j) {
          const double t = spec.market.time(j);
          if (std::abs(theta - spec.market.mu * t) > spec.gamma * sigma * std::sqrt(t) * (1 + 1e-12))
            return false;
        }
      }
      return true;
    }
    case UncertaintyKind::u2: {
      const int n = spec.block_length();
      double q = 0.0;
      for (int k = 1; k <= K; ++k) {
        q += path[k - 1] * path[k - 1];
        if (k % n == 0 && !spec.quadratic_bounds(k / n).contains(q, kStateTol)) return false;
      }
      return true;
    }
  }
  return false;
}

double critical_gamma(UncertaintyKind kind, const MarketParams& market, int partitions,
                      const ReturnPath& path) {
  const int K = market.periods;
  if (static_cast<int>(path.size()) != K)
    throw ParameterError("critical_gamma: path length differs from periods");
  double worst = 0.0;
  if (kind == UncertaintyKind::u1prime) {
    // |theta - mu t| / (sigma sqrt t) over t in [t_k, T] peaks at an endpoint, so
    // each prefix only needs its own date and maturity.
    const double tT = market.time(K);
    double theta = 0.0;
    for (int k = 1; k <= K; ++k) {
      theta += std::log1p(path[k - 1]);
      const double t = market.time(k);
      worst = std::max(worst, std::abs(theta - market.mu * t) / (market.sigma * std::sqrt(t)));
      worst = std::max(worst, std::abs(theta - market.mu * tT) / (market.sigma * std::sqrt(tT)));
    }
  } else if (kind == UncertaintyKind::u2) {
    if (partitions < 1 || K % partitions != 0)
      throw ParameterError("critical_gamma: partitions must divide the number of periods");
    const int n = K / partitions;
    double q = 0.0;
    for (int k = 1; k <= K; ++k) {
      q += path[k - 1] * path[k - 1];
      if (k % n == 0) {
        const int s = k / n;
        const double centre = market.sigma * market.sigma * s * market.maturity / partitions;
        worst = std::max(worst, std::abs(q - centre) / std::sqrt(static_cast<double>(s) * n));
      }
    }
  } else {
    throw ParameterError("critical_gamma: box sets have no budget");
  }
  return worst;
}

CalibrationResult calibrate_gamma(UncertaintyKind kind, const MarketParams& market,
                                  int partitions, const PathSet& train, double coverage) {
  market.validate();
  if (train.empty()) throw ParameterError("calibrate_gamma: empty train set");
  if (!(coverage >= 0.0 && coverage <= 1.0))
    throw ParameterError("calibrate_gamma: coverage must lie in [0, 1]");
  if (kind == UncertaintyKind::box) throw ParameterError("calibrate_gamma: box sets have no budget");

  const std::size_t n = train.size();
  std::vector<double> crit(n);
  for (std::size_t i = 0; i < n; ++i) crit[i] = critical_gamma(kind, market, partitions, train.paths[i]);
  std::sort(crit.begin(), crit.end());

  CalibrationResult res;
  res.total = n;
  res.required = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(n) - 1e-9));
  auto covered_at = [&](double g) {
    return static_cast<std::size_t>(std::upper_bound(crit.begin(), crit.end(), g) - crit.begin());
  };

  double lo = kind == UncertaintyKind::u1prime ? u1prime_min_gamma(market) : 0.0;
  double hi = kGammaMax;
  if (covered_at(hi) < res.required)
    throw CalibrationError("calibrate_gamma: coverage not reachable with gamma <= 100");
  double gamma = lo;
  if (covered_at(lo) < res.required) {
    while (hi - lo > 1e-6 * hi) {
      const double mid = 0.5 * (lo + hi);
      (covered_at(mid) >= res.required ? hi : lo) = mid;
    }
    gamma = hi;
  }

  auto make = [&](double g) {
    return kind == UncertaintyKind::u2 ? UncertaintySpec::u2(market, g, partitions)
                                       : UncertaintySpec::u1prime(market, g);
  };
  if (kind == UncertaintyKind::u2 && !(gamma < u2_max_gamma(market)))
    throw CalibrationError("calibrate_gamma: calibrated gamma " + std::to_string(gamma) +
                           " violates the support limit " + std::to_string(u2_max_gamma(market)));

  // Confirm against the set definition; nudge up if rounding disagrees.
  for (int attempt = 0;; ++attempt) {
    const UncertaintySpec spec = make(gamma);
    const ReachableTable table(spec);
    std::size_t covered = 0;
    for (const auto& p : train.paths) {
      double theta = 0.0;
      bool ok = true;
      for (int k = 0; k < market.periods && ok; ++k) {
        theta = theta_update(spec, theta, p[k]);
        ok = table.valid_state(k + 1, theta);
      }
      covered += ok;
    }
    if (covered >= res.required) {
      res.gamma = gamma;
      res.covered = covered;
      return res;
    }
    if (attempt == 20) throw CalibrationError("calibrate_gamma: verification failed");
    gamma *= 1.0 + 1e-6;
  }
}

bool no_arbitrage_predicate(const UncertaintySpec& spec, std::span<const double> prefix) {
  const int K = spec.market.periods;
  if (static_cast<int>(prefix.size()) > K)
    throw ParameterError("no_arbitrage_predicate: prefix longer than horizon");
  switch (spec.kind) {
    case UncertaintyKind::box: return spec.box_lower <= 0.0 && spec.box_upper >= 0.0;
    case UncertaintyKind::u2: return true;
    case UncertaintyKind::u1prime: {
      double theta = 0.0;
      for (int k = 1; k <= K; ++k) {
        if (k <= static_cast<int>(prefix.size())) theta += std::log1p(prefix[k - 1]);
        const double t = spec.market.time(k);
        if (std::abs(theta - spec.market.mu * t) >
            spec.gamma * spec.market.sigma * std::sqrt(t) * (1 + 1e-12))
          return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace erp
