#include "erp/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "erp/errors.hpp"

namespace erp {

std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 1) throw ParameterError("uniform_grid: n must be >= 1");
  if (n == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  g.back() = hi;
  return g;
}

namespace {

void append_log_run(std::vector<double>& g, double lo, double hi, int intervals) {
  const double step = std::log(hi / lo) / intervals;
  for (int i = 1; i < intervals; ++i) g.push_back(lo * std::exp(step * i));
  g.push_back(hi);
}

// Bracketing pair and upper weight along one axis, clamped to the hull.
struct Bracket {
  std::size_t i0 = 0, i1 = 0;
  double w1 = 0.0;
};

Bracket bracket(const std::vector<double>& g, double x) {
  if (g.size() == 1 || x <= g.front()) return {0, 0, 0.0};
  if (x >= g.back()) return {g.size() - 1, g.size() - 1, 0.0};
  const auto it = std::upper_bound(g.begin(), g.end(), x);
  const std::size_t i1 = static_cast<std::size_t>(it - g.begin());
  const std::size_t i0 = i1 - 1;
  return {i0, i1, (x - g[i0]) / (g[i1] - g[i0])};
}

}  // namespace

std::vector<double> anchored_log_grid(double lo, double hi, double anchor, int n) {
  if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("anchored_log_grid: need 0 < lo < hi");
  if (n < 2) throw ParameterError("anchored_log_grid: need at least 2 nodes");
  std::vector<double> g{lo};
  g.reserve(static_cast<std::size_t>(n));
  if (!(anchor > lo && anchor < hi) || n < 3) {
    append_log_run(g, lo, hi, n - 1);
    return g;
  }
  const double share = std::log(anchor / lo) / std::log(hi / lo);
  int left = static_cast<int>(std::lround(share * (n - 1)));
  left = std::clamp(left, 1, n - 2);
  append_log_run(g, lo, anchor, left);
  append_log_run(g, anchor, hi, n - 1 - left);
  return g;
}

StateLattice::StateLattice(std::vector<double> prices, ThetaMode mode, std::vector<double> thetas,
                           std::vector<double> aux, double s0)
    : prices_(std::move(prices)), mode_(mode), thetas_(std::move(thetas)), aux_(std::move(aux)), s0_(s0) {
  if (prices_.empty()) throw ParameterError("lattice: no price nodes");
  if (!(s0_ > 0.0)) throw ParameterError("lattice: s0 must be > 0");
  auto check_sorted = [](const std::vector<double>& g, const char* what) {
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) throw ParameterError(std::string("lattice: ") + what + " nodes not increasing");
  };
  check_sorted(prices_, "price");
  check_sorted(thetas_, "theta");
  check_sorted(aux_, "aux");
  if (prices_.front() <= 0.0) throw ParameterError("lattice: price nodes must be positive");
  if (mode_ == ThetaMode::axis && thetas_.empty()) throw ParameterError("lattice: theta axis has no nodes");
  if (mode_ != ThetaMode::axis) thetas_.clear();
}

double StateLattice::theta_at(std::size_t node) const {
  switch (mode_) {
    case ThetaMode::none: return 0.0;
    case ThetaMode::log_price: return std::log(price_at(node) / s0_);
    case ThetaMode::axis: return thetas_[(node / aux_count()) % theta_count()];
  }
  return 0.0;
}

StateLattice::Stencil StateLattice::stencil(double price, double theta, double aux) const {
  const Bracket bp = bracket(prices_, price);
  const Bracket bt = mode_ == ThetaMode::axis ? bracket(thetas_, theta) : Bracket{};
  const Bracket ba = aux_.empty() ? Bracket{} : bracket(aux_, aux);
  Stencil s;
  const std::size_t ps[2] = {bp.i0, bp.i1};
  const double pw[2] = {1.0 - bp.w1, bp.w1};
  const std::size_t ts[2] = {bt.i0, bt.i1};
  const double tw[2] = {1.0 - bt.w1, bt.w1};
  const std::size_t as[2] = {ba.i0, ba.i1};
  const double aw[2] = {1.0 - ba.w1, ba.w1};
  for (int i = 0; i < 2; ++i) {
    if (pw[i] == 0.0) continue;
    for (int j = 0; j < 2; ++j) {
      if (tw[j] == 0.0) continue;
      for (int l = 0; l < 2; ++l) {
        if (aw[l] == 0.0) continue;
        s.index[s.size] = index(ps[i], ts[j], as[l]);
        s.weight[s.size] = pw[i] * tw[j] * aw[l];
        ++s.size;
      }
    }
  }
  return s;
}

namespace {

struct TrainRanges {
  double price_lo, price_hi;
  double theta_hi = 0.0;
  double aux_lo, aux_hi;
  bool have_aux = false;
};

TrainRanges scan_train(const MarketParams& market, const PathSet& train, const Payoff& payoff) {
  TrainRanges r{market.s0, market.s0, 0.0, 0.0, 0.0, false};
  for (const auto& path : train.paths) {
    double s = market.s0, q = 0.0, y = payoff.aux_initial;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (payoff.has_aux()) {
        y = payoff.next_aux(y, s, path[k]);
        if (!r.have_aux) {
          r.aux_lo = r.aux_hi = y;
          r.have_aux = true;
        }
        r.aux_lo = std::min(r.aux_lo, y);
        r.aux_hi = std::max(r.aux_hi, y);
      }
      s *= 1.0 + path[k];
      q += path[k] * path[k];
      r.price_lo = std::min(r.price_lo, s);
      r.price_hi = std::max(r.price_hi, s);
      r.theta_hi = std::max(r.theta_hi, q);
    }
  }
  return r;
}

std::vector<double> price_axis(const LatticeOptions& o, double lo, double hi, double s0) {
  if (!o.explicit_prices.empty()) return o.explicit_prices;
  if (!(hi > lo)) {
    lo = s0 * 0.5;
    hi = s0 * 1.5;
  }
  return anchored_log_grid(lo, hi, s0, o.price_nodes);
}

std::vector<double> aux_axis(const LatticeOptions& o, const Payoff& payoff, const TrainRanges& r,
                             double fallback_lo, double fallback_hi) {
  if (!payoff.has_aux()) return {};
  double lo = r.have_aux ? r.aux_lo : fallback_lo;
  double hi = r.have_aux ? r.aux_hi : fallback_hi;
  if (!(hi > lo)) {
    lo -= 0.5 * std::max(1.0, std::abs(lo));
    hi = lo + std::max(1.0, std::abs(lo));
  }
  return uniform_grid(lo, hi, std::max(o.aux_nodes, 2));
}

}  // namespace

StateLattice StateLattice::build(const UncertaintySpec& spec, const PathSet& train, const Payoff& payoff,
                                 const LatticeOptions& options) {
  spec.validate();
  const MarketParams& m = spec.market;
  const TrainRanges r = scan_train(m, train, payoff);
  double lo = r.price_lo, hi = r.price_hi;
  if (spec.kind == UncertaintyKind::box) {
    lo = m.s0 * std::pow(1.0 + spec.box_lower, m.periods);
    hi = m.s0 * std::pow(1.0 + spec.box_upper, m.periods);
  }
  std::vector<double> prices = price_axis(options, lo, hi, m.s0);

  ThetaMode mode = ThetaMode::none;
  std::vector<double> thetas;
  if (spec.kind == UncertaintyKind::u1prime) {
    mode = ThetaMode::log_price;
  } else if (spec.kind == UncertaintyKind::u2) {
    mode = ThetaMode::axis;
    double top = r.theta_hi;
    if (!(top > 0.0)) top = spec.quadratic_bounds(spec.partitions).hi;
    thetas = uniform_grid(0.0, top, std::max(options.theta_nodes, 2));
  }
  std::vector<double> aux = aux_axis(options, payoff, r, prices.front(), prices.back());
  return StateLattice(std::move(prices), mode, std::move(thetas), std::move(aux), m.s0);
}

StateLattice StateLattice::build_plain(const MarketParams& market, const PathSet& train,
                                       const Payoff& payoff, const LatticeOptions& options) {
  market.validate();
  const TrainRanges r = scan_train(market, train, payoff);
  std::vector<double> prices = price_axis(options, r.price_lo, r.price_hi, market.s0);
  std::vector<double> aux = aux_axis(options, payoff, r, prices.front(), prices.back());
  return StateLattice(std::move(prices), ThetaMode::none, {}, std::move(aux), market.s0);
}

}  // namespace erp
