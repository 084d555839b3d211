#include "erp/inner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "erp/errors.hpp"

namespace erp {

namespace {

double envelope_at(std::span<const Line> lines, double zeta) {
  double v = -std::numeric_limits<double>::infinity();
  for (const Line& l : lines) v = std::max(v, l(zeta));
  return v;
}

}  // namespace

MinimaxResult inner_minimax(std::span<const Line> lines) {
  if (lines.empty()) throw ParameterError("inner_minimax: no candidates");
  bool neg = false, pos = false, flat = false;
  for (const Line& l : lines) {
    neg |= l.slope < 0.0;
    pos |= l.slope > 0.0;
    flat |= l.slope == 0.0;
  }
  if (!flat && !(neg && pos))
    throw UnboundedError("inner_minimax: all candidate slopes share one sign");

  std::vector<Line> sorted(lines.begin(), lines.end());
  std::sort(sorted.begin(), sorted.end(), [](const Line& x, const Line& y) {
    return x.slope < y.slope || (x.slope == y.slope && x.intercept < y.intercept);
  });
  // Keep the highest intercept per slope. Slopes closer than the tolerance
  // are merged: their crossings are rounding noise.
  double top = 0.0;
  for (const Line& l : sorted) top = std::max(top, std::abs(l.slope));
  const double slope_tol = 1e-12 * std::max(1.0, top);
  std::vector<Line> uniq;
  uniq.reserve(sorted.size());
  for (const Line& l : sorted) {
    if (!uniq.empty() && l.slope - uniq.back().slope <= slope_tol) {
      Line& b = uniq.back();
      // Never merge across zero so the sign test below stays exact.
      if ((b.slope < 0.0) == (l.slope < 0.0) && (b.slope > 0.0) == (l.slope > 0.0)) {
        if (l.intercept >= b.intercept) b = l;
        continue;
      }
    }
    uniq.push_back(l);
  }
  // Upper envelope, slopes increasing from left to right.
  std::vector<Line> hull;
  hull.reserve(uniq.size());
  for (const Line& l3 : uniq) {
    while (hull.size() >= 2) {
      const Line& l1 = hull[hull.size() - 2];
      const Line& l2 = hull.back();
      if ((l1.intercept - l3.intercept) * (l2.slope - l1.slope) <=
          (l1.intercept - l2.intercept) * (l3.slope - l1.slope))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(l3);
  }
  auto cross = [&](std::size_t i) {  // breakpoint between hull[i-1] and hull[i]
    return (hull[i - 1].intercept - hull[i].intercept) / (hull[i].slope - hull[i - 1].slope);
  };

  std::size_t i = 0;
  while (i < hull.size() && hull[i].slope < 0.0) ++i;
  double zeta = 0.0;
  if (i == hull.size()) {
    throw UnboundedError("inner_minimax: envelope decreasing without bound");
  } else if (hull[i].slope == 0.0) {
    const double left = i == 0 ? -std::numeric_limits<double>::infinity() : cross(i);
    const double right = i + 1 == hull.size() ? std::numeric_limits<double>::infinity() : cross(i + 1);
    zeta = std::clamp(0.0, left, right);
  } else {
    if (i == 0) throw UnboundedError("inner_minimax: envelope increasing everywhere");
    zeta = cross(i);
  }
  return {envelope_at(lines, zeta), zeta};
}

namespace {

struct Scenario {
  std::span<const double> a, r, w;
  const RiskMapping* mapping;
  mutable std::vector<double> buf;

  double operator()(double zeta) const {
    buf.resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) buf[j] = a[j] - zeta * r[j];
    return mapping->apply(buf, w);
  }
};

// Convex piecewise-linear objective with all kinks in `bps`.
MinimaxResult minimize_piecewise(const Scenario& f, std::vector<double> bps, double slope_tol) {
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  if (bps.empty()) bps.push_back(0.0);
  const double span = std::max(1.0, bps.back() - bps.front());
  const double right = f(bps.back() + span) - f(bps.back());
  const double left = f(bps.front()) - f(bps.front() - span);
  if (right < -slope_tol * span || left > slope_tol * span)
    throw UnboundedError("minimize_position: risk decreases without bound in the position");

  std::size_t lo = 0, hi = bps.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (f(bps[mid + 1]) >= f(bps[mid])) hi = mid;
    else lo = mid + 1;
  }
  return {f(bps[lo]), bps[lo]};
}

}  // namespace

MinimaxResult minimize_position(const RiskMapping& mapping, std::span<const double> values,
                                std::span<const double> returns, std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n == 0 || returns.size() != n) throw ParameterError("minimize_position: size mismatch");
  if (mapping.kind == RiskKind::worst_case) {
    std::vector<Line> lines(n);
    for (std::size_t j = 0; j < n; ++j) lines[j] = {-returns[j], values[j]};
    return inner_minimax(lines);
  }
  if (weights.size() != n) throw ParameterError("minimize_position: weights required");

  Scenario f{values, returns, weights, &mapping, {}};
  double amax = 0.0, rmax = 0.0, rbar = 0.0, abar = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    amax = std::max(amax, std::abs(values[j]));
    rmax = std::max(rmax, std::abs(returns[j]));
    rbar += weights[j] * returns[j];
    abar += weights[j] * values[j];
  }
  const double slope_tol = 1e-12 * (1.0 + amax) + 1e-14 * rmax;

  std::vector<double> bps;
  switch (mapping.kind) {
    case RiskKind::expectation:
      break;
    case RiskKind::cvar:
    case RiskKind::mean_cvar:
      bps.reserve(n * (n - 1) / 2);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (returns[i] != returns[j]) bps.push_back((values[i] - values[j]) / (returns[i] - returns[j]));
      break;
    case RiskKind::mean_semidev:
      if (mapping.order == 1.0) {
        for (std::size_t j = 0; j < n; ++j)
          if (returns[j] != rbar) bps.push_back((values[j] - abar) / (returns[j] - rbar));
        break;
      } else {
        // Smooth and convex: check both asymptotic slopes, bracket, then Brent.
        double up = 0.0, down = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double d = returns[j] - rbar;
          if (d > 0.0) up += weights[j] * std::pow(d, mapping.order);
          if (d < 0.0) down += weights[j] * std::pow(-d, mapping.order);
        }
        const double inv = 1.0 / mapping.order;
        const double right = -rbar + mapping.kappa * std::pow(down, inv);
        const double left = rbar + mapping.kappa * std::pow(up, inv);
        if (right <= 1e-14 || left <= 1e-14)
          throw UnboundedError("minimize_position: semideviation objective unbounded below");
        const double f0 = f(0.0);
        double b = (1.0 + amax) / std::max(rmax, 1e-12);
        for (int it = 0; it < 200 && (f(b) < f0 || f(-b) < f0); ++it) b *= 2.0;
        std::uintmax_t iters = 500;
        const auto res = boost::math::tools::brent_find_minima(
            [&](double z) { return f(z); }, -b, b, std::numeric_limits<double>::digits / 2, iters);
        return {res.second, res.first};
      }
    case RiskKind::worst_case:
      break;
  }
  return minimize_piecewise(f, std::move(bps), slope_tol);
}

}  // namespace erp
