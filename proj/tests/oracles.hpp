#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "erp/inner.hpp"

namespace oracle {

struct ScanResult {
  double value = 0.0;
  double zeta = 0.0;
};

/// Grid scan of a convex function on [lo, hi], then repeated zooms around the
/// best point. Brute force: no use of the objective's structure.
inline ScanResult scan_minimum(const std::function<double(double)>& f, double lo, double hi, int points = 10000,
                               int zooms = 6) {
  ScanResult best{std::numeric_limits<double>::infinity(), lo};
  for (int z = 0; z <= zooms; ++z) {
    const double step = (hi - lo) / points;
    for (int i = 0; i <= points; ++i) {
      const double x = lo + step * i;
      const double v = f(x);
      if (v < best.value) best = {v, x};
    }
    lo = best.zeta - 2 * step;
    hi = best.zeta + 2 * step;
  }
  return best;
}

inline double envelope(const std::vector<erp::Line>& lines, double z) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& l : lines) v = std::max(v, l(z));
  return v;
}

/// Random candidate set with slopes of both signs.
inline std::vector<erp::Line> random_lines(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> slope(-0.3, 0.3), icpt(-50.0, 50.0);
  std::vector<erp::Line> lines(n);
  for (auto& l : lines) l = {slope(rng), icpt(rng)};
  lines[0].slope = -std::abs(lines[0].slope) - 0.01;
  lines[1].slope = std::abs(lines[1].slope) + 0.01;
  return lines;
}

/// Range holding every pairwise crossing, padded.
inline std::pair<double, double> crossing_range(const std::vector<erp::Line>& lines) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j)
      if (lines[i].slope != lines[j].slope) {
        const double x = (lines[j].intercept - lines[i].intercept) / (lines[i].slope - lines[j].slope);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  return {lo - 1.0, hi + 1.0};
}

}  // namespace oracle
