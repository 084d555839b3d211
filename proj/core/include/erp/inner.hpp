#pragma once

#include <span>

#include "erp/risk.hpp"

namespace erp {

/// intercept + slope * zeta
struct Line {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double zeta) const { return intercept + slope * zeta; }
};

struct MinimaxResult {
  double value = 0.0;
  double zeta = 0.0;
};

/// min over zeta of max_j (a_j + b_j zeta), solved exactly on the upper
/// envelope. When the minimum is attained on a flat stretch the position
/// closest to zero is returned. Throws UnboundedError when every slope has the
/// same strict sign.
MinimaxResult inner_minimax(std::span<const Line> lines);

/// min over zeta of rho(a_j - zeta r_j) for a weighted scenario set. The
/// worst-case mapping defers to inner_minimax; CVaR-type mappings search the
/// sorted scenario crossings; a smooth semideviation uses Brent's method.
MinimaxResult minimize_position(const RiskMapping& mapping, std::span<const double> values,
                                std::span<const double> returns, std::span<const double> weights);

}  // namespace erp
