#pragma once

#include <optional>
#include <vector>

#include "erp/dp.hpp"
#include "erp/lattice.hpp"
#include "erp/uncertainty.hpp"

namespace erp::detail {

struct Candidates {
  std::vector<double> r;
  std::vector<double> w;  // empty for robust models
  std::vector<StateLattice::Stencil> stencil;
  std::vector<double> next_price, next_theta, next_aux;
};

/// Next-step scenario sets for lattice states. Robust models take every
/// return that lands on a price node inside a reachable interval, the exact
/// interval ends and (optionally) the first node beyond each end.
class CandidateBuilder {
 public:
  CandidateBuilder(const TransitionModel& model, const StateLattice& lattice, const Payoff& aux_rule,
                   bool include_outside, bool extend_states);

  /// False when no return is admissible from this state.
  bool build(int k, double S, double theta, double Y, Candidates& out) const;
  bool valid_root() const { return !table_ || table_->valid_state(0, 0.0); }

 private:
  const TransitionModel& model_;
  const StateLattice& lat_;
  const Payoff& aux_;
  bool outside_;
  bool extend_;
  std::optional<ReachableTable> table_;
};

}  // namespace erp::detail
