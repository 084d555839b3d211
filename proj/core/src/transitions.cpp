#include "transitions.hpp"

#include <algorithm>
#include <cmath>

namespace erp::detail {

CandidateBuilder::CandidateBuilder(const TransitionModel& model, const StateLattice& lattice,
                                   const Payoff& aux_rule, bool include_outside, bool extend)
    : model_(model), lat_(lattice), aux_(aux_rule), outside_(include_outside), extend_(extend) {
  if (model_.is_robust()) table_.emplace(*model_.spec);
}

bool CandidateBuilder::build(int k, double S, double theta, double Y, Candidates& s) const {
  s.r.clear();
  s.w.clear();
  s.stencil.clear();
  s.next_price.clear();
  s.next_theta.clear();
  s.next_aux.clear();
  if (!model_.is_robust()) {
    s.r = model_.returns;
    s.w = model_.weights;
  } else {
    const ReachableReturns R = extend_ ? table_->forward(k, theta) : (*table_)(k, theta);
    if (R.empty()) return false;
    const auto& P = lat_.prices();
    for (const Interval& iv : R.intervals) {
      const double plo = S * (1.0 + iv.lo), phi = S * (1.0 + iv.hi);
      auto first = std::lower_bound(P.begin(), P.end(), plo);
      auto last = std::upper_bound(P.begin(), P.end(), phi);
      s.r.push_back(iv.lo);
      for (auto it = first; it != last; ++it) s.r.push_back(*it / S - 1.0);
      s.r.push_back(iv.hi);
      if (outside_) {
        if (first != P.begin()) s.r.push_back(*(first - 1) / S - 1.0);
        if (last != P.end()) s.r.push_back(*last / S - 1.0);
      }
    }
    std::sort(s.r.begin(), s.r.end());
    s.r.erase(std::unique(s.r.begin(), s.r.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-14; }),
              s.r.end());
    for (double& r : s.r)
      if (std::abs(r) <= 1e-15) r = 0.0;
  }
  const std::size_t n = s.r.size();
  s.stencil.resize(n);
  s.next_price.resize(n);
  s.next_theta.resize(n);
  s.next_aux.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = s.r[j];
    s.next_price[j] = S * (1.0 + r);
    s.next_theta[j] = model_.is_robust() ? theta_update(*model_.spec, theta, r) : 0.0;
    s.next_aux[j] = aux_.next_aux(Y, S, r);
    s.stencil[j] = lat_.stencil(s.next_price[j], s.next_theta[j], s.next_aux[j]);
  }
  return true;
}

}  // namespace erp::detail
