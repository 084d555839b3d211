#include "erp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "erp/errors.hpp"

namespace erp {

DiscreteOutcome DiscreteOutcome::uniform(std::vector<double> values) {
  DiscreteOutcome o;
  o.weights.assign(values.size(), values.empty() ? 0.0 : 1.0 / static_cast<double>(values.size()));
  o.values = std::move(values);
  return o;
}

void DiscreteOutcome::validate(bool need_weights) const {
  if (values.empty()) throw ParameterError("outcome: no values");
  if (!weighted()) {
    if (need_weights) throw ParameterError("outcome: weights required for this risk mapping");
    return;
  }
  if (weights.size() != values.size()) throw ParameterError("outcome: weights/values size mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("outcome: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(weights.size()))
    throw ParameterError("outcome: weights do not sum to 1");
}

RiskMapping RiskMapping::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) throw ParameterError("risk: empty mapping");
  auto num = [&](std::size_t i) {
    if (i >= parts.size()) throw ParameterError("risk: missing parameter in '" + text + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(parts[i], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != parts[i].size()) throw ParameterError("risk: bad number '" + parts[i] + "'");
    return v;
  };
  auto arity = [&](std::size_t n) {
    if (parts.size() != n + 1) throw ParameterError("risk: wrong parameter count in '" + text + "'");
  };
  RiskMapping m;
  const std::string& name = parts[0];
  if (name == "worst_case") {
    arity(0);
  } else if (name == "expectation") {
    arity(0);
    m = expectation();
  } else if (name == "cvar") {
    arity(1);
    m = cvar(num(1));
  } else if (name == "mean_semidev") {
    arity(2);
    m = mean_semidev(num(1), num(2));
  } else if (name == "mean_cvar") {
    arity(2);
    m = mean_cvar(num(1), num(2));
  } else {
    throw ParameterError("risk: unknown mapping '" + name + "'");
  }
  m.validate();
  return m;
}

std::string RiskMapping::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case RiskKind::worst_case: os << "worst_case"; break;
    case RiskKind::expectation: os << "expectation"; break;
    case RiskKind::cvar: os << "cvar:" << beta; break;
    case RiskKind::mean_semidev: os << "mean_semidev:" << kappa << ':' << order; break;
    case RiskKind::mean_cvar: os << "mean_cvar:" << kappa << ':' << beta; break;
  }
  return os.str();
}

void RiskMapping::validate() const {
  if ((kind == RiskKind::cvar || kind == RiskKind::mean_cvar) && !(beta >= 0.0 && beta < 1.0))
    throw ParameterError("risk: beta must lie in [0, 1)");
  if ((kind == RiskKind::mean_semidev || kind == RiskKind::mean_cvar) &&
      !(kappa >= 0.0 && std::isfinite(kappa)))
    throw ParameterError("risk: kappa must be finite and >= 0");
  if (kind == RiskKind::mean_semidev && !(order >= 1.0 && std::isfinite(order)))
    throw ParameterError("risk: semideviation order must be >= 1");
}

bool RiskMapping::is_coherent() const {
  switch (kind) {
    case RiskKind::worst_case:
    case RiskKind::expectation:
    case RiskKind::cvar: return true;
    case RiskKind::mean_semidev: return kappa <= 1.0;
    case RiskKind::mean_cvar: return kappa == 0.0;
  }
  return false;
}

double cvar(std::span<const double> values, std::span<const double> weights, double beta) {
  const std::size_t n = values.size();
  if (n == 0) throw ParameterError("cvar: no values");
  if (weights.size() != n) throw ParameterError("cvar: weights required");
  const double tail = 1.0 - beta;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  double mass = 0.0;
  double acc = 0.0;
  for (std::size_t i : idx) {
    const double take = std::min(weights[i], tail - mass);
    if (take <= 0.0) break;
    acc += take * values[i];
    mass += take;
  }
  // Rounding can leave a sliver of tail mass unassigned; the remaining mass
  // sits at the smallest value reached.
  if (mass < tail) acc += (tail - mass) * values[idx.back()];
  return acc / tail;
}

namespace {

double expectation_of(std::span<const double> v, std::span<const double> w) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e += w[i] * v[i];
  return e;
}

double upper_semidev(std::span<const double> v, std::span<const double> w, double mean, double order) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - mean;
    if (d > 0.0) acc += w[i] * (order == 1.0 ? d : std::pow(d, order));
  }
  return order == 1.0 ? acc : std::pow(acc, 1.0 / order);
}

}  // namespace

double RiskMapping::apply(std::span<const double> values, std::span<const double> weights) const {
  if (values.empty()) throw ParameterError("risk: no values");
  if (kind == RiskKind::worst_case) return *std::max_element(values.begin(), values.end());
  if (weights.size() != values.size()) throw ParameterError("risk: weights required for " + to_string());
  switch (kind) {
    case RiskKind::expectation: return expectation_of(values, weights);
    case RiskKind::cvar: return erp::cvar(values, weights, beta);
    case RiskKind::mean_semidev: {
      const double e = expectation_of(values, weights);
      return e + kappa * upper_semidev(values, weights, e, order);
    }
    case RiskKind::mean_cvar:
      return expectation_of(values, weights) + kappa * erp::cvar(values, weights, beta);
    case RiskKind::worst_case: break;
  }
  return 0.0;
}

double RiskMapping::apply(const DiscreteOutcome& outcome) const {
  outcome.validate(needs_weights());
  return apply(outcome.values, outcome.weights);
}

std::string to_string(Axiom axiom) {
  switch (axiom) {
    case Axiom::monotonicity: return "monotonicity";
    case Axiom::translation: return "translation";
    case Axiom::convexity: return "convexity";
    case Axiom::homogeneity: return "homogeneity";
  }
  return "?";
}

std::size_t AxiomReport::count(Axiom axiom) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [&](const AxiomViolation& v) { return v.axiom == axiom; }));
}

std::vector<Axiom> expected_axioms(const RiskMapping& m) {
  std::vector<Axiom> out{Axiom::convexity};
  if (m.kind != RiskKind::mean_semidev || m.kappa <= 1.0) out.push_back(Axiom::monotonicity);
  if (m.translation_invariant()) out.push_back(Axiom::translation);
  out.push_back(Axiom::homogeneity);
  return out;
}

AxiomReport check_axioms(const RiskMapping& mapping, int trials, std::uint64_t seed,
                         const std::vector<Axiom>& axioms, std::size_t outcome_size, double tol) {
  mapping.validate();
  if (trials < 1) throw ParameterError("check_axioms: trials must be >= 1");
  if (outcome_size < 1) throw ParameterError("check_axioms: outcome_size must be >= 1");
  AxiomReport report;
  report.trials = trials;
  report.checked = axioms;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> x(outcome_size), y(outcome_size), z(outcome_size), w(outcome_size);
  for (int t = 0; t < trials; ++t) {
    double total = 0.0;
    for (std::size_t i = 0; i < outcome_size; ++i) {
      x[i] = normal(rng);
      y[i] = normal(rng);
      w[i] = unit(rng) + 1e-3;
      total += w[i];
    }
    for (double& wi : w) wi /= total;
    // Ties stress the quantile handling of CVaR.
    if (outcome_size > 2 && t % 4 == 0) x[1] = x[0];
    const double rx = mapping.apply(x, w);
    const double scale = 1.0 + std::abs(rx);

    auto record = [&](Axiom a, double lhs, double rhs, double scalar, const std::vector<double>& other) {
      report.violations.push_back({a, t, lhs, rhs, x, other, w, scalar});
    };

    for (Axiom a : axioms) {
      switch (a) {
        case Axiom::monotonicity: {
          for (std::size_t i = 0; i < outcome_size; ++i) z[i] = x[i] + std::abs(y[i]);
          const double rz = mapping.apply(z, w);
          if (rx > rz + tol * (1.0 + std::abs(rz))) record(a, rx, rz, 0.0, z);
          break;
        }
        case Axiom::translation: {
          const double c = normal(rng);
          for (std::size_t i = 0; i < outcome_size; ++i) z[i] = x[i] + c;
          const double rz = mapping.apply(z, w);
          if (std::abs(rz - (rx + c)) > tol * (scale + std::abs(c))) record(a, rz, rx + c, c, z);
          break;
        }
        case Axiom::convexity: {
          const double lam = unit(rng);
          for (std::size_t i = 0; i < outcome_size; ++i) z[i] = lam * x[i] + (1.0 - lam) * y[i];
          const double lhs = mapping.apply(z, w);
          const double rhs = lam * rx + (1.0 - lam) * mapping.apply(y, w);
          if (lhs > rhs + tol * (1.0 + std::abs(rhs))) record(a, lhs, rhs, lam, y);
          break;
        }
        case Axiom::homogeneity: {
          const double lam = 0.1 + 5.0 * unit(rng);
          for (std::size_t i = 0; i < outcome_size; ++i) z[i] = lam * x[i];
          const double rz = mapping.apply(z, w);
          if (std::abs(rz - lam * rx) > tol * lam * scale) record(a, rz, lam * rx, lam, z);
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace erp
