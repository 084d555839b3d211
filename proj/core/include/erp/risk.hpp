#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace erp {

/// Finite next-step cost sample. Weights are optional: the worst-case mapping
/// ignores them, every other mapping requires them.
struct DiscreteOutcome {
  std::vector<double> values;
  std::vector<double> weights;

  static DiscreteOutcome uniform(std::vector<double> values);
  bool weighted() const { return !weights.empty(); }
  void validate(bool need_weights) const;
};

enum class RiskKind { worst_case, expectation, cvar, mean_semidev, mean_cvar };

struct RiskMapping {
  RiskKind kind = RiskKind::worst_case;
  double beta = 0.0;   // cvar, mean_cvar
  double kappa = 0.0;  // mean_semidev, mean_cvar
  double order = 1.0;  // mean_semidev

  static RiskMapping worst_case() { return {}; }
  static RiskMapping expectation() { return {RiskKind::expectation}; }
  static RiskMapping cvar(double beta) { return {RiskKind::cvar, beta}; }
  static RiskMapping mean_semidev(double kappa, double order) {
    return {RiskKind::mean_semidev, 0.0, kappa, order};
  }
  static RiskMapping mean_cvar(double kappa, double beta) {
    return {RiskKind::mean_cvar, beta, kappa};
  }

  /// Accepts worst_case | expectation | cvar:B | mean_semidev:K:R | mean_cvar:K:B.
  static RiskMapping parse(const std::string& text);
  std::string to_string() const;

  void validate() const;
  bool needs_weights() const { return kind != RiskKind::worst_case; }
  /// rho(X + c) = rho(X) + c. Fails only for mean_cvar with kappa > 0.
  bool translation_invariant() const { return kind != RiskKind::mean_cvar || kappa == 0.0; }
  /// Monotone, translation invariant, convex and positively homogeneous.
  bool is_coherent() const;

  double apply(const DiscreteOutcome& outcome) const;
  double apply(std::span<const double> values, std::span<const double> weights) const;

  bool operator==(const RiskMapping&) const = default;
};

/// Exact CVaR of a discrete distribution: mean of the upper (1 - beta) tail.
double cvar(std::span<const double> values, std::span<const double> weights, double beta);

enum class Axiom { monotonicity, translation, convexity, homogeneity };

std::string to_string(Axiom axiom);

struct AxiomViolation {
  Axiom axiom;
  int trial = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> weights;
  double scalar = 0.0;  // shift, mixing weight or scale used by the trial
};

struct AxiomReport {
  int trials = 0;
  std::vector<Axiom> checked;
  std::vector<AxiomViolation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(Axiom axiom) const;
};

/// Axioms a mapping is expected to satisfy.
std::vector<Axiom> expected_axioms(const RiskMapping& mapping);

/// Randomized axiom checks on outcomes of `outcome_size` atoms. Each trial
/// draws fresh X, Y and weights; any failure is recorded with its witness.
AxiomReport check_axioms(const RiskMapping& mapping, int trials, std::uint64_t seed,
                         const std::vector<Axiom>& axioms, std::size_t outcome_size = 8,
                         double tol = 1e-9);
inline AxiomReport check_axioms(const RiskMapping& mapping, int trials, std::uint64_t seed) {
  return check_axioms(mapping, trials, seed, expected_axioms(mapping));
}

}  // namespace erp
