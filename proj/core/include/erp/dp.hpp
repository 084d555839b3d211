#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "erp/lattice.hpp"
#include "erp/market.hpp"
#include "erp/risk.hpp"
#include "erp/uncertainty.hpp"

namespace erp {

enum class Side { writer, buyer };
enum class AmericanMode { commit, no_commit };

std::string to_string(Side side);
std::string to_string(AmericanMode mode);
AmericanMode parse_american_mode(const std::string& text);

/// One-step dynamics seen by the solver: either a robust uncertainty set with
/// the worst-case mapping, or a fixed discrete return distribution with any
/// risk mapping.
struct TransitionModel {
  RiskMapping mapping;
  MarketParams market;
  std::optional<UncertaintySpec> spec;
  std::vector<double> returns;  // probabilistic atoms
  std::vector<double> weights;

  static TransitionModel robust(const UncertaintySpec& spec);
  /// Per-period lognormal return quantized to `atoms` equal-probability
  /// points at the midpoint quantiles.
  static TransitionModel probabilistic(const RiskMapping& mapping, const MarketParams& market,
                                       int atoms = 51);

  bool is_robust() const { return spec.has_value(); }
};

struct SolverOptions {
  /// Also try the first price node beyond each end of a reachable interval.
  bool include_outside_nodes = true;
  /// Give lattice nodes outside the projected set the moves of the nearest
  /// admissible state instead of a frozen price.
  bool extend_outside_states = true;
  /// Solve the post-exercise pure-trading slice and check it is zero when the
  /// mapping is coherent. When off, coherent runs take it as zero.
  bool verify_post_exercise = true;
  int threads = 0;
};

/// values[k][node] for k = 0..K; `root` is the value at (S0, theta = 0, Y0).
struct ValueSurface {
  Side side = Side::writer;
  int slice = 0;  // 0: not exercised yet, 1: after exercise
  std::vector<std::vector<double>> values;
  double root = 0.0;
};

/// zeta[k][node]: money held in the risky asset over (t_k, t_{k+1}], k < K.
struct HedgePolicy {
  std::vector<std::vector<double>> zeta;
  double root = 0.0;
};

/// exercise[k][node] in {0, 1}; row K is all ones.
struct ExercisePolicy {
  std::vector<std::vector<std::uint8_t>> exercise;
  bool root = false;
};

struct EuropeanSolution {
  ValueSurface value;
  HedgePolicy hedge;
};

struct EuropeanPair {
  EuropeanSolution writer;
  EuropeanSolution buyer;
};

struct AmericanSolution {
  Side side = Side::buyer;
  AmericanMode mode = AmericanMode::commit;
  ValueSurface value;          // slice 0
  ValueSurface post_exercise;  // slice 1, pure trading
  /// Hedged value of not exercising at the node (the inf over positions).
  std::vector<std::vector<double>> continuation;
  double root_continuation = 0.0;
  HedgePolicy hedge;
  /// Buyer's exercise region; the committed writer follows the same one.
  ExercisePolicy exercise;
};

struct AmericanSet {
  AmericanSolution buyer;
  AmericanSolution writer_commit;
  AmericanSolution writer_no_commit;
};

EuropeanSolution solve_european(Side side, const TransitionModel& model, const Payoff& payoff,
                                const StateLattice& lattice, const SolverOptions& options = {});

/// Writer and buyer problems for several payoffs in one backward pass. All
/// payoffs must share the aux rule of payoffs[0] when the lattice has an aux axis.
std::vector<EuropeanPair> solve_european_batch(const TransitionModel& model,
                                               const std::vector<Payoff>& payoffs,
                                               const StateLattice& lattice,
                                               const SolverOptions& options = {});

AmericanSolution solve_american(Side side, const TransitionModel& model, const Payoff& payoff,
                                const StateLattice& lattice, AmericanMode mode,
                                const SolverOptions& options = {});

/// Buyer, committed writer and uncommitted writer in one backward pass.
AmericanSet solve_american_all(const TransitionModel& model, const Payoff& payoff,
                               const StateLattice& lattice, const SolverOptions& options = {});

struct PriceInterval {
  double erp = 0.0;
  double fpi_lower = 0.0;
  double fpi_upper = 0.0;
};

/// From the writer's and buyer's hedged risks at zero premium.
PriceInterval erp_and_fpi(double writer_root, double buyer_root);

/// Root of a nonincreasing delta(p0) = rho_w(p0) - rho_b(p0) on [lo, hi].
double bisect_price(const std::function<double(double)>& delta, double lo, double hi,
                    double tol = 1e-8, int max_iter = 200);

/// Columns k,S,theta[,aux],value,zeta,exercise_flag; one row per node and period.
void write_surface_csv(std::ostream& os, const StateLattice& lattice, const ValueSurface& value,
                       const HedgePolicy& hedge, const ExercisePolicy* exercise = nullptr);

}  // namespace erp
