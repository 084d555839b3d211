#include "erp/epsilon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "erp/baselines.hpp"
#include "erp/dp.hpp"
#include "erp/errors.hpp"
#include "erp/inner.hpp"
#include "parallel.hpp"
#include "transitions.hpp"

namespace erp {

OnePeriodQuote epsilon_one_period(double s0, double l, double u, double strike) {
  if (!(u > l)) throw ParameterError("epsilon_one_period: need u > l");
  if (!(strike >= l && strike <= u)) throw ParameterError("epsilon_one_period: strike outside [l, u]");
  OnePeriodQuote q;
  q.xi = (u - strike) / (u - l);
  q.price = q.xi * (s0 - 0.5 * (strike + l));
  q.worst_abs_error = (u - strike) * (strike - l) / (2.0 * (u - l));
  return q;
}

SubgradientCertificate verify_subgradient(double s0, double l, double u, double strike, double xi,
                                          double price, double tol) {
  SubgradientCertificate c;
  // Each piece is linear in S1, so its max over the sub-range sits at an end.
  c.phi[0] = (u - strike) - xi * (u - s0) - price;
  c.phi[1] = -xi * (l - s0) - price;
  c.phi[2] = xi * (strike - s0) + price;
  c.phi[3] = xi * (strike - s0) + price;
  const double top = *std::max_element(c.phi.begin(), c.phi.end());
  const double scale = tol * (1.0 + std::abs(top));
  c.common_max = std::all_of(c.phi.begin(), c.phi.end(), [&](double p) { return p >= top - scale; });

  const std::array<std::array<double, 2>, 4> g = {{{s0 - u, -1.0},
                                                   {s0 - l, -1.0},
                                                   {strike - s0, 1.0},
                                                   {strike - s0, 1.0}}};
  // phi_3 and phi_4 share a gradient; listing phi_4 first makes the
  // certificate put its weight there.
  const std::array<int, 4> order = {0, 1, 3, 2};
  auto residual = [&](const std::array<double, 4>& lam) {
    double a = 0.0, b = 0.0, s = 0.0;
    for (int i = 0; i < 4; ++i) {
      a += lam[i] * g[i][0];
      b += lam[i] * g[i][1];
      s += lam[i];
    }
    return std::abs(a) + std::abs(b) + std::abs(s - 1.0);
  };
  auto accept = [&](const std::array<double, 4>& lam) {
    for (double x : lam)
      if (x < -tol) return false;
    return residual(lam) <= tol * (1.0 + std::abs(s0) + std::abs(u) + std::abs(l));
  };
  auto solve_subset = [&](const std::vector<int>& idx, std::array<double, 4>& lam) {
    lam.fill(0.0);
    if (idx.size() == 1) {
      lam[idx[0]] = 1.0;
      return accept(lam);
    }
    if (idx.size() == 2) {
      // lam_a = t, lam_b = 1 - t; each gradient component gives t.
      const auto& ga = g[idx[0]];
      const auto& gb = g[idx[1]];
      for (int comp = 0; comp < 2; ++comp) {
        const double den = ga[comp] - gb[comp];
        if (std::abs(den) < 1e-14) continue;
        const double t = -gb[comp] / den;
        lam[idx[0]] = t;
        lam[idx[1]] = 1.0 - t;
        if (accept(lam)) return true;
      }
      lam.fill(0.0);
      return false;
    }
    // Three unknowns, three equations (two gradient components, sum to one).
    double m[3][4];
    for (int e = 0; e < 3; ++e) {
      for (int j = 0; j < 3; ++j) m[e][j] = e < 2 ? g[idx[j]][e] : 1.0;
      m[e][3] = e < 2 ? 0.0 : 1.0;
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      if (std::abs(m[piv][col]) < 1e-14) return false;
      std::swap(m[piv], m[col]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = m[r][col] / m[col][col];
        for (int j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
      }
    }
    for (int j = 0; j < 3; ++j) lam[idx[j]] = m[j][3] / m[j][j];
    return accept(lam);
  };

  std::vector<int> active;
  for (int i : order)
    if (c.phi[i] >= top - scale) active.push_back(i);
  const int n = static_cast<int>(active.size());
  for (int size = 1; size <= std::min(3, n) && !c.zero_in_hull; ++size) {
    for (int mask = 0; mask < (1 << n) && !c.zero_in_hull; ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != size) continue;
      std::vector<int> idx;
      for (int b = 0; b < n; ++b)
        if (mask & (1 << b)) idx.push_back(active[b]);
      std::array<double, 4> lam{};
      if (solve_subset(idx, lam)) {
        c.zero_in_hull = true;
        c.lambda = lam;
      }
    }
  }
  c.valid = c.common_max && c.zero_in_hull;
  return c;
}

namespace {

// Piecewise-linear interpolation on a sorted axis, extended linearly past the ends.
struct Axis {
  const std::vector<double>& x;

  std::size_t segment(double v) const {
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
  }
  double slope(const double* g, std::size_t i) const { return (g[i + 1] - g[i]) / (x[i + 1] - x[i]); }
  double eval(const double* g, double v) const {
    const std::size_t i = segment(v);
    return g[i] + slope(g, i) * (v - x[i]);
  }
};

struct Scratch {
  detail::Candidates cand;
  std::vector<double> profile;  // candidates x W
  std::vector<double> F;        // exact terminal payoffs when the next date is maturity
  std::vector<Line> lines;
};

class EpsilonEngine {
 public:
  EpsilonEngine(const TransitionModel& model, const Payoff& payoff, const StateLattice& lattice,
                std::vector<double> wealth, const EpsilonOptions& opt)
      : model_(model),
        payoff_(payoff),
        lat_(lattice),
        x_(std::move(wealth)),
        axis_{x_},
        opt_(opt),
        builder_(model, lattice, payoff, opt.include_outside_nodes, opt.extend_outside_states),
        K_(model.market.periods) {}

  EpsilonSolution run() {
    const std::size_t n = lat_.size(), W = x_.size();
    EpsilonSolution sol;
    sol.value.assign(static_cast<std::size_t>(K_) + 1, std::vector<double>(n * W));
    sol.zeta.assign(static_cast<std::size_t>(K_), std::vector<double>(n * W, 0.0));
    for (std::size_t node = 0; node < n; ++node) {
      const double F = payoff_.terminal_value(lat_.price_at(node), lat_.aux_at(node));
      for (std::size_t i = 0; i < W; ++i) sol.value[K_][node * W + i] = std::abs(F - x_[i]);
    }
    for (int k = K_ - 1; k >= 0; --k) {
      const auto& next = sol.value[static_cast<std::size_t>(k) + 1];
      auto& cur = sol.value[static_cast<std::size_t>(k)];
      auto& zeta = sol.zeta[static_cast<std::size_t>(k)];
      detail::parallel_for(n, opt_.threads, [&](std::size_t node) {
        thread_local Scratch s;
        const double S = lat_.price_at(node), th = lat_.theta_at(node), Y = lat_.aux_at(node);
        prepare(k, S, th, Y, next, s);
        for (std::size_t i = 0; i < W; ++i) {
          const MinimaxResult m = solve(x_[i], s, i == 0 ? nullptr : &zeta[node * W + i - 1]);
          cur[node * W + i] = m.value;
          zeta[node * W + i] = m.zeta;
        }
      });
    }
    double worst = 0.0;
    for (int k = 0; k < K_; ++k)
      for (std::size_t node = 0; node < n; ++node) {
        const double* v = &sol.value[k][node * W];
        for (std::size_t i = 1; i + 1 < W; ++i) {
          const double h = 0.5 * (x_[i + 1] - x_[i - 1]);
          worst = std::min(worst, (axis_.slope(v, i) - axis_.slope(v, i - 1)) * h);
        }
      }
    sol.min_second_difference = worst;

    if (!builder_.valid_root()) throw NumericalError("epsilon: root state lies outside the uncertainty set");
    Scratch s;
    prepare(0, model_.market.s0, 0.0, payoff_.aux_initial, sol.value[1], s);
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < W; ++i) {
      const double v = solve(x_[i], s).value;
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    const double lo = x_[best == 0 ? 0 : best - 1], hi = x_[std::min(best + 1, W - 1)];
    const auto r = boost::math::tools::brent_find_minima(
        [&](double x) { return solve(x, s).value; }, lo, hi, 40);
    double price = r.first;
    MinimaxResult m = solve(price, s);
    if (best_v < m.value) {
      price = x_[best];
      m = solve(price, s);
    }
    sol.price = price;
    sol.worst_abs_error = std::max(0.0, m.value);
    sol.root_zeta = m.zeta;
    sol.wealth = x_;
    return sol;
  }

 private:
  void prepare(int k, double S, double th, double Y, const std::vector<double>& next, Scratch& s) const {
    const std::size_t W = x_.size();
    s.F.clear();
    s.profile.clear();
    if (!builder_.build(k, S, th, Y, s.cand)) {
      double y = Y;
      for (int j = k + 1; j <= K_; ++j) y = payoff_.next_aux(y, S, 0.0);
      s.F.assign(1, payoff_.terminal_value(S, y));
      s.cand.r.assign(1, 0.0);
      return;
    }
    const std::size_t J = s.cand.r.size();
    if (k == K_ - 1) {
      s.F.resize(J);
      for (std::size_t j = 0; j < J; ++j)
        s.F[j] = payoff_.terminal_value(s.cand.next_price[j], s.cand.next_aux[j]);
      return;
    }
    s.profile.assign(J * W, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      const auto& st = s.cand.stencil[j];
      double* g = &s.profile[j * W];
      for (int q = 0; q < st.size; ++q) {
        const double w = st.weight[q];
        const double* src = &next[st.index[q] * W];
        for (std::size_t i = 0; i < W; ++i) g[i] += w * src[i];
      }
    }
  }

  double objective(double X, double z, const Scratch& s) const {
    double v = -std::numeric_limits<double>::infinity();
    const std::size_t W = x_.size();
    for (std::size_t j = 0; j < s.cand.r.size(); ++j) {
      const double y = X + z * s.cand.r[j];
      const double e = s.profile.empty() ? std::abs(s.F[j] - y) : axis_.eval(&s.profile[j * W], y);
      v = std::max(v, e);
    }
    return v;
  }

  /// `hint` is a starting position, usually the optimum at the neighbouring
  /// wealth node; Brent's method is the fallback when it does not lead to an
  /// exact solution.
  MinimaxResult solve(double X, Scratch& s, const double* hint = nullptr) const {
    if (s.profile.empty() && s.F.size() == 1 && s.cand.r.size() == 1 && s.cand.r[0] == 0.0)
      return {std::abs(s.F[0] - X), 0.0};
    double rmax = 0.0;
    for (double r : s.cand.r) rmax = std::max(rmax, std::abs(r));
    if (rmax == 0.0) return {objective(X, 0.0, s), 0.0};
    if (hint) {
      MinimaxResult best{objective(X, *hint, s), *hint};
      if (refine(X, s, best)) return best;
    }
    const double span = std::abs(x_.back()) + std::abs(x_.front()) + std::abs(X);
    const double Z = 10.0 * (model_.market.s0 + span);
    const auto br = boost::math::tools::brent_find_minima([&](double z) { return objective(X, z, s); },
                                                          -Z, Z, 24);
    MinimaxResult best{br.second, br.first};
    refine(X, s, best);
    return best;
  }

  // The objective is a max of convex piecewise-linear terms. The segments
  // around the current point give a local envelope that bounds it from below;
  // when the envelope's minimizer attains the objective it is exact, otherwise
  // move there and rebuild. True on an exact finish.
  bool refine(double X, Scratch& s, MinimaxResult& best) const {
    const std::size_t W = x_.size();
    double z = best.zeta;
    for (int iter = 0; iter < 8; ++iter) {
      s.lines.clear();
      for (std::size_t j = 0; j < s.cand.r.size(); ++j) {
        const double r = s.cand.r[j];
        if (s.profile.empty()) {
          s.lines.push_back({-r, s.F[j] - X});
          s.lines.push_back({r, X - s.F[j]});
          continue;
        }
        const double* g = &s.profile[j * W];
        const std::size_t c = axis_.segment(X + z * r);
        for (std::size_t i = c == 0 ? 0 : c - 1; i <= std::min(c + 1, W - 2); ++i) {
          const double sl = axis_.slope(g, i);
          s.lines.push_back({sl * r, g[i] + sl * (X - x_[i])});
        }
      }
      MinimaxResult env;
      try {
        env = inner_minimax(s.lines);
      } catch (const UnboundedError&) {
        return false;
      }
      const double v = objective(X, env.zeta, s);
      if (v < best.value) best = {v, env.zeta};
      if (v <= env.value + 1e-12 * (1.0 + std::abs(v))) return true;
      z = env.zeta;
    }
    return false;
  }

  const TransitionModel& model_;
  const Payoff& payoff_;
  const StateLattice& lat_;
  std::vector<double> x_;
  Axis axis_;
  EpsilonOptions opt_;
  detail::CandidateBuilder builder_;
  int K_;
};

std::vector<double> default_wealth(const UncertaintySpec& spec, const Payoff& payoff,
                                   const EpsilonOptions& opt) {
  if (opt.wealth_nodes < 3) throw ParameterError("epsilon: need at least 3 wealth nodes");
  if (!(opt.wealth_half_width > 0.0)) throw ParameterError("epsilon: wealth half width must be > 0");
  const MarketParams& m = spec.market;
  double c = opt.wealth_center;
  if (std::isnan(c)) {
    if (payoff.kind == PayoffKind::call || payoff.kind == PayoffKind::put)
      c = black_scholes_price(m.s0, payoff.strike, m.sigma, m.maturity,
                              payoff.kind == PayoffKind::call ? OptionType::call : OptionType::put);
    else
      c = payoff.terminal_value(m.s0, payoff.aux_initial);
  }
  const double h = opt.wealth_half_width * m.s0;
  std::vector<double> x(static_cast<std::size_t>(opt.wealth_nodes));
  for (int i = 0; i < opt.wealth_nodes; ++i) x[i] = c - h + 2.0 * h * i / (opt.wealth_nodes - 1);
  return x;
}

}  // namespace

double EpsilonSolution::zeta_at(const StateLattice& lattice, int k, double price, double theta,
                                double aux, double x) const {
  if (k < 0 || k >= static_cast<int>(zeta.size())) return 0.0;
  const std::size_t W = wealth.size();
  const double xc = std::clamp(x, wealth.front(), wealth.back());
  const Axis axis{wealth};
  const std::size_t i = axis.segment(xc);
  const double t = (xc - wealth[i]) / (wealth[i + 1] - wealth[i]);
  const auto st = lattice.stencil(price, theta, aux);
  const auto& z = zeta[static_cast<std::size_t>(k)];
  double v = 0.0;
  for (int q = 0; q < st.size; ++q) {
    const std::size_t b = st.index[q] * W + i;
    v += st.weight[q] * ((1.0 - t) * z[b] + t * z[b + 1]);
  }
  return v;
}

EpsilonSolution epsilon_multi_period(const UncertaintySpec& spec, const Payoff& payoff,
                                     const StateLattice& lattice, const EpsilonOptions& options) {
  spec.validate();
  if (!payoff.terminal) throw ParameterError("epsilon: payoff has no terminal value");
  if (payoff.has_aux() != lattice.has_aux())
    throw ParameterError("epsilon: payoff aux process and lattice aux axis disagree");
  const ThetaMode want = spec.kind == UncertaintyKind::u1prime ? ThetaMode::log_price
                         : spec.kind == UncertaintyKind::u2    ? ThetaMode::axis
                                                               : ThetaMode::none;
  if (lattice.theta_mode() != want) throw ParameterError("epsilon: lattice theta mode does not fit the set");
  std::vector<double> wealth = options.wealth.empty() ? default_wealth(spec, payoff, options) : options.wealth;
  if (wealth.size() < 3) throw ParameterError("epsilon: need at least 3 wealth nodes");
  if (!std::is_sorted(wealth.begin(), wealth.end()) ||
      std::adjacent_find(wealth.begin(), wealth.end()) != wealth.end())
    throw ParameterError("epsilon: wealth axis must be strictly increasing");
  const TransitionModel model = TransitionModel::robust(spec);
  EpsilonEngine engine(model, payoff, lattice, std::move(wealth), options);
  return engine.run();
}

}  // namespace erp
