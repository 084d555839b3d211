#include "erp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "erp/errors.hpp"
#include "erp/inner.hpp"
#include "parallel.hpp"
#include "transitions.hpp"

namespace erp {

std::string to_string(Side side) { return side == Side::writer ? "writer" : "buyer"; }
std::string to_string(AmericanMode mode) { return mode == AmericanMode::commit ? "commit" : "no_commit"; }

AmericanMode parse_american_mode(const std::string& text) {
  if (text == "commit") return AmericanMode::commit;
  if (text == "no_commit" || text == "nocommit" || text == "no-commit") return AmericanMode::no_commit;
  throw ParameterError("unknown american mode '" + text + "'");
}

TransitionModel TransitionModel::robust(const UncertaintySpec& spec) {
  spec.validate();
  TransitionModel m;
  m.mapping = RiskMapping::worst_case();
  m.spec = spec;
  m.market = spec.market;
  return m;
}

TransitionModel TransitionModel::probabilistic(const RiskMapping& mapping, const MarketParams& market,
                                               int atoms) {
  mapping.validate();
  market.validate();
  if (atoms < 1) throw ParameterError("probabilistic model: atoms must be >= 1");
  TransitionModel m;
  m.mapping = mapping;
  m.market = market;
  const boost::math::normal_distribution<double> normal(market.mu * market.dt(),
                                                        market.sigma * std::sqrt(market.dt()));
  m.returns.resize(static_cast<std::size_t>(atoms));
  m.weights.assign(static_cast<std::size_t>(atoms), 1.0 / atoms);
  for (int j = 0; j < atoms; ++j)
    m.returns[j] = std::expm1(boost::math::quantile(normal, (j + 0.5) / atoms));
  return m;
}

namespace {

enum class Rule { eu_writer, eu_buyer, pure, am_buyer, am_writer_commit, am_writer_nc };

struct SliceDef {
  Rule rule;
  int payoff;  // -1 for the pure-trading slice
};

struct SliceData {
  std::vector<std::vector<double>> v, z, c;
  std::vector<std::vector<std::uint8_t>> ex;
  double root_v = 0.0, root_z = 0.0, root_c = 0.0;
  bool root_ex = false;
};

struct NodeOut {
  double v = 0.0, z = 0.0, c = 0.0;
  bool ex = false;
};

struct Scratch {
  detail::Candidates cand;
  std::vector<double> a;
  std::vector<NodeOut> out;
};

bool is_american(Rule r) {
  return r == Rule::am_buyer || r == Rule::am_writer_commit || r == Rule::am_writer_nc;
}

class Engine {
 public:
  Engine(const TransitionModel& model, const StateLattice& lattice, const std::vector<Payoff>& payoffs,
         std::vector<SliceDef> slices, const SolverOptions& options)
      : model_(model), lat_(lattice), payoffs_(payoffs), slices_(std::move(slices)), opt_(options),
        builder_(model, lattice, payoffs.at(0), options.include_outside_nodes, options.extend_outside_states) {
    model_.mapping.validate();
    K_ = model_.market.periods;
    market_ = model_.market;
    if (model_.is_robust()) {
      table_.emplace(*model_.spec);
      if (model_.mapping.kind != RiskKind::worst_case)
        throw ParameterError("solver: robust model requires the worst_case mapping");
      expect_theta(model_.spec->kind == UncertaintyKind::u1prime   ? ThetaMode::log_price
                   : model_.spec->kind == UncertaintyKind::u2 ? ThetaMode::axis
                                                              : ThetaMode::none);
    } else {
      if (model_.returns.empty() || model_.returns.size() != model_.weights.size())
        throw ParameterError("solver: probabilistic model needs matching atoms and weights");
      expect_theta(ThetaMode::none);
    }
    for (const auto& s : slices_) {
      if (s.payoff < 0) continue;
      const Payoff& p = payoffs_[static_cast<std::size_t>(s.payoff)];
      if (!p.terminal) throw ParameterError("solver: payoff has no terminal value");
      if (is_american(s.rule) && !p.is_american())
        throw ParameterError("solver: American problem needs an intermediate exercise value");
      if (p.has_aux() != lat_.has_aux())
        throw ParameterError("solver: payoff aux process and lattice aux axis disagree");
    }
    for (std::size_t i = 0; i < slices_.size(); ++i) {
      if (slices_[i].rule == Rule::pure) pure_ = static_cast<int>(i);
      if (slices_[i].rule == Rule::am_buyer) buyer_ = static_cast<int>(i);
    }
    pure_shortcut_ = pure_ >= 0 && model_.mapping.is_coherent() && !opt_.verify_post_exercise;
  }

  std::vector<SliceData> run() {
    if (K_ < 1) throw ParameterError("solver: periods must be >= 1");
    const std::size_t n = lat_.size();
    std::vector<SliceData> data(slices_.size());
    for (auto& d : data) {
      d.v.assign(static_cast<std::size_t>(K_) + 1, std::vector<double>(n));
      d.z.assign(static_cast<std::size_t>(K_) + 1, std::vector<double>(n, 0.0));
      d.c.assign(static_cast<std::size_t>(K_) + 1, std::vector<double>(n, 0.0));
      d.ex.assign(static_cast<std::size_t>(K_) + 1, std::vector<std::uint8_t>(n, 0));
    }
    // Terminal slice.
    for (std::size_t node = 0; node < n; ++node) {
      const double S = lat_.price_at(node), Y = lat_.aux_at(node);
      for (std::size_t s = 0; s < slices_.size(); ++s) {
        const int p = slices_[s].payoff;
        const double F = p < 0 ? 0.0 : payoffs_[static_cast<std::size_t>(p)].terminal_value(S, Y);
        data[s].v[K_][node] = terminal(slices_[s].rule, F);
        data[s].c[K_][node] = data[s].v[K_][node];
        data[s].ex[K_][node] = 1;
      }
    }
    for (int k = K_ - 1; k >= 0; --k) {
      detail::parallel_for(n, opt_.threads, [&](std::size_t node) {
        thread_local Scratch scratch;
        solve_node(k, lat_.price_at(node), lat_.theta_at(node), lat_.aux_at(node), data, scratch);
        for (std::size_t s = 0; s < slices_.size(); ++s) {
          const NodeOut& o = scratch.out[s];
          data[s].v[k][node] = o.v;
          data[s].z[k][node] = o.z;
          data[s].c[k][node] = o.c;
          data[s].ex[k][node] = o.ex;
        }
      });
    }
    Scratch scratch;
    const double Y0 = payoffs_.front().aux_initial;
    if (!model_.is_robust() || table_->valid_state(0, 0.0)) {
      solve_node(0, market_.s0, 0.0, Y0, data, scratch, true);
    } else {
      throw NumericalError("solver: root state lies outside the uncertainty set");
    }
    for (std::size_t s = 0; s < slices_.size(); ++s) {
      data[s].root_v = scratch.out[s].v;
      data[s].root_z = scratch.out[s].z;
      data[s].root_c = scratch.out[s].c;
      data[s].root_ex = scratch.out[s].ex;
    }
    if (pure_ >= 0 && model_.mapping.is_coherent() && opt_.verify_post_exercise) {
      double worst = std::abs(data[pure_].root_v);
      for (const auto& row : data[pure_].v)
        for (double x : row) worst = std::max(worst, std::abs(x));
      if (worst > 1e-8)
        throw NumericalError("solver: post-exercise pure-trading value reaches " + std::to_string(worst) +
                             " although the mapping is coherent");
    }
    return data;
  }

 private:
  void expect_theta(ThetaMode mode) const {
    if (lat_.theta_mode() != mode) throw ParameterError("solver: lattice theta mode does not fit the model");
  }

  static double terminal(Rule rule, double F) {
    switch (rule) {
      case Rule::eu_writer:
      case Rule::am_writer_commit:
      case Rule::am_writer_nc: return F;
      case Rule::eu_buyer:
      case Rule::am_buyer: return -F;
      case Rule::pure: return 0.0;
    }
    return 0.0;
  }

  // Value of the "not yet exercised" branch when no return is admissible:
  // the price is frozen until maturity.
  double zero_continuation(Rule rule, const Payoff& p, int k, double S, double Y) const {
    std::vector<double> F;
    double y = Y;
    for (int j = k + 1; j <= K_; ++j) {
      y = p.next_aux(y, S, 0.0);
      F.push_back(j == K_ ? p.terminal_value(S, y) : (is_american(rule) ? p.exercise_value(S, y) : 0.0));
    }
    switch (rule) {
      case Rule::eu_writer: return F.back();
      case Rule::eu_buyer: return -F.back();
      case Rule::pure: return 0.0;
      case Rule::am_buyer: return -*std::max_element(F.begin(), F.end());
      case Rule::am_writer_commit:
      case Rule::am_writer_nc: return *std::max_element(F.begin(), F.end());
    }
    return 0.0;
  }

  void solve_node(int k, double S, double theta, double Y, const std::vector<SliceData>& data,
                  Scratch& s, bool root = false) const {
    s.out.assign(slices_.size(), NodeOut{});
    const bool has = builder_.build(k, S, theta, Y, s.cand);
    const auto& cand = s.cand;
    for (std::size_t i = 0; i < slices_.size(); ++i) {
      const SliceDef& def = slices_[i];
      NodeOut& o = s.out[i];
      if (def.rule == Rule::pure && pure_shortcut_) continue;
      const Payoff* p = def.payoff < 0 ? nullptr : &payoffs_[static_cast<std::size_t>(def.payoff)];
      if (!has) {
        o.c = p ? zero_continuation(def.rule, *p, k, S, Y) : 0.0;
      } else {
        const auto& next = data[i].v[static_cast<std::size_t>(k) + 1];
        s.a.resize(cand.r.size());
        for (std::size_t j = 0; j < cand.r.size(); ++j) s.a[j] = cand.stencil[j].apply(next);
        try {
          const MinimaxResult m = minimize_position(model_.mapping, s.a, cand.r, cand.w);
          o.c = m.value;
          o.z = m.zeta;
        } catch (const UnboundedError& e) {
          std::ostringstream os;
          os << e.what() << " (period " << k << ", S=" << S << ", theta=" << theta
             << (root ? ", root" : "") << ")";
          throw UnboundedError(os.str());
        }
      }
      const double post = pure_ >= 0 ? s.out[static_cast<std::size_t>(pure_)].v : 0.0;
      switch (def.rule) {
        case Rule::eu_writer:
        case Rule::eu_buyer:
        case Rule::pure: o.v = o.c; break;
        case Rule::am_buyer: {
          const double exercise = post - p->exercise_value(S, Y);
          o.ex = exercise <= o.c;
          o.v = o.ex ? exercise : o.c;
          break;
        }
        case Rule::am_writer_commit: {
          o.ex = s.out[static_cast<std::size_t>(buyer_)].ex;
          o.v = o.ex ? p->exercise_value(S, Y) + post : o.c;
          break;
        }
        case Rule::am_writer_nc: {
          const double exercise = p->exercise_value(S, Y) + post;
          o.ex = buyer_ >= 0 ? s.out[static_cast<std::size_t>(buyer_)].ex : exercise >= o.c;
          o.v = std::max(exercise, o.c);
          break;
        }
      }
    }
  }

  const TransitionModel& model_;
  const StateLattice& lat_;
  const std::vector<Payoff>& payoffs_;
  std::vector<SliceDef> slices_;
  SolverOptions opt_;
  detail::CandidateBuilder builder_;
  std::optional<ReachableTable> table_;
  int K_ = 0;
  MarketParams market_;
  int pure_ = -1;
  int buyer_ = -1;
  bool pure_shortcut_ = false;
};

ValueSurface make_surface(Side side, int slice, SliceData& d) {
  ValueSurface v;
  v.side = side;
  v.slice = slice;
  v.values = std::move(d.v);
  v.root = d.root_v;
  return v;
}

HedgePolicy make_hedge(SliceData& d) {
  HedgePolicy h;
  h.zeta = std::move(d.z);
  h.zeta.pop_back();  // no position at maturity
  h.root = d.root_z;
  return h;
}

ExercisePolicy make_exercise(const SliceData& d) {
  ExercisePolicy e;
  e.exercise = d.ex;
  e.root = d.root_ex;
  return e;
}

std::vector<SliceData> run_engine(const TransitionModel& model, const StateLattice& lattice,
                                  const std::vector<Payoff>& payoffs, std::vector<SliceDef> slices,
                                  const SolverOptions& options) {
  return Engine(model, lattice, payoffs, std::move(slices), options).run();
}

}  // namespace

EuropeanSolution solve_european(Side side, const TransitionModel& model, const Payoff& payoff,
                                const StateLattice& lattice, const SolverOptions& options) {
  const std::vector<Payoff> payoffs{payoff};
  auto data = run_engine(model, lattice, payoffs,
                         {{side == Side::writer ? Rule::eu_writer : Rule::eu_buyer, 0}}, options);
  return {make_surface(side, 0, data[0]), make_hedge(data[0])};
}

std::vector<EuropeanPair> solve_european_batch(const TransitionModel& model,
                                               const std::vector<Payoff>& payoffs,
                                               const StateLattice& lattice,
                                               const SolverOptions& options) {
  std::vector<SliceDef> slices;
  for (int i = 0; i < static_cast<int>(payoffs.size()); ++i) {
    slices.push_back({Rule::eu_writer, i});
    slices.push_back({Rule::eu_buyer, i});
  }
  auto data = run_engine(model, lattice, payoffs, std::move(slices), options);
  std::vector<EuropeanPair> out(payoffs.size());
  for (std::size_t i = 0; i < payoffs.size(); ++i) {
    out[i].writer = {make_surface(Side::writer, 0, data[2 * i]), make_hedge(data[2 * i])};
    out[i].buyer = {make_surface(Side::buyer, 0, data[2 * i + 1]), make_hedge(data[2 * i + 1])};
  }
  return out;
}

namespace {

AmericanSolution make_american(Side side, AmericanMode mode, SliceData& d, const SliceData& pure,
                               const SliceData& buyer) {
  AmericanSolution a;
  a.side = side;
  a.mode = mode;
  a.exercise = make_exercise(buyer);
  a.continuation = std::move(d.c);
  a.root_continuation = d.root_c;
  a.value = make_surface(side, 0, d);
  SliceData post = pure;
  a.post_exercise = make_surface(side, 1, post);
  a.hedge = make_hedge(d);
  return a;
}

}  // namespace

AmericanSet solve_american_all(const TransitionModel& model, const Payoff& payoff,
                               const StateLattice& lattice, const SolverOptions& options) {
  const std::vector<Payoff> payoffs{payoff};
  auto data = run_engine(model, lattice, payoffs,
                         {{Rule::pure, -1},
                          {Rule::am_buyer, 0},
                          {Rule::am_writer_commit, 0},
                          {Rule::am_writer_nc, 0}},
                         options);
  AmericanSet set;
  set.writer_commit = make_american(Side::writer, AmericanMode::commit, data[2], data[0], data[1]);
  set.writer_no_commit = make_american(Side::writer, AmericanMode::no_commit, data[3], data[0], data[1]);
  set.buyer = make_american(Side::buyer, AmericanMode::commit, data[1], data[0], data[1]);
  return set;
}

AmericanSolution solve_american(Side side, const TransitionModel& model, const Payoff& payoff,
                                const StateLattice& lattice, AmericanMode mode,
                                const SolverOptions& options) {
  const std::vector<Payoff> payoffs{payoff};
  std::vector<SliceDef> slices{{Rule::pure, -1}, {Rule::am_buyer, 0}};
  if (side == Side::writer)
    slices.push_back({mode == AmericanMode::commit ? Rule::am_writer_commit : Rule::am_writer_nc, 0});
  auto data = run_engine(model, lattice, payoffs, std::move(slices), options);
  const std::size_t mine = side == Side::writer ? 2 : 1;
  AmericanSolution a = make_american(side, mode, data[mine], data[0], data[1]);
  return a;
}

PriceInterval erp_and_fpi(double writer_root, double buyer_root) {
  if (!std::isfinite(writer_root) || !std::isfinite(buyer_root))
    throw NumericalError("erp_and_fpi: non-finite hedging risk, the fair price interval is unbounded");
  PriceInterval p;
  p.fpi_upper = writer_root;
  p.fpi_lower = 0.0 - buyer_root;  // no negative zero
  p.erp = 0.5 * (writer_root - buyer_root);
  return p;
}

double bisect_price(const std::function<double(double)>& delta, double lo, double hi, double tol,
                    int max_iter) {
  if (!(lo <= hi)) throw ParameterError("bisect_price: empty bracket");
  const double dlo = delta(lo), dhi = delta(hi);
  if (dlo < 0.0 || dhi > 0.0) throw NumericalError("bisect_price: bracket does not enclose a sign change");
  if (dlo == 0.0) return lo;
  if (dhi == 0.0) return hi;
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = delta(mid);
    if (std::abs(d) <= tol) return mid;
    (d > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void write_surface_csv(std::ostream& os, const StateLattice& lattice, const ValueSurface& value,
                       const HedgePolicy& hedge, const ExercisePolicy* exercise) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(12);
  buf << "k,S,theta" << (lattice.has_aux() ? ",aux" : "") << ",value,zeta,exercise_flag\n";
  const int K = static_cast<int>(value.values.size()) - 1;
  for (int k = 0; k <= K; ++k) {
    for (std::size_t node = 0; node < lattice.size(); ++node) {
      buf << k << ',' << lattice.price_at(node) << ',' << lattice.theta_at(node);
      if (lattice.has_aux()) buf << ',' << lattice.aux_at(node);
      const double z = k < K && k < static_cast<int>(hedge.zeta.size()) ? hedge.zeta[k][node] : 0.0;
      const int ex = exercise ? exercise->exercise[k][node] : (k == K);
      buf << ',' << value.values[k][node] << ',' << z << ',' << ex << '\n';
    }
  }
  os << buf.str();
}

}  // namespace erp
