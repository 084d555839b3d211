#include "pipeline.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>

#include "erp/errors.hpp"

namespace erp::app {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool is_vanilla(const RunConfig& c) { return c.payoff.type == "call" || c.payoff.type == "put"; }

OptionType option_type(const RunConfig& c) {
  return c.payoff.type == "call" ? OptionType::call : OptionType::put;
}

LatticeOptions lattice_options(const RunConfig& c) {
  LatticeOptions o;
  o.price_nodes = c.price_nodes;
  o.theta_nodes = c.theta_nodes;
  o.aux_nodes = c.aux_nodes;
  return o;
}

const AmericanSolution& writer_for(const AmericanSet& set, AmericanMode mode) {
  return mode == AmericanMode::commit ? set.writer_commit : set.writer_no_commit;
}

}  // namespace

Payoff make_payoff(const RunConfig& c) {
  const bool am = c.payoff.style == OptionStyle::american;
  if (c.payoff.type == "call") return am ? Payoff::american_call(c.payoff.strike) : Payoff::european_call(c.payoff.strike);
  if (c.payoff.type == "put") return am ? Payoff::american_put(c.payoff.strike) : Payoff::european_put(c.payoff.strike);
  if (c.payoff.type == "running_max_call") return Payoff::running_max_call(c.payoff.strike);
  if (c.payoff.type == "asian_call") return Payoff::asian_call(c.payoff.strike, c.market.periods);
  if (c.payoff.type == "constant") return Payoff::constant(c.payoff.amount);
  throw ParameterError("unknown payoff.type '" + c.payoff.type + "'");
}

PathSet train_paths(const RunConfig& c) {
  if (!c.train_file.empty()) {
    std::ifstream in(c.train_file);
    if (!in) throw ParameterError("cannot open train file '" + c.train_file + "'");
    PathSet p = read_paths_csv(in, PathRole::train);
    if (p.periods() != c.market.periods) throw ParameterError("train file has the wrong number of periods");
    return p;
  }
  if (c.train_paths == 0) return PathSet{{}, c.seed, PathRole::train};
  return simulate_paths(c.market, c.train_paths, c.seed, PathRole::train, 0);
}

PathSet test_paths(const RunConfig& c) {
  if (c.test_paths == 0) throw ParameterError("simulation.test_paths must be > 0");
  return simulate_paths(c.market, c.test_paths, c.seed, PathRole::test, c.train_paths);
}

Calibration calibrate(const RunConfig& c, const PathSet& train) {
  Calibration cal;
  const UncertaintyConfig& u = c.uncertainty;
  if (u.kind == UncertaintyKind::box) {
    cal.spec = UncertaintySpec::box(c.market, u.box_lower, u.box_upper);
    cal.spec.validate();
    return cal;
  }
  const int parts = u.kind == UncertaintyKind::u2
                        ? (u.partitions > 0 ? u.partitions : default_partitions(c.market.periods))
                        : 1;
  double gamma = 0.0;
  if (u.gamma) {
    gamma = *u.gamma;
  } else {
    if (train.empty()) throw ParameterError("calibration needs train paths");
    cal.result = calibrate_gamma(u.kind, c.market, parts, train, u.coverage);
    gamma = cal.result->gamma;
  }
  cal.spec = u.kind == UncertaintyKind::u2 ? UncertaintySpec::u2(c.market, gamma, parts)
                                           : UncertaintySpec::u1prime(c.market, gamma);
  cal.spec.validate();
  return cal;
}

Model build_model(const RunConfig& c, const PathSet& train) {
  c.validate();
  Model m{make_payoff(c), {}, std::nullopt, nullptr, {}};
  m.solver.include_outside_nodes = c.include_outside_nodes;
  m.solver.extend_outside_states = c.extend_outside_states;
  m.solver.verify_post_exercise = c.verify_post_exercise;
  m.solver.threads = c.threads;
  if (c.risk.kind == RiskKind::worst_case) {
    m.calibration = calibrate(c, train);
    m.transition = TransitionModel::robust(m.calibration->spec);
    m.lattice = std::make_shared<const StateLattice>(
        StateLattice::build(m.calibration->spec, train, m.payoff, lattice_options(c)));
  } else {
    if (train.empty()) throw ParameterError("probabilistic mappings need train paths for the price grid");
    m.transition = TransitionModel::probabilistic(c.risk, c.market, c.risk_atoms);
    m.lattice = std::make_shared<const StateLattice>(
        StateLattice::build_plain(c.market, train, m.payoff, lattice_options(c)));
  }
  return m;
}

void PricingReport::check() const {
  auto ok = [](const PriceInterval& p) {
    if (p.fpi_lower > p.fpi_upper) return true;  // empty interval
    const double tol = 1e-9 * (1.0 + std::abs(p.erp));
    return p.erp >= p.fpi_lower - tol && p.erp <= p.fpi_upper + tol;
  };
  if (!ok(interval)) throw NumericalError("report: ERP outside the fair price interval");
  for (const auto& a : american)
    if (!ok(a.interval)) throw NumericalError("report: American ERP outside the fair price interval");
}

Solved price(const RunConfig& c, const PathSet& train) {
  const auto t0 = Clock::now();
  Solved s{build_model(c, train), {}, std::nullopt, std::nullopt};
  Model& m = s.model;
  PricingReport& r = s.report;
  r.translation_invariant = m.transition.mapping.translation_invariant();
  if (c.payoff.style == OptionStyle::american) {
    if (!r.translation_invariant)
      throw ParameterError("American pricing needs a translation-invariant risk mapping");
    s.american = solve_american_all(m.transition, m.payoff, *m.lattice, m.solver);
    for (const auto& name : c.american_modes) {
      const AmericanMode mode = parse_american_mode(name);
      r.american.push_back({mode, erp_and_fpi(writer_for(*s.american, mode).value.root, s.american->buyer.value.root)});
    }
    if (r.american.empty()) throw ParameterError("american.modes is empty");
    r.interval = r.american.front().interval;
  } else {
    auto pairs = solve_european_batch(m.transition, {m.payoff}, *m.lattice, m.solver);
    s.european = std::move(pairs.front());
    r.interval = erp_and_fpi(s.european->writer.value.root, s.european->buyer.value.root);
    if (!r.translation_invariant) {
      // The premium no longer passes through the risk, so solve for it. The
      // interval ends are the premiums at which each side's risk is zero.
      auto risk = [&](Side side, double p0) {
        return solve_european(side, m.transition, Payoff::shifted(m.payoff, -p0), *m.lattice, m.solver).value.root;
      };
      auto root = [&](const std::function<double(double)>& f) {  // f nonincreasing
        const double width = std::abs(r.interval.fpi_upper - r.interval.fpi_lower) + 1.0;
        double lo = std::min(r.interval.fpi_lower, r.interval.fpi_upper) - width;
        double hi = std::max(r.interval.fpi_lower, r.interval.fpi_upper) + width;
        for (int i = 0; i < 20 && f(lo) < 0.0; ++i) lo -= width * (1 << i);
        for (int i = 0; i < 20 && f(hi) > 0.0; ++i) hi += width * (1 << i);
        return bisect_price(f, lo, hi, 1e-6);
      };
      r.interval.fpi_upper = root([&](double p0) { return risk(Side::writer, p0); });
      r.interval.fpi_lower = root([&](double p0) { return -risk(Side::buyer, p0); });
      r.interval.erp = root([&](double p0) { return risk(Side::writer, p0) - risk(Side::buyer, p0); });
    }
  }
  if (is_vanilla(c)) {
    r.bs = black_scholes_price(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, option_type(c));
    r.binomial = binomial_price(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, c.binomial_steps,
                                option_type(c), c.payoff.style == OptionStyle::american);
  } else {
    r.bs = std::numeric_limits<double>::quiet_NaN();
  }
  if (c.price_epsilon && m.calibration && c.payoff.style == OptionStyle::european) {
    const EpsilonReport e = epsilon_price(c, train);
    r.epsilon = e.price;
    r.epsilon_error = e.worst_abs_error;
  }
  if (m.calibration && m.calibration->spec.kind != UncertaintyKind::box) {
    r.gamma = m.calibration->spec.gamma;
    r.partitions = m.calibration->spec.kind == UncertaintyKind::u2 ? m.calibration->spec.partitions : 0;
  }
  r.lattice_nodes = m.lattice->size();
  r.price_nodes = m.lattice->price_count();
  r.theta_nodes = m.lattice->theta_count();
  r.aux_nodes = m.lattice->has_aux() ? m.lattice->aux_count() : 0;
  r.wall_time = seconds_since(t0);
  r.check();
  return s;
}

EpsilonReport epsilon_price(const RunConfig& c, const PathSet& train, std::shared_ptr<const EpsilonSolution>* keep) {
  const auto t0 = Clock::now();
  c.validate();
  if (c.risk.kind != RiskKind::worst_case) throw ParameterError("epsilon pricing needs the worst_case mapping");
  if (c.payoff.style != OptionStyle::european) throw ParameterError("epsilon pricing is European only");
  const Payoff payoff = make_payoff(c);
  const Calibration cal = calibrate(c, train);
  const StateLattice lattice = StateLattice::build(cal.spec, train, payoff, lattice_options(c));
  EpsilonOptions o;
  o.wealth_nodes = c.wealth_nodes;
  o.wealth_half_width = c.wealth_half_width;
  o.include_outside_nodes = c.include_outside_nodes;
  o.extend_outside_states = c.extend_outside_states;
  o.threads = c.threads;
  auto sol = std::make_shared<const EpsilonSolution>(epsilon_multi_period(cal.spec, payoff, lattice, o));
  EpsilonReport r;
  r.price = sol->price;
  r.worst_abs_error = sol->worst_abs_error;
  r.min_second_difference = sol->min_second_difference;
  r.wealth_nodes = sol->wealth.size();
  r.wealth_lo = sol->wealth.front();
  r.wealth_hi = sol->wealth.back();
  r.wall_time = seconds_since(t0);
  if (keep) *keep = sol;
  return r;
}

BaselineReport baselines(const RunConfig& c) {
  c.validate();
  if (!is_vanilla(c)) throw ParameterError("baselines need a call or put");
  BaselineReport r;
  const OptionType t = option_type(c);
  r.bs = black_scholes_price(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, t);
  r.bs_delta = black_scholes_delta(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, t);
  r.binomial = binomial_price(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, c.binomial_steps, t,
                              c.payoff.style == OptionStyle::american);
  r.binomial_steps = c.binomial_steps;
  return r;
}

BacktestReport backtest(const RunConfig& c, const PathSet& train, const PathSet& test) {
  return backtest(c, train, test, price(c, train));
}

BacktestReport backtest(const RunConfig& c, const PathSet& train, const PathSet& test, const Solved& s) {
  const Model& m = s.model;
  const bool american = c.payoff.style == OptionStyle::american;
  const PricerTag erp_tag = m.calibration ? PricerTag::erp_robust : PricerTag::erp_risk;
  std::vector<StrategyPair> pairs;
  for (const std::string& name : c.strategies) {
    StrategyPair p;
    p.name = name;
    if (name == "erp" || name == "erp_robust" || name == "erp_risk") {
      const double p0 = s.report.interval.erp;
      if (american) {
        const AmericanMode mode = s.report.american.front().mode;
        p.writer = lattice_strategy(name, erp_tag, Side::writer, p0, m.lattice, writer_for(*s.american, mode).hedge);
        p.buyer = lattice_strategy(name, erp_tag, Side::buyer, p0, m.lattice, s.american->buyer.hedge);
        p.buyer.exercise = lattice_exercise(m.lattice, s.american->buyer, m.payoff);
      } else {
        p.writer = lattice_strategy(name, erp_tag, Side::writer, p0, m.lattice, s.european->writer.hedge);
        p.buyer = lattice_strategy(name, erp_tag, Side::buyer, p0, m.lattice, s.european->buyer.hedge);
      }
    } else if (name == "bs") {
      if (!is_vanilla(c)) throw ParameterError("bs strategy needs a call or put");
      const BaselineQuote q = black_scholes(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity,
                                            option_type(c), c.market.periods);
      p.writer = quote_strategy(name, PricerTag::bs, Side::writer, q);
      p.buyer = quote_strategy(name, PricerTag::bs, Side::buyer, q);
    } else if (name == "binomial") {
      if (!is_vanilla(c)) throw ParameterError("binomial strategy needs a call or put");
      BaselineQuote q;
      if (american) {
        q = binomial_american(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, c.binomial_steps,
                              option_type(c), c.market.periods);
      } else {
        q.price = binomial_price(c.market.s0, c.payoff.strike, c.market.sigma, c.market.maturity, c.binomial_steps,
                                 option_type(c), false);
        auto tree = std::make_shared<const BinomialTree>(c.market.s0, c.payoff.strike, c.market.sigma,
                                                         c.market.maturity, c.market.periods, option_type(c), false);
        const MarketParams mk = c.market;
        q.delta0 = tree->delta(0, 0);
        q.delta = [tree, mk](int k, double S) { return tree->delta_at(mk.time(k), S); };
      }
      p.writer = quote_strategy(name, PricerTag::binomial, Side::writer, q);
      p.buyer = quote_strategy(name, PricerTag::binomial, Side::buyer, q);
    } else if (name == "epsilon") {
      if (american) throw ParameterError("epsilon strategy is European only");
      std::shared_ptr<const EpsilonSolution> sol;
      epsilon_price(c, train, &sol);
      p = epsilon_pair(name, m.lattice, sol);
    } else {
      throw ParameterError("unknown strategy '" + name + "'");
    }
    pairs.push_back(std::move(p));
  }
  return run_backtest(pairs, test, m.payoff, c.market, exclusion_for(*m.lattice, c.threads));
}

nlohmann::json to_json(const PricingReport& r) {
  auto interval = [](const PriceInterval& p) {
    return nlohmann::json{{"erp", p.erp}, {"fpi_lower", p.fpi_lower}, {"fpi_upper", p.fpi_upper}};
  };
  nlohmann::json j = interval(r.interval);
  j["translation_invariant"] = r.translation_invariant;
  for (const auto& a : r.american) j["american"][to_string(a.mode)] = interval(a.interval);
  j["bs"] = std::isnan(r.bs) ? nlohmann::json(nullptr) : nlohmann::json(r.bs);
  j["binomial"] = r.binomial ? nlohmann::json(*r.binomial) : nlohmann::json(nullptr);
  j["epsilon"] = r.epsilon ? nlohmann::json(*r.epsilon) : nlohmann::json(nullptr);
  j["epsilon_worst_abs_error"] = r.epsilon_error ? nlohmann::json(*r.epsilon_error) : nlohmann::json(nullptr);
  j["gamma"] = r.gamma ? nlohmann::json(*r.gamma) : nlohmann::json(nullptr);
  j["partitions"] = r.partitions;
  j["grid"] = {{"nodes", r.lattice_nodes}, {"price", r.price_nodes}, {"theta", r.theta_nodes}, {"aux", r.aux_nodes}};
  j["wall_time_s"] = r.wall_time;
  return j;
}

nlohmann::json to_json(const EpsilonReport& r) {
  return {{"price", r.price},
          {"worst_abs_error", r.worst_abs_error},
          {"min_second_difference", r.min_second_difference},
          {"wealth_nodes", r.wealth_nodes},
          {"wealth_range", {r.wealth_lo, r.wealth_hi}},
          {"wall_time_s", r.wall_time}};
}

nlohmann::json to_json(const BaselineReport& r) {
  return {{"bs", r.bs}, {"bs_delta", r.bs_delta}, {"binomial", r.binomial}, {"binomial_steps", r.binomial_steps}};
}

nlohmann::json to_json(const CalibrationResult& r, const UncertaintySpec& spec) {
  return {{"kind", to_string(spec.kind)}, {"gamma", r.gamma},   {"partitions", spec.partitions},
          {"covered", r.covered},         {"required", r.required}, {"total", r.total}};
}

std::string pricing_csv(const PricingReport& r) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(10);
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << "erp,fpi_lower,fpi_upper,erp_commit,erp_no_commit,bs,binomial,epsilon,gamma,partitions,lattice_nodes\n";
  os << r.interval.erp << ',' << r.interval.fpi_lower << ',' << r.interval.fpi_upper << ',';
  for (AmericanMode mode : {AmericanMode::commit, AmericanMode::no_commit}) {
    for (const auto& a : r.american)
      if (a.mode == mode) os << a.interval.erp;
    os << ',';
  }
  if (!std::isnan(r.bs)) os << r.bs;
  os << ',';
  opt(r.binomial);
  os << ',';
  opt(r.epsilon);
  os << ',';
  opt(r.gamma);
  os << ',' << r.partitions << ',' << r.lattice_nodes << '\n';
  return os.str();
}

}  // namespace erp::app
