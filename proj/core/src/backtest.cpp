#include "erp/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>

#include "erp/errors.hpp"
#include "parallel.hpp"

namespace erp {

std::string to_string(PricerTag tag) {
  switch (tag) {
    case PricerTag::erp_robust: return "erp_robust";
    case PricerTag::erp_risk: return "erp_risk";
    case PricerTag::epsilon: return "epsilon";
    case PricerTag::bs: return "bs";
    case PricerTag::binomial: return "binomial";
  }
  return "unknown";
}

BacktestOptions exclusion_for(const StateLattice& lattice, int threads) {
  BacktestOptions o;
  o.exclude_below = lattice.min_price() / 3.0;
  o.exclude_above = lattice.max_price() * 3.0;
  o.threads = threads;
  return o;
}

ReplayResult replay(const StrategyPair& pair, const ReturnPath& path, const Payoff& payoff,
                    const MarketParams& market, const BacktestOptions& options) {
  const int K = market.periods;
  if (static_cast<int>(path.size()) != K) throw ParameterError("replay: path length differs from periods");
  if (!pair.writer.position || !pair.buyer.position) throw ParameterError("replay: strategy without a position rule");
  ReplayResult out;
  PathState w, b;
  w.price = b.price = market.s0;
  w.aux = b.aux = payoff.aux_initial;
  w.wealth = pair.writer.price;
  b.wealth = -pair.buyer.price;
  int tau = K;
  for (int k = 0; k <= K; ++k) {
    w.k = b.k = k;
    if (!(w.price >= options.exclude_below && w.price <= options.exclude_above)) out.excluded = true;
    if (k == K || (pair.buyer.exercise && pair.buyer.exercise(b))) {
      tau = k;
      break;
    }
    const double r = path[static_cast<std::size_t>(k)];
    w.wealth += pair.writer.position(w) * r;
    b.wealth += pair.buyer.position(b) * r;
    const double aux = payoff.next_aux(w.aux, w.price, r);
    const double S = w.price * (1.0 + r);
    const double lr = w.log_return + std::log1p(r);
    const double sq = w.sum_sq + r * r;
    for (PathState* s : {&w, &b}) {
      s->aux = aux;
      s->price = S;
      s->log_return = lr;
      s->sum_sq = sq;
    }
  }
  out.stop = tau;
  out.payout = tau == K ? payoff.terminal_value(w.price, w.aux) : payoff.exercise_value(w.price, w.aux);
  out.writer_wealth = w.wealth;
  out.buyer_wealth = b.wealth;
  out.writer_loss = out.payout - w.wealth;
  out.buyer_loss = -b.wealth - out.payout;
  return out;
}

std::string rank_label(double rank) {
  if (rank >= 100.0) return "Max";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << rank;
  return os.str();
}

std::vector<double> default_ranks() { return {50.0, 75.0, 90.0, 95.0, 99.0, 99.5, 100.0}; }

double sample_quantile(std::vector<double> values, double rank) {
  if (values.empty()) throw ParameterError("quantile of an empty sample");
  if (!(rank >= 0.0 && rank <= 100.0)) throw ParameterError("quantile rank must lie in [0, 100]");
  const std::size_t n = values.size();
  const double pos = std::ceil(rank * static_cast<double>(n) / 100.0 - 1e-9);
  const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, pos)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

std::vector<MetricRow> quantile_metrics(const std::vector<double>& writer_losses,
                                        const std::vector<double>& buyer_losses,
                                        const std::vector<double>& ranks) {
  if (writer_losses.empty() || buyer_losses.empty()) throw ParameterError("quantile_metrics: empty sample");
  if (writer_losses.size() != buyer_losses.size())
    throw ParameterError("quantile_metrics: writer and buyer sample sizes differ");
  std::vector<MetricRow> rows;
  for (double q : ranks) {
    MetricRow m;
    m.rank = q;
    m.writer_quantile = sample_quantile(writer_losses, q);
    m.buyer_quantile = sample_quantile(buyer_losses, q);
    m.avg = 0.5 * (m.writer_quantile + m.buyer_quantile);
    m.diff = std::abs(m.writer_quantile - m.buyer_quantile);
    rows.push_back(m);
  }
  return rows;
}

BacktestReport run_backtest(const std::vector<StrategyPair>& strategies, const PathSet& test,
                            const Payoff& payoff, const MarketParams& market,
                            const BacktestOptions& options, const std::vector<double>& ranks) {
  if (test.empty()) throw ParameterError("backtest: no test paths");
  if (test.periods() != market.periods) throw ParameterError("backtest: test paths do not match periods");
  BacktestReport report;
  for (const StrategyPair& pair : strategies) {
    if (!std::isfinite(pair.writer.price) || !std::isfinite(pair.buyer.price))
      throw ParameterError("backtest: strategy '" + pair.name + "' has a non-finite price");
    std::vector<ReplayResult> res(test.size());
    detail::parallel_for(test.size(), options.threads,
                         [&](std::size_t i) { res[i] = replay(pair, test.paths[i], payoff, market, options); });
    PairResult pr;
    pr.name = pair.name;
    pr.price = pair.writer.price;
    pr.paths = test.size();
    for (const ReplayResult& r : res) {
      if (r.excluded) {
        ++pr.excluded;
        continue;
      }
      pr.writer_losses.push_back(r.writer_loss);
      pr.buyer_losses.push_back(r.buyer_loss);
      pr.stops.push_back(r.stop);
    }
    if (pr.writer_losses.empty()) throw NumericalError("backtest: every path of '" + pair.name + "' was excluded");
    pr.metrics = quantile_metrics(pr.writer_losses, pr.buyer_losses, ranks);
    report.pairs.push_back(std::move(pr));
  }
  return report;
}

void write_metrics_csv(std::ostream& os, const BacktestReport& report) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(10);
  out << "strategy,rank,avg_loss,diff_loss,n_paths,n_excluded\n";
  for (const PairResult& p : report.pairs)
    for (const MetricRow& m : p.metrics)
      out << p.name << ',' << rank_label(m.rank) << ',' << m.avg << ',' << m.diff << ','
          << p.writer_losses.size() << ',' << p.excluded << '\n';
  os << out.str();
}

void write_losses_csv(std::ostream& os, const BacktestReport& report) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(12);
  out << "strategy,path,writer_loss,buyer_loss,stop\n";
  for (const PairResult& p : report.pairs)
    for (std::size_t i = 0; i < p.writer_losses.size(); ++i)
      out << p.name << ',' << i << ',' << p.writer_losses[i] << ',' << p.buyer_losses[i] << ','
          << p.stops[i] << '\n';
  os << out.str();
}

namespace {

double lattice_theta(const StateLattice& lat, const PathState& s) {
  switch (lat.theta_mode()) {
    case ThetaMode::none: return 0.0;
    case ThetaMode::log_price: return s.log_return;
    case ThetaMode::axis: return s.sum_sq;
  }
  return 0.0;
}

}  // namespace

Strategy lattice_strategy(std::string name, PricerTag tag, Side side, double price,
                          std::shared_ptr<const StateLattice> lattice, HedgePolicy hedge) {
  if (!lattice) throw ParameterError("lattice_strategy: no lattice");
  Strategy s;
  s.name = std::move(name);
  s.tag = tag;
  s.side = side;
  s.price = price;
  auto h = std::make_shared<const HedgePolicy>(std::move(hedge));
  s.position = [lattice, h](const PathState& st) {
    if (st.k == 0) return h->root;
    if (st.k >= static_cast<int>(h->zeta.size())) return 0.0;
    return lattice->interpolate(h->zeta[static_cast<std::size_t>(st.k)], st.price, lattice_theta(*lattice, st),
                                st.aux);
  };
  return s;
}

Strategy::ExerciseFn lattice_exercise(std::shared_ptr<const StateLattice> lattice,
                                      const AmericanSolution& buyer, const Payoff& payoff) {
  if (!lattice) throw ParameterError("lattice_exercise: no lattice");
  if (!payoff.is_american()) throw ParameterError("lattice_exercise: payoff has no exercise value");
  struct Data {
    std::vector<std::vector<double>> post, cont;
    bool root;
    int K;
    Payoff payoff;
  };
  auto d = std::make_shared<Data>();
  d->post = buyer.post_exercise.values;
  d->cont = buyer.continuation;
  d->root = buyer.exercise.root;
  d->K = static_cast<int>(buyer.value.values.size()) - 1;
  d->payoff = payoff;
  return [lattice, d](const PathState& st) {
    if (st.k == 0) return d->root;
    if (st.k >= d->K) return true;
    const auto k = static_cast<std::size_t>(st.k);
    const double th = lattice_theta(*lattice, st);
    const double post = lattice->interpolate(d->post[k], st.price, th, st.aux);
    const double cont = lattice->interpolate(d->cont[k], st.price, th, st.aux);
    return post - d->payoff.exercise_value(st.price, st.aux) <= cont;
  };
}

Strategy quote_strategy(std::string name, PricerTag tag, Side side, const BaselineQuote& quote) {
  if (!quote.delta) throw ParameterError("quote_strategy: quote has no delta rule");
  Strategy s;
  s.name = std::move(name);
  s.tag = tag;
  s.side = side;
  s.price = quote.price;
  const double sign = side == Side::writer ? 1.0 : -1.0;
  auto delta = quote.delta;
  s.position = [delta, sign](const PathState& st) { return sign * delta(st.k, st.price) * st.price; };
  if (side == Side::buyer && quote.exercise) {
    auto ex = quote.exercise;
    s.exercise = [ex](const PathState& st) { return ex(st.k, st.price); };
  }
  return s;
}

StrategyPair epsilon_pair(std::string name, std::shared_ptr<const StateLattice> lattice,
                          std::shared_ptr<const EpsilonSolution> solution) {
  if (!lattice || !solution) throw ParameterError("epsilon_pair: missing lattice or solution");
  StrategyPair p;
  p.name = name;
  auto position = [lattice, solution](const PathState& st, double wealth) {
    if (st.k == 0) return solution->root_zeta;
    return solution->zeta_at(*lattice, st.k, st.price, lattice_theta(*lattice, st), st.aux, wealth);
  };
  p.writer.name = name;
  p.writer.tag = PricerTag::epsilon;
  p.writer.side = Side::writer;
  p.writer.price = solution->price;
  p.writer.position = [position](const PathState& st) { return position(st, st.wealth); };
  p.buyer = p.writer;
  p.buyer.side = Side::buyer;
  p.buyer.position = [position](const PathState& st) { return -position(st, -st.wealth); };
  return p;
}

}  // namespace erp
