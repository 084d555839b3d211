#include "erp/market.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <locale>
#include <ostream>
#include <random>
#include <sstream>

#include "erp/errors.hpp"
#include "parallel.hpp"

namespace erp {

void MarketParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("market: sigma must be > 0");
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw ParameterError("market: s0 must be > 0");
  if (!(maturity > 0.0) || !std::isfinite(maturity))
    throw ParameterError("market: maturity must be > 0");
  if (periods < 1) throw ParameterError("market: periods must be >= 1");
  if (!std::isfinite(mu)) throw ParameterError("market: mu must be finite");
}

std::string to_string(PathRole role) { return role == PathRole::train ? "train" : "test"; }

int PathSet::periods() const {
  return paths.empty() ? 0 : static_cast<int>(paths.front().size());
}

namespace {

std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace

PathSet simulate_paths(const MarketParams& params, std::size_t n, std::uint64_t seed,
                       PathRole role, std::size_t first_index) {
  params.validate();
  if (n < 1) throw ParameterError("simulate_paths: n must be >= 1");
  const double mean = params.mu * params.dt();
  const double stdev = params.sigma * std::sqrt(params.dt());
  PathSet set;
  set.seed = seed;
  set.role = role;
  set.paths.resize(n);
  detail::parallel_for(n, 0, [&](std::size_t i) {
    auto rng = path_stream(seed, first_index + i);
    std::normal_distribution<double> normal(mean, stdev);
    auto& r = set.paths[i].returns;
    r.resize(static_cast<std::size_t>(params.periods));
    for (auto& v : r) v = std::expm1(normal(rng));
  });
  return set;
}

TrainTestSplit simulate_split(const MarketParams& params, std::size_t n_train, std::size_t n_test,
                              std::uint64_t seed) {
  TrainTestSplit out;
  out.train = simulate_paths(params, n_train, seed, PathRole::train, 0);
  out.test = simulate_paths(params, n_test, seed, PathRole::test, n_train);
  return out;
}

std::vector<double> price_path(double s0, const ReturnPath& path) {
  if (!(s0 > 0.0)) throw ParameterError("price_path: s0 must be > 0");
  std::vector<double> prices(path.size() + 1);
  prices[0] = s0;
  for (std::size_t k = 0; k < path.size(); ++k) prices[k + 1] = prices[k] * (1.0 + path[k]);
  return prices;
}

ReturnPath returns_from_prices(std::span<const double> prices) {
  ReturnPath path;
  if (prices.size() < 2) return path;
  path.returns.resize(prices.size() - 1);
  for (std::size_t k = 1; k < prices.size(); ++k)
    path.returns[k - 1] = prices[k] / prices[k - 1] - 1.0;
  return path;
}

void write_paths_csv(std::ostream& os, const PathSet& set) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(17);
  const int k_max = set.periods();
  for (int k = 1; k <= k_max; ++k) buf << (k > 1 ? "," : "") << "r_" << k;
  buf << '\n';
  for (const auto& p : set.paths) {
    for (std::size_t k = 0; k < p.size(); ++k) buf << (k ? "," : "") << p[k];
    buf << '\n';
  }
  os << buf.str();
}

PathSet read_paths_csv(std::istream& is, PathRole role) {
  PathSet set;
  set.role = role;
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("read_paths_csv: missing header");
  const auto k_max = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream fields(line);
    fields.imbue(std::locale::classic());
    ReturnPath p;
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      std::istringstream cs(cell);
      cs.imbue(std::locale::classic());
      double v = 0.0;
      if (!(cs >> v)) throw ParameterError("read_paths_csv: bad number on row " + std::to_string(row));
      if (!(v > -1.0)) throw ParameterError("read_paths_csv: return <= -1 on row " + std::to_string(row));
      p.returns.push_back(v);
    }
    if (p.size() != k_max)
      throw ParameterError("read_paths_csv: row " + std::to_string(row) + " has wrong length");
    set.paths.push_back(std::move(p));
  }
  return set;
}

double Payoff::exercise_value(double price, double aux) const {
  if (!intermediate) throw ParameterError("payoff '" + name + "' has no intermediate exercise value");
  return intermediate(price, aux);
}

Payoff Payoff::european_call(double strike) {
  Payoff p;
  p.kind = PayoffKind::call;
  p.strike = strike;
  p.name = "call";
  p.terminal = [strike](double s, double) { return std::max(s - strike, 0.0); };
  return p;
}

Payoff Payoff::european_put(double strike) {
  Payoff p;
  p.kind = PayoffKind::put;
  p.strike = strike;
  p.name = "put";
  p.terminal = [strike](double s, double) { return std::max(strike - s, 0.0); };
  return p;
}

Payoff Payoff::american_call(double strike) {
  Payoff p = european_call(strike);
  p.name = "american_call";
  p.intermediate = p.terminal;
  return p;
}

Payoff Payoff::american_put(double strike) {
  Payoff p = european_put(strike);
  p.name = "american_put";
  p.intermediate = p.terminal;
  return p;
}

Payoff Payoff::running_max_call(double strike) {
  Payoff p;
  p.kind = PayoffKind::custom;
  p.strike = strike;
  p.name = "max_call";
  p.terminal = [strike](double, double y) { return std::max(y - strike, 0.0); };
  p.aux_update = [](double y, double s, double r) { return std::max(y, s * (1.0 + r)); };
  p.aux_initial = 0.0;
  return p;
}

Payoff Payoff::asian_call(double strike, int periods) {
  if (periods < 1) throw ParameterError("asian_call: periods must be >= 1");
  Payoff p;
  p.kind = PayoffKind::custom;
  p.strike = strike;
  p.name = "asian_call";
  const double inv_n = 1.0 / periods;
  p.terminal = [strike](double, double y) { return std::max(y - strike, 0.0); };
  p.aux_update = [inv_n](double y, double s, double r) { return y + inv_n * s * (1.0 + r); };
  p.aux_initial = 0.0;
  return p;
}

Payoff Payoff::constant(double amount) {
  Payoff p;
  p.kind = PayoffKind::custom;
  p.name = "constant";
  p.terminal = [amount](double, double) { return amount; };
  return p;
}

Payoff Payoff::shifted(Payoff base, double amount) {
  Payoff p = base;
  p.kind = PayoffKind::custom;
  p.name = base.name + "+const";
  p.terminal = [f = base.terminal, amount](double s, double y) { return f(s, y) + amount; };
  if (base.intermediate)
    p.intermediate = [f = base.intermediate, amount](double s, double y) { return f(s, y) + amount; };
  return p;
}

double evaluate_payoff(const Payoff& payoff, std::span<const double> prices, std::optional<int> at) {
  if (prices.empty()) throw ParameterError("evaluate_payoff: empty price path");
  const int last = static_cast<int>(prices.size()) - 1;
  const int k = at.value_or(last);
  if (k < 0 || k > last) throw ParameterError("evaluate_payoff: date out of range");
  double y = payoff.aux_initial;
  for (int j = 0; j < k; ++j) y = payoff.next_aux(y, prices[j], prices[j + 1] / prices[j] - 1.0);
  if (k == last) return payoff.terminal_value(prices[k], y);
  return payoff.exercise_value(prices[k], y);
}

}  // namespace erp
