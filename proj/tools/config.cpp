#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "erp/dp.hpp"
#include "erp/errors.hpp"

namespace erp::app {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParameterError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParameterError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define ERP_DOUBLE(KEY, MEMBER, HELP)                                            \
  Field{KEY, HELP, [](const RunConfig& c) { return fmt(c.MEMBER); },             \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); }}
#define ERP_INT(KEY, MEMBER, TYPE, HELP)                                         \
  Field{KEY, HELP, [](const RunConfig& c) { return std::to_string(c.MEMBER); },  \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_int<TYPE>(KEY, v); }}
#define ERP_BOOL(KEY, MEMBER, HELP)                                               \
  Field{KEY, HELP, [](const RunConfig& c) { return c.MEMBER ? "true" : "false"; }, \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_bool(KEY, v); }}
#define ERP_STRING(KEY, MEMBER, HELP)                                 \
  Field{KEY, HELP, [](const RunConfig& c) { return c.MEMBER; },       \
        [](RunConfig& c, const std::string& v) { c.MEMBER = v; }}
#define ERP_LIST(KEY, MEMBER, HELP)                                    \
  Field{KEY, HELP, [](const RunConfig& c) { return join(c.MEMBER); },  \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_list(v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      ERP_DOUBLE("market.mu", market.mu, "annual drift"),
      ERP_DOUBLE("market.sigma", market.sigma, "annual volatility"),
      ERP_DOUBLE("market.s0", market.s0, "initial price"),
      ERP_DOUBLE("market.maturity", market.maturity, "maturity in years"),
      ERP_INT("market.periods", market.periods, int, "rebalancing periods K"),
      ERP_STRING("payoff.type", payoff.type, "call | put | running_max_call | asian_call | constant"),
      Field{"payoff.style", "european | american",
            [](const RunConfig& c) { return c.payoff.style == OptionStyle::american ? "american" : "european"; },
            [](RunConfig& c, const std::string& v) {
              if (v == "european") c.payoff.style = OptionStyle::european;
              else if (v == "american") c.payoff.style = OptionStyle::american;
              else throw ParameterError("config: payoff.style must be european or american");
            }},
      ERP_DOUBLE("payoff.strike", payoff.strike, "strike"),
      ERP_DOUBLE("payoff.amount", payoff.amount, "payout of a constant payoff"),
      Field{"risk.mapping", "worst_case | expectation | cvar:B | mean_semidev:K:R | mean_cvar:K:B",
            [](const RunConfig& c) { return c.risk.to_string(); },
            [](RunConfig& c, const std::string& v) { c.risk = RiskMapping::parse(v); }},
      ERP_INT("risk.atoms", risk_atoms, int, "return atoms per period for probabilistic mappings"),
      Field{"uncertainty.kind", "u2 | u1prime | box",
            [](const RunConfig& c) { return to_string(c.uncertainty.kind); },
            [](RunConfig& c, const std::string& v) { c.uncertainty.kind = parse_uncertainty_kind(v); }},
      Field{"uncertainty.gamma", "budget; empty means calibrate to the coverage target",
            [](const RunConfig& c) { return c.uncertainty.gamma ? fmt(*c.uncertainty.gamma) : std::string(); },
            [](RunConfig& c, const std::string& v) {
              if (v.empty()) c.uncertainty.gamma.reset();
              else c.uncertainty.gamma = to_double("uncertainty.gamma", v);
            }},
      ERP_DOUBLE("uncertainty.coverage", uncertainty.coverage, "fraction of train paths the set must contain"),
      ERP_INT("uncertainty.partitions", uncertainty.partitions, int, "u2 blocks S; 0 picks a divisor near sqrt(K)"),
      ERP_DOUBLE("uncertainty.box_lower", uncertainty.box_lower, "box: lowest per-period return"),
      ERP_DOUBLE("uncertainty.box_upper", uncertainty.box_upper, "box: highest per-period return"),
      ERP_INT("lattice.price_nodes", price_nodes, int, "price grid size"),
      ERP_INT("lattice.theta_nodes", theta_nodes, int, "u2 squared-return grid size"),
      ERP_INT("lattice.aux_nodes", aux_nodes, int, "path-dependent aux grid size"),
      ERP_BOOL("solver.include_outside_nodes", include_outside_nodes, "also try the node past each interval end"),
      ERP_BOOL("solver.extend_outside_states", extend_outside_states, "off-set nodes move like the nearest admissible state"),
      ERP_BOOL("solver.verify_post_exercise", verify_post_exercise, "solve and check the post-exercise slice"),
      ERP_LIST("american.modes", american_modes, "writer models: commit, no_commit"),
      ERP_INT("epsilon.wealth_nodes", wealth_nodes, int, "wealth grid size"),
      ERP_DOUBLE("epsilon.wealth_half_width", wealth_half_width, "wealth grid half width as a fraction of s0"),
      ERP_BOOL("epsilon.in_price", price_epsilon, "also run the epsilon DP in `price`"),
      ERP_INT("baseline.binomial_steps", binomial_steps, int, "CRR tree steps"),
      ERP_INT("simulation.train_paths", train_paths, std::size_t, "train paths"),
      ERP_INT("simulation.test_paths", test_paths, std::size_t, "test paths"),
      ERP_INT("simulation.seed", seed, std::uint64_t, "RNG seed"),
      ERP_STRING("simulation.train_file", train_file, "CSV of train paths; empty means simulate"),
      ERP_LIST("backtest.strategies", strategies, "erp, bs, binomial, epsilon"),
      ERP_BOOL("backtest.dump_losses", dump_losses, "also write per-path losses"),
      ERP_STRING("output.dir", out_dir, "output directory"),
      ERP_INT("threads", threads, int, "worker threads; 0 uses the hardware count"),
  };
  return f;
}

#undef ERP_DOUBLE
#undef ERP_INT
#undef ERP_BOOL
#undef ERP_STRING
#undef ERP_LIST

}  // namespace

void RunConfig::validate() const {
  market.validate();
  static const std::vector<std::string> types = {"call", "put", "running_max_call", "asian_call", "constant"};
  if (std::find(types.begin(), types.end(), payoff.type) == types.end())
    throw ParameterError("config: unknown payoff.type '" + payoff.type + "'");
  if (payoff.style == OptionStyle::american && payoff.type != "call" && payoff.type != "put")
    throw ParameterError("config: american style needs a call or put");
  if (payoff.type != "constant" && !(payoff.strike > 0.0)) throw ParameterError("config: payoff.strike must be > 0");
  risk.validate();
  if (risk_atoms < 1) throw ParameterError("config: risk.atoms must be >= 1");
  if (!(uncertainty.coverage > 0.0 && uncertainty.coverage <= 1.0))
    throw ParameterError("config: uncertainty.coverage must lie in (0, 1]");
  if (uncertainty.partitions < 0) throw ParameterError("config: uncertainty.partitions must be >= 0");
  if (uncertainty.kind == UncertaintyKind::u2 && uncertainty.partitions > 0 &&
      market.periods % uncertainty.partitions != 0)
    throw ParameterError("config: market.periods must be divisible by uncertainty.partitions");
  if (uncertainty.kind == UncertaintyKind::box && !(uncertainty.box_lower < uncertainty.box_upper))
    throw ParameterError("config: box needs box_lower < box_upper");
  if (uncertainty.gamma && !(*uncertainty.gamma >= 0.0)) throw ParameterError("config: gamma must be >= 0");
  if (price_nodes < 2 || theta_nodes < 2 || aux_nodes < 2) throw ParameterError("config: lattice sizes must be >= 2");
  for (const auto& m : american_modes) parse_american_mode(m);
  if (wealth_nodes < 3) throw ParameterError("config: epsilon.wealth_nodes must be >= 3");
  if (!(wealth_half_width > 0.0)) throw ParameterError("config: epsilon.wealth_half_width must be > 0");
  if (binomial_steps < 1) throw ParameterError("config: baseline.binomial_steps must be >= 1");
  if (train_paths == 0 && train_file.empty() && uncertainty.kind != UncertaintyKind::box)
    throw ParameterError("config: simulation.train_paths must be > 0");
  static const std::vector<std::string> known = {"erp", "erp_robust", "erp_risk", "bs", "binomial", "epsilon"};
  for (const auto& s : strategies)
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw ParameterError("config: unknown strategy '" + s + "'");
  if (out_dir.empty()) throw ParameterError("config: output.dir must not be empty");
  if (threads < 0) throw ParameterError("config: threads must be >= 0");
}

RunConfig parse_config(std::istream& is) {
  std::map<std::string, const Field*> index;
  for (const Field& f : fields()) index[f.key] = &f;
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ParameterError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second->set(c, value);
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::string emit_config(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<ConfigKey> config_schema() {
  const RunConfig def;
  std::vector<ConfigKey> out;
  for (const Field& f : fields()) out.push_back({f.key, f.get(def), f.help});
  return out;
}

}  // namespace erp::app
