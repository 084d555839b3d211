#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "erp/errors.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace erp;
using namespace erp::app;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

RunConfig resolve(const Common& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  fs::create_directories(c.out_dir);
  return c;
}

void write_file(const RunConfig& c, const std::string& name, const std::string& text) {
  const fs::path p = fs::path(c.out_dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  std::cout << "wrote " << p.string() << '\n';
}

void write_json(const RunConfig& c, const std::string& name, const nlohmann::json& j) {
  write_file(c, name, j.dump(2) + "\n");
}

void warn_if_not_invariant(const RunConfig& c) {
  if (!c.risk.translation_invariant())
    std::cerr << "warning: risk mapping " << c.risk.to_string()
              << " is not translation invariant; the ERP is found by bisection on the premium\n";
}

nlohmann::json calibration_json(const RunConfig& c, const PathSet& train) {
  if (c.risk.kind != RiskKind::worst_case) return nullptr;
  const Calibration cal = calibrate(c, train);
  nlohmann::json j;
  if (cal.result) {
    j = to_json(*cal.result, cal.spec);
  } else {
    j = {{"kind", to_string(cal.spec.kind)}, {"partitions", cal.spec.partitions}};
    j["gamma"] = cal.spec.kind == UncertaintyKind::box ? nlohmann::json(nullptr) : nlohmann::json(cal.spec.gamma);
  }
  j["coverage"] = c.uncertainty.coverage;
  return j;
}

std::string paths_csv(const PathSet& p) {
  std::ostringstream os;
  write_paths_csv(os, p);
  return os.str();
}

void write_backtest(const RunConfig& c, const BacktestReport& r) {
  std::ostringstream m;
  write_metrics_csv(m, r);
  write_file(c, "backtest_metrics.csv", m.str());
  if (c.dump_losses) {
    std::ostringstream l;
    write_losses_csv(l, r);
    write_file(c, "backtest_losses.csv", l.str());
  }
}

nlohmann::json backtest_json(const BacktestReport& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const PairResult& p : r.pairs) {
    nlohmann::json j{{"strategy", p.name}, {"price", p.price}, {"paths", p.paths}, {"excluded", p.excluded}};
    for (const MetricRow& row : p.metrics)
      j["metrics"].push_back({{"rank", rank_label(row.rank)},
                              {"writer", row.writer_quantile},
                              {"buyer", row.buyer_quantile},
                              {"avg", row.avg},
                              {"diff", row.diff}});
    out.push_back(j);
  }
  return out;
}

int run(const std::string& cmd, const Common& o) {
  const RunConfig c = resolve(o);
  if (cmd == "simulate") {
    write_file(c, "train_paths.csv", paths_csv(train_paths(c)));
    write_file(c, "test_paths.csv", paths_csv(test_paths(c)));
  } else if (cmd == "calibrate") {
    write_json(c, "calibration.json", calibration_json(c, train_paths(c)));
  } else if (cmd == "price") {
    warn_if_not_invariant(c);
    const Solved s = price(c, train_paths(c));
    write_json(c, "price_report.json", to_json(s.report));
    write_file(c, "price_report.csv", pricing_csv(s.report));
  } else if (cmd == "epsilon-price") {
    write_json(c, "epsilon_report.json", to_json(epsilon_price(c, train_paths(c))));
  } else if (cmd == "baseline") {
    write_json(c, "baseline.json", to_json(baselines(c)));
  } else if (cmd == "backtest") {
    warn_if_not_invariant(c);
    write_backtest(c, backtest(c, train_paths(c), test_paths(c)));
  } else if (cmd == "report") {
    warn_if_not_invariant(c);
    const PathSet train = train_paths(c);
    const Solved s = price(c, train);
    write_json(c, "price_report.json", to_json(s.report));
    write_file(c, "price_report.csv", pricing_csv(s.report));
    const BacktestReport b = backtest(c, train, test_paths(c), s);
    write_backtest(c, b);
    nlohmann::json j;
    j["config"] = emit_config(c);
    j["calibration"] = calibration_json(c, train);
    j["price"] = to_json(s.report);
    if (c.payoff.type == "call" || c.payoff.type == "put") j["baseline"] = to_json(baselines(c));
    j["backtest"] = backtest_json(b);
    write_json(c, "report.json", j);
  } else if (cmd == "schema") {
    for (const ConfigKey& k : config_schema()) std::cout << k.key << " = " << k.value << "  # " << k.help << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equal-risk option pricing and hedging backtests"};
  app.require_subcommand(1);
  Common o;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Write train and test return paths"},
      {"calibrate", "Calibrate the uncertainty budget on the train paths"},
      {"price", "Equal-risk price and fair price interval"},
      {"epsilon-price", "Minimax replication price over the uncertainty set"},
      {"baseline", "Black-Scholes and binomial prices"},
      {"backtest", "Replay hedging strategies on the test paths"},
      {"report", "Price, baselines and backtest in one run"},
      {"schema", "Print every config key with its default"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override simulation.seed");
    sub->add_option("--out", o.out, "Override output.dir");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, o);
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
