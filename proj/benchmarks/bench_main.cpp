#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "erp/baselines.hpp"
#include "erp/dp.hpp"
#include "erp/inner.hpp"
#include "erp/market.hpp"
#include "erp/uncertainty.hpp"

using namespace erp;

namespace {

void BM_InnerMinimax(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(-0.3, 0.3), c(-50.0, 50.0);
  std::vector<Line> lines(static_cast<std::size_t>(state.range(0)));
  for (auto& l : lines) l = {s(rng), c(rng)};
  lines[0].slope = -0.5;
  lines[1].slope = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(inner_minimax(lines));
}
BENCHMARK(BM_InnerMinimax)->Arg(8)->Arg(64)->Arg(512);

void BM_SimulatePaths(benchmark::State& state) {
  MarketParams m;
  m.periods = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(m, 10000, 7));
}
BENCHMARK(BM_SimulatePaths)->Arg(16)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_RobustEuropeanSolve(benchmark::State& state) {
  MarketParams m;
  m.periods = 16;
  const PathSet train = simulate_paths(m, 20000, 7);
  const UncertaintySpec spec = UncertaintySpec::u2(m, 0.004, 4);
  const Payoff call = Payoff::european_call(1000.0);
  LatticeOptions o;
  o.price_nodes = static_cast<int>(state.range(0));
  o.theta_nodes = 41;
  const StateLattice lat = StateLattice::build(spec, train, call, o);
  const auto model = TransitionModel::robust(spec);
  for (auto _ : state) benchmark::DoNotOptimize(solve_european_batch(model, {call}, lat));
}
BENCHMARK(BM_RobustEuropeanSolve)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_BlackScholes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(black_scholes_price(1000.0, 1000.0, 0.1283, 1.0, OptionType::call));
}
BENCHMARK(BM_BlackScholes);

void BM_BinomialAmerican(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(binomial_price(1000.0, 1000.0, 0.1283, 1.0, steps, OptionType::put, true));
}
BENCHMARK(BM_BinomialAmerican)->Arg(225)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
