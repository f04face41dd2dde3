#include <vector>

#include <benchmark/benchmark.h>

#include "tandem/ctmc.hpp"
#include "tandem/mdp.hpp"
#include "tandem/qbd.hpp"
#include "tandem/simulation.hpp"
#include "tandem/static_pricing.hpp"

namespace {

tandem::MarketModel market() {
  std::vector<double> prices;
  for (int a = 350; a <= 750; a += 50) prices.push_back(a);
  return {3.6, tandem::ReservationDistribution::normal(500, 50), prices};
}

void BM_StationarySolve(benchmark::State& state) {
  const int b1 = static_cast<int>(state.range(0));
  const tandem::SystemConfig cfg({8, 8}, {b1, 5});
  const tandem::StateSpace space(cfg.buffers());
  const auto m = market();
  const auto policy = tandem::PricingPolicy::constant(space.size(), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tandem::solve_steady_state(space, policy, m, cfg).gain);
  }
  state.counters["states"] = static_cast<double>(space.size());
}
BENCHMARK(BM_StationarySolve)->Arg(5)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_PolicyIteration(benchmark::State& state) {
  const int b1 = static_cast<int>(state.range(0));
  const tandem::SystemConfig cfg({8, 8}, {b1, 0});
  const tandem::StateSpace space(cfg.buffers());
  const auto mdp = tandem::uniformize(space, market(), cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tandem::policy_iteration(mdp).gain);
  }
  state.counters["states"] = static_cast<double>(space.size());
}
BENCHMARK(BM_PolicyIteration)->Arg(10)->Arg(50)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_BoundConstants(benchmark::State& state) {
  const std::vector<double> mu(static_cast<std::size_t>(state.range(0)), 8.0 * state.range(0) / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tandem::bound_constants(3.24, mu).c);
  }
}
BENCHMARK(BM_BoundConstants)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_CouplingPath(benchmark::State& state) {
  const std::vector<double> mu{8, 8};
  const std::vector<int> buffers{5, 5};
  const auto p = tandem::generate_primitives(1, 10000, 1.324, mu);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tandem::verify_coupling(p, buffers).passed);
  }
}
BENCHMARK(BM_CouplingPath)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
