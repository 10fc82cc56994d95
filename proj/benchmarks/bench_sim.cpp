#include <benchmark/benchmark.h>

#include "fleetsim/demand.hpp"
#include "fleetsim/sim_engine.hpp"

namespace {

// One full 15-minute run on a mid-size grid per iteration.
void BM_SimulationRun(benchmark::State& state) {
  const fleetsim::RoadNetwork grid = fleetsim::generate_grid(20, 20, 205, 25);
  const auto times = fleetsim::sample_arrival_times(600, 0.25, 5);
  const auto pairs = fleetsim::sample_od_uniform(grid, 6, static_cast<int>(times.size()));
  const auto requests = fleetsim::make_requests(times, pairs);
  fleetsim::SimConfig cfg;
  cfg.horizon_s = 900;
  cfg.fleet_size = static_cast<int>(state.range(0));
  cfg.rng_seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fleetsim::run_simulation(grid, requests, cfg).summary.served);
  }
}
BENCHMARK(BM_SimulationRun)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
