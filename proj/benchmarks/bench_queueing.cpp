#include <benchmark/benchmark.h>

#include "fleetsim/queueing.hpp"

namespace {

void BM_ErlangC(benchmark::State& state) {
  const auto c = static_cast<std::int64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fleetsim::erlang_c_delay_prob(c, 0.95));
  }
}
BENCHMARK(BM_ErlangC)->Arg(10)->Arg(1000)->Arg(1000000);

void BM_PoissonCdfLargeMean(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(fleetsim::poisson_cdf(999999, 999000.0));
  }
}
BENCHMARK(BM_PoissonCdfLargeMean);

void BM_FluidRecursion(benchmark::State& state) {
  const fleetsim::PickupModel model = fleetsim::spatial_pickup_model(63.92, 1.0, 1.27, 25.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fleetsim::fluid_recursion(1000, 0.22, model, 300, 60, 6 * 3600).min_v);
  }
}
BENCHMARK(BM_FluidRecursion);

}  // namespace
