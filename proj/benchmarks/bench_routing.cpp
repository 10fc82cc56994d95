#include <benchmark/benchmark.h>

#include "fleetsim/rng.hpp"
#include "fleetsim/road_network.hpp"

namespace {

void BM_AStarGrid(benchmark::State& state) {
  const auto side = static_cast<int>(state.range(0));
  const fleetsim::RoadNetwork grid = fleetsim::generate_grid(side, side, 205, 25);
  fleetsim::Rng rng(12);
  const auto n = static_cast<std::int64_t>(grid.nodes.size());
  for (auto _ : state) {
    const std::int64_t a = grid.nodes[rng.uniform_int(n)].id;
    std::int64_t b = grid.nodes[rng.uniform_int(n)].id;
    if (b == a) b = grid.nodes[(grid.node_index(a) + 1) % grid.nodes.size()].id;
    benchmark::DoNotOptimize(fleetsim::shortest_path(grid, a, b).total_time_s);
  }
}
BENCHMARK(BM_AStarGrid)->Arg(10)->Arg(20)->Arg(40);

void BM_Circuity(benchmark::State& state) {
  const fleetsim::RoadNetwork grid = fleetsim::generate_grid(20, 20, 205, 25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fleetsim::estimate_circuity(grid, 100, 3));
  }
}
BENCHMARK(BM_Circuity);

}  // namespace
