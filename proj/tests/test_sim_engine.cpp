#include <algorithm>

#include "doctest.h"
#include "fleetsim/demand.hpp"
#include "fleetsim/errors.hpp"
#include "fleetsim/queueing.hpp"
#include "fleetsim/sim_engine.hpp"
#include "support/tmpdir.hpp"

using namespace fleetsim;

namespace {

std::vector<TripRequest> grid_demand(const RoadNetwork& net, double lambda_per_h,
                                     double horizon_h, std::uint64_t seed) {
  const auto times = sample_arrival_times(lambda_per_h, horizon_h, seed);
  const auto pairs = sample_od_uniform(net, seed + 1, static_cast<int>(times.size()));
  return make_requests(times, pairs);
}

}  // namespace

TEST_CASE("quiescent system stays quiet") {
  const RoadNetwork grid = generate_grid(4, 4, 100, 30);
  SimConfig cfg;
  cfg.horizon_s = 100;
  cfg.fleet_size = 10;
  cfg.rng_seed = 5;
  const SimResult r = run_simulation(grid, {}, cfg);
  REQUIRE(r.trace.n_steps() == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(r.trace.queue_length[i] == 0);
    CHECK(r.trace.idle_count[i] == 10);
    CHECK(r.trace.busy_count[i] == 0);
  }
  for (const VehicleRecord& v : r.trace.vehicles) {
    CHECK(v.odometer_m == 0.0);
    CHECK(v.trips_served == 0);
  }
  CHECK(r.summary.served == 0);
  CHECK_THROWS_AS(empirical_service_params(r), ValidationError);
}

TEST_CASE("co-located request is served with zero waits") {
  // straight 3-node chain, vehicle parked on the origin
  std::vector<RoadNode> nodes{{0, 0, 0}, {1, 100, 0}, {2, 200, 0}};
  std::vector<RoadLink> links;
  for (int i = 0; i < 2; ++i) {
    links.push_back({i, i + 1, 100, 36, HighwayClass::Other, 36});
    links.push_back({i + 1, i, 100, 36, HighwayClass::Other, 36});
  }
  const RoadNetwork chain =
      finalize_network(CoordinateSystem::PlanarM, std::move(nodes), std::move(links));

  SimConfig cfg;
  cfg.horizon_s = 120;
  cfg.fleet_size = 1;
  cfg.vehicle_init = VehicleInit::Listed;
  cfg.vehicle_nodes = {0};
  const std::vector<TripRequest> requests{{1, 0.0, 0, 2, 1}};
  const SimResult r = run_simulation(chain, requests, cfg);

  REQUIRE(r.trace.travellers.size() == 1);
  const TravellerRecord& t = r.trace.travellers[0];
  CHECK(t.served);
  CHECK(t.assignment_wait_s == 0.0);
  CHECK(t.pickup_wait_s == 0.0);
  // 200 m at 36 km/h is a 20 s trip
  CHECK(*t.trip_time_s == doctest::Approx(20.0).epsilon(0.05));
  CHECK(r.summary.served == 1);
}

TEST_CASE("dwell times flow into the waits") {
  std::vector<RoadNode> nodes{{0, 0, 0}, {1, 100, 0}, {2, 200, 0}};
  std::vector<RoadLink> links;
  for (int i = 0; i < 2; ++i) {
    links.push_back({i, i + 1, 100, 36, HighwayClass::Other, 36});
    links.push_back({i + 1, i, 100, 36, HighwayClass::Other, 36});
  }
  const RoadNetwork chain =
      finalize_network(CoordinateSystem::PlanarM, std::move(nodes), std::move(links));

  SimConfig cfg;
  cfg.horizon_s = 300;
  cfg.fleet_size = 1;
  cfg.vehicle_init = VehicleInit::Listed;
  cfg.vehicle_nodes = {0};
  cfg.dwell_load_s = 30;
  cfg.dwell_unload_s = 10;
  const std::vector<TripRequest> requests{{1, 0.0, 0, 2, 1}};
  const SimResult r = run_simulation(chain, requests, cfg);

  REQUIRE(r.trace.travellers.size() == 1);
  const TravellerRecord& t = r.trace.travellers[0];
  REQUIRE(t.served);
  // boarding dwell lands in the pickup wait, alighting dwell in the trip time
  CHECK(*t.pickup_wait_s == doctest::Approx(30.0).epsilon(0.05));
  CHECK(*t.trip_time_s == doctest::Approx(20.0 + 10.0).epsilon(0.05));
}

TEST_CASE("determinism: identical inputs give identical results") {
  const RoadNetwork grid = generate_grid(8, 8, 150, 30);
  const auto requests = grid_demand(grid, 300, 0.25, 77);
  SimConfig cfg;
  cfg.horizon_s = 1800;
  cfg.fleet_size = 12;
  cfg.rng_seed = 99;

  const SimResult a = run_simulation(grid, requests, cfg);
  const SimResult b = run_simulation(grid, requests, cfg);
  CHECK(a.trace.queue_length == b.trace.queue_length);
  CHECK(a.trace.idle_count == b.trace.idle_count);
  CHECK(a.trace.assignments == b.trace.assignments);
  REQUIRE(a.trace.travellers.size() == b.trace.travellers.size());
  for (std::size_t i = 0; i < a.trace.travellers.size(); ++i) {
    CHECK(a.trace.travellers[i].assignment_wait_s == b.trace.travellers[i].assignment_wait_s);
    CHECK(a.trace.travellers[i].pickup_wait_s == b.trace.travellers[i].pickup_wait_s);
    CHECK(a.trace.travellers[i].trip_time_s == b.trace.travellers[i].trip_time_s);
  }
  for (std::size_t i = 0; i < a.trace.vehicles.size(); ++i) {
    CHECK(a.trace.vehicles[i].odometer_m == b.trace.vehicles[i].odometer_m);
  }
}

TEST_CASE("step identities on a busy run") {
  const RoadNetwork grid = generate_grid(10, 10, 150, 30);
  const auto requests = grid_demand(grid, 400, 0.5, 13);
  SimConfig cfg;
  cfg.horizon_s = 1800;
  cfg.fleet_size = 15;
  cfg.rng_seed = 3;
  const SimResult r = run_simulation(grid, requests, cfg);

  int prev_queue = 0;
  for (std::size_t i = 0; i < r.trace.n_steps(); ++i) {
    CHECK(r.trace.idle_count[i] + r.trace.busy_count[i] == cfg.fleet_size);
    CHECK(r.trace.queue_length[i] ==
          prev_queue + r.trace.arrivals[i] - r.trace.assignments[i]);
    CHECK(r.trace.queue_length[i] >= 0);
    prev_queue = r.trace.queue_length[i];
  }
  CHECK(r.summary.served + r.summary.in_flight + r.summary.unserved ==
        r.summary.total_requests);
}

TEST_CASE("wait ordering holds for every served traveller") {
  const RoadNetwork grid = generate_grid(10, 10, 150, 30);
  const auto requests = grid_demand(grid, 300, 0.5, 29);
  SimConfig cfg;
  cfg.horizon_s = 2400;
  cfg.fleet_size = 20;
  cfg.rng_seed = 11;
  const SimResult r = run_simulation(grid, requests, cfg);
  CHECK(r.summary.served > 0);
  for (const TravellerRecord& t : r.trace.travellers) {
    if (t.assignment_wait_s) CHECK(*t.assignment_wait_s >= 0.0);
    if (t.pickup_wait_s) CHECK(*t.pickup_wait_s >= 0.0);
    if (t.served) {
      CHECK(*t.t_assigned_s <= *t.t_pickup_s);
      CHECK(*t.t_pickup_s <= *t.t_dropoff_s);
    }
  }
}

TEST_CASE("far above critical the queue never backs up") {
  const RoadNetwork grid = generate_grid(10, 10, 150, 30);
  const auto requests = grid_demand(grid, 200, 0.5, 57);
  SimConfig cfg;
  cfg.horizon_s = 1800;
  cfg.fleet_size = 120;
  cfg.rng_seed = 4;
  const SimResult r = run_simulation(grid, requests, cfg);
  // arrivals are assigned within their own step from the second half onward
  for (std::size_t i = r.trace.n_steps() / 2; i < r.trace.n_steps(); ++i) {
    CHECK(r.trace.queue_length[i] <= 1);
  }
}

TEST_CASE("empirical_service_params from a synthetic trace") {
  SimResult r;
  r.config.horizon_s = 3600;
  r.config.tail_window_fraction = 1.0 / 3.0;
  r.trace.dt_s = 1.0;
  r.trace.queue_length.assign(3600, 0);
  r.trace.arrivals.assign(3600, 0);
  r.trace.arrivals[0] = 100;
  for (int i = 0; i < 10; ++i) {
    TravellerRecord t;
    t.id = i;
    t.served = true;
    t.t_assigned_s = 3000.0 + i;
    t.t_pickup_s = *t.t_assigned_s + 120.0;  // constant 120 s pickup wait
    t.t_dropoff_s = *t.t_pickup_s + 600.0;
    t.assignment_wait_s = 0.0;
    t.pickup_wait_s = 120.0;
    t.trip_time_s = 600.0;
    r.trace.travellers.push_back(t);
  }
  const ServiceParams p = empirical_service_params(r);
  CHECK(p.t_bar_p_h == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  CHECK(p.t_bar_h == doctest::Approx(600.0 / 3600.0).epsilon(1e-12));
  CHECK(p.lambda_per_h == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("stable run pickup waits track the spatial model at steady-state V") {
  // 20x20 grid with comfortable slack; compare the measured steady pickup
  // wait against the model evaluated at the measured mean idle count
  const RoadNetwork grid = generate_grid(20, 20, 205, 25);
  const auto requests = grid_demand(grid, 300, 1.0, 101);
  SimConfig cfg;
  cfg.horizon_s = 3600;
  cfg.fleet_size = 110;
  cfg.rng_seed = 8;
  const SimResult r = run_simulation(grid, requests, cfg);
  REQUIRE(r.summary.served > 100);

  const double tail_start = cfg.horizon_s * 2.0 / 3.0;
  double v_sum = 0;
  std::size_t v_n = 0;
  for (std::size_t i = static_cast<std::size_t>(tail_start); i < r.trace.n_steps(); ++i) {
    v_sum += r.trace.idle_count[i];
    ++v_n;
  }
  const double v_steady = v_sum / static_cast<double>(v_n);
  REQUIRE(v_steady > 1.0);

  const double phi = estimate_circuity(grid, 300, 9);
  const double tp_model_h =
      pickup_wait_h(network_area_km2(grid), 1.0, v_steady, phi, grid.mean_effective_speed_kmh);
  const ServiceParams p = empirical_service_params(r);
  CHECK(p.t_bar_p_h == doctest::Approx(tp_model_h).epsilon(0.25));
}

TEST_CASE("lon/lat networks run end to end") {
  // 3x3 grid around the equator, roughly 222 m blocks
  const double step_deg = 0.002;
  const double block_m = haversine_m(0, 0, step_deg, 0);
  std::vector<RoadNode> nodes;
  std::vector<RoadLink> links;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      nodes.push_back({r * 3 + c, c * step_deg, r * step_deg});
    }
  }
  auto both = [&](std::int64_t a, std::int64_t b) {
    links.push_back({a, b, block_m, 30, HighwayClass::Residential, 30});
    links.push_back({b, a, block_m, 30, HighwayClass::Residential, 30});
  };
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const std::int64_t id = r * 3 + c;
      if (c + 1 < 3) both(id, id + 1);
      if (r + 1 < 3) both(id, id + 3);
    }
  }
  const RoadNetwork net =
      finalize_network(CoordinateSystem::LonLat, std::move(nodes), std::move(links));

  SimConfig cfg;
  cfg.horizon_s = 600;
  cfg.fleet_size = 3;
  cfg.rng_seed = 6;
  const std::vector<TripRequest> requests{{1, 2.0, 0, 8, 1}, {2, 30.0, 6, 2, 1}};
  const SimResult r = run_simulation(net, requests, cfg);
  CHECK(r.summary.served == 2);
  // four blocks of ~222 m at 30 km/h is ~107 s
  CHECK(*r.trace.travellers[0].trip_time_s ==
        doctest::Approx(4 * block_m / (30 / 3.6)).epsilon(0.03));
}

TEST_CASE("result files round trip") {
  testing::TmpDir tmp;
  const RoadNetwork grid = generate_grid(6, 6, 120, 30);
  const auto requests = grid_demand(grid, 200, 0.2, 55);
  SimConfig cfg;
  cfg.horizon_s = 900;
  cfg.fleet_size = 8;
  cfg.rng_seed = 21;
  const SimResult r = run_simulation(grid, requests, cfg);
  write_sim_result(tmp.path.string(), r);

  const auto trace_rows = read_trace_csv(tmp.file("trace.csv"));
  REQUIRE(trace_rows.size() == r.trace.n_steps());
  for (std::size_t i = 0; i < trace_rows.size(); ++i) {
    CHECK(trace_rows[i].step == static_cast<int>(i));
    CHECK(trace_rows[i].queue_length == r.trace.queue_length[i]);
    CHECK(trace_rows[i].idle_count == r.trace.idle_count[i]);
    CHECK(trace_rows[i].busy_count == r.trace.busy_count[i]);
  }

  const auto traveller_rows = read_travellers_csv(tmp.file("travellers.csv"));
  REQUIRE(traveller_rows.size() == r.trace.travellers.size());
  for (std::size_t i = 0; i < traveller_rows.size(); ++i) {
    CHECK(traveller_rows[i].id == r.trace.travellers[i].id);
    CHECK(traveller_rows[i].request_time_s == r.trace.travellers[i].request_time_s);
    CHECK(traveller_rows[i].assignment_wait_s == r.trace.travellers[i].assignment_wait_s);
    CHECK(traveller_rows[i].pickup_wait_s == r.trace.travellers[i].pickup_wait_s);
    CHECK(traveller_rows[i].trip_time_s == r.trace.travellers[i].trip_time_s);
    CHECK(traveller_rows[i].served == r.trace.travellers[i].served);
  }
}

TEST_CASE("input validation") {
  const RoadNetwork grid = generate_grid(3, 3, 100, 30);
  SimConfig cfg;
  cfg.horizon_s = 60;
  cfg.fleet_size = 1;

  SUBCASE("unsorted requests") {
    const std::vector<TripRequest> bad{{1, 5, 0, 1, 1}, {2, 1, 0, 1, 1}};
    CHECK_THROWS_AS(run_simulation(grid, bad, cfg), ValidationError);
  }
  SUBCASE("unknown node") {
    const std::vector<TripRequest> bad{{1, 0, 0, 777, 1}};
    CHECK_THROWS_AS(run_simulation(grid, bad, cfg), ValidationError);
  }
  SUBCASE("horizon not a multiple of dt") {
    cfg.horizon_s = 60.5;
    CHECK_THROWS_AS(run_simulation(grid, {}, cfg), ValidationError);
  }
  SUBCASE("late requests only warn") {
    const std::vector<TripRequest> late{{1, 100.0, 0, 1, 1}};
    const SimResult r = run_simulation(grid, late, cfg);
    CHECK(!r.warnings.empty());
    CHECK(r.summary.unserved == 1);
  }
}
