#include <algorithm>

#include "doctest.h"
#include "fleetsim/agents.hpp"
#include "fleetsim/errors.hpp"
#include "fleetsim/rng.hpp"
#include "support/dijkstra_ref.hpp"

using namespace fleetsim;

namespace {

Traveller make_traveller(std::int64_t id, std::int64_t origin, std::int64_t destination,
                         double t_request = 0) {
  Traveller t;
  t.id = id;
  t.request = {id, t_request, origin, destination, 1};
  t.t_request_s = t_request;
  return t;
}

Vehicle make_vehicle(std::int64_t id, std::int64_t node) {
  Vehicle v;
  v.id = id;
  v.node = node;
  return v;
}

// chain 0-1-2-...-(n-1), 100 m blocks at 36 km/h -> 10 s per link
RoadNetwork make_chain(int n, double speed_kmh = 36) {
  std::vector<RoadNode> nodes;
  std::vector<RoadLink> links;
  for (int i = 0; i < n; ++i) nodes.push_back({i, i * 100.0, 0.0});
  for (int i = 0; i + 1 < n; ++i) {
    links.push_back({i, i + 1, 100, speed_kmh, HighwayClass::Other, speed_kmh});
    links.push_back({i + 1, i, 100, speed_kmh, HighwayClass::Other, speed_kmh});
  }
  return finalize_network(CoordinateSystem::PlanarM, std::move(nodes), std::move(links));
}

}  // namespace

TEST_CASE("operator queue ordering") {
  Operator op;
  op.enqueue(3, 5.0);
  op.enqueue(7, 5.0);  // same second, higher id after lower id
  CHECK(op.queue_length() == 2);
  CHECK(op.front() == 3);

  SUBCASE("duplicate enqueue") {
    CHECK_THROWS_WITH_AS(op.enqueue(3, 6.0), doctest::Contains("already"), ValidationError);
  }
  SUBCASE("id tie-break violation") {
    CHECK_THROWS_AS(op.enqueue(1, 5.0), ValidationError);
  }
  SUBCASE("time ordering violation") {
    CHECK_THROWS_AS(op.enqueue(9, 4.0), ValidationError);
  }
  SUBCASE("pop keeps order") {
    op.pop_front();
    CHECK(op.front() == 7);
  }
}

TEST_CASE("fifo_assign picks the nearest idle vehicle") {
  const RoadNetwork chain = make_chain(6);
  TravellerPool pool;
  Operator op;
  pool.add(make_traveller(1, 0, 5));
  op.enqueue(1, 0);

  std::vector<Vehicle> fleet{make_vehicle(0, 3), make_vehicle(1, 1)};  // 30 s vs 10 s away
  const auto assigned = fifo_assign(op, chain, fleet, pool, 0.0);
  REQUIRE(assigned.size() == 1);
  CHECK(assigned[0].vehicle_id == 1);
  CHECK(fleet[1].state == VehicleState::TravellingToOrigin);
  CHECK(fleet[0].state == VehicleState::Idle);
  CHECK(pool.get(1).state == TravellerState::WaitingForPickup);
  CHECK(pool.get(1).t_assigned_s == 0.0);
  CHECK(op.empty());
}

TEST_CASE("fifo_assign breaks exact ties by lower vehicle id") {
  const RoadNetwork chain = make_chain(5);
  TravellerPool pool;
  Operator op;
  pool.add(make_traveller(1, 2, 4));
  op.enqueue(1, 0);
  // nodes 1 and 3 are both 10 s from node 2
  std::vector<Vehicle> fleet{make_vehicle(4, 3), make_vehicle(2, 1)};
  const auto assigned = fifo_assign(op, chain, fleet, pool, 0.0);
  REQUIRE(assigned.size() == 1);
  CHECK(assigned[0].vehicle_id == 2);
}

TEST_CASE("fifo_assign equals the sequential greedy oracle") {
  const RoadNetwork grid = generate_grid(6, 6, 150, 30);
  Rng rng(41);
  const auto n = static_cast<std::int64_t>(grid.nodes.size());

  for (int trial = 0; trial < 5; ++trial) {
    TravellerPool pool;
    Operator op;
    for (std::int64_t id = 1; id <= 3; ++id) {
      std::int64_t o = grid.nodes[rng.uniform_int(n)].id;
      std::int64_t d = grid.nodes[rng.uniform_int(n)].id;
      while (d == o) d = grid.nodes[rng.uniform_int(n)].id;
      pool.add(make_traveller(id, o, d));
      op.enqueue(id, 0);
    }
    std::vector<Vehicle> fleet;
    for (std::int64_t vid = 0; vid < 5; ++vid) {
      fleet.push_back(make_vehicle(vid, grid.nodes[rng.uniform_int(n)].id));
    }

    // oracle: replay the greedy rule with Dijkstra times
    std::vector<Vehicle> oracle_fleet = fleet;
    std::vector<std::pair<std::int64_t, std::int64_t>> expected;
    std::vector<bool> taken(oracle_fleet.size(), false);
    for (std::int64_t id = 1; id <= 3; ++id) {
      double best = 1e300;
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < oracle_fleet.size(); ++i) {
        if (taken[i]) continue;
        const double t =
            testing::dijkstra_time_s(grid, oracle_fleet[i].node, pool.get(id).request.origin);
        if (t < best || (t == best && oracle_fleet[i].id < oracle_fleet[best_i].id)) {
          best = t;
          best_i = i;
        }
      }
      taken[best_i] = true;
      expected.emplace_back(id, oracle_fleet[best_i].id);
    }

    const auto assigned = fifo_assign(op, grid, fleet, pool, 0.0, 64);
    REQUIRE(assigned.size() == expected.size());
    for (std::size_t k = 0; k < assigned.size(); ++k) {
      CHECK(assigned[k].traveller_id == expected[k].first);
      CHECK(assigned[k].vehicle_id == expected[k].second);
    }

    // one-to-one topology
    std::vector<std::int64_t> used;
    for (const auto& a : assigned) used.push_back(a.vehicle_id);
    std::sort(used.begin(), used.end());
    CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
  }
}

TEST_CASE("fifo_assign stops when vehicles run out") {
  const RoadNetwork chain = make_chain(6);
  TravellerPool pool;
  Operator op;
  for (std::int64_t id = 1; id <= 3; ++id) {
    pool.add(make_traveller(id, 0, 5));
    op.enqueue(id, 0);
  }
  std::vector<Vehicle> fleet{make_vehicle(0, 2)};
  const auto assigned = fifo_assign(op, chain, fleet, pool, 0.0);
  CHECK(assigned.size() == 1);
  CHECK(assigned[0].traveller_id == 1);
  REQUIRE(op.queue_length() == 2);
  CHECK(op.queue()[0] == 2);
  CHECK(op.queue()[1] == 3);

  SUBCASE("empty fleet yields an empty result") {
    std::vector<Vehicle> none;
    CHECK(fifo_assign(op, chain, none, pool, 1.0).empty());
  }
}

TEST_CASE("vehicle_step hand trace") {
  // 500 m to the origin at 100 m per 1 s step (360 km/h keeps numbers exact)
  const RoadNetwork chain = make_chain(8, 360);
  TravellerPool pool;
  Operator op;
  pool.add(make_traveller(1, 5, 7));
  op.enqueue(1, 0);
  std::vector<Vehicle> fleet{make_vehicle(0, 0)};
  fifo_assign(op, chain, fleet, pool, 0.0);
  Vehicle& v = fleet[0];

  std::vector<VehicleEvent> events;
  for (int step = 0; step < 4; ++step) {
    vehicle_step(v, chain, 1.0, 0.0, 0.0, events);
    CHECK(v.state == VehicleState::TravellingToOrigin);
    CHECK(events.empty());
  }
  vehicle_step(v, chain, 1.0, 0.0, 0.0, events);  // fifth step: arrival, dwell 0
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == VehicleEvent::Kind::PickupComplete);
  CHECK(v.state == VehicleState::TravellingToDestination);
  CHECK(v.odometer_m == doctest::Approx(500.0));

  traveller_step(pool.get(1), events[0], 5.0);
  CHECK(pool.get(1).state == TravellerState::InTrip);
  CHECK(pool.get(1).t_pickup_s == 5.0);

  // 200 m trip: two more steps to unload
  events.clear();
  vehicle_step(v, chain, 1.0, 0.0, 0.0, events);
  CHECK(events.empty());
  vehicle_step(v, chain, 1.0, 0.0, 0.0, events);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == VehicleEvent::Kind::DropoffComplete);
  CHECK(v.state == VehicleState::Idle);
  CHECK(v.node == 7);
  CHECK(v.trips_served == 1);
  CHECK(!v.assigned_traveller.has_value());

  traveller_step(pool.get(1), events[0], 7.0);
  CHECK(pool.get(1).state == TravellerState::Served);
}

TEST_CASE("idle vehicles do not move") {
  const RoadNetwork chain = make_chain(3);
  Vehicle v = make_vehicle(0, 1);
  std::vector<VehicleEvent> events;
  vehicle_step(v, chain, 1.0, 0.0, 0.0, events);
  CHECK(v.state == VehicleState::Idle);
  CHECK(v.odometer_m == 0.0);
  CHECK(events.empty());
}

TEST_CASE("loading dwell lasts the configured number of steps") {
  const RoadNetwork chain = make_chain(4, 360);
  TravellerPool pool;
  Operator op;
  pool.add(make_traveller(1, 0, 2));
  op.enqueue(1, 0);
  std::vector<Vehicle> fleet{make_vehicle(0, 0)};  // co-located with the origin
  fifo_assign(op, chain, fleet, pool, 0.0);
  Vehicle& v = fleet[0];

  std::vector<VehicleEvent> events;
  vehicle_step(v, chain, 1.0, 30.0, 0.0, events);  // empty route; dwell begins
  int loading_steps = v.state == VehicleState::Loading ? 1 : 0;
  for (int i = 0; i < 29; ++i) {
    vehicle_step(v, chain, 1.0, 30.0, 0.0, events);
    if (v.state == VehicleState::Loading) ++loading_steps;
  }
  CHECK(loading_steps == 30);
  CHECK(events.empty());
  vehicle_step(v, chain, 1.0, 30.0, 0.0, events);
  REQUIRE(events.size() == 1);
  CHECK(v.state == VehicleState::TravellingToDestination);
}

TEST_CASE("traveller_step rejects out-of-order events") {
  Traveller t = make_traveller(4, 0, 1);
  const VehicleEvent pickup{VehicleEvent::Kind::PickupComplete, 0, 4};
  const VehicleEvent dropoff{VehicleEvent::Kind::DropoffComplete, 0, 4};

  CHECK_THROWS_AS(traveller_step(t, pickup, 0.0), SimulationError);   // not yet assigned
  CHECK_THROWS_AS(traveller_step(t, dropoff, 0.0), SimulationError);  // not in trip

  t.state = TravellerState::WaitingForPickup;
  traveller_step(t, pickup, 3.0);
  traveller_step(t, dropoff, 9.0);
  CHECK(t.state == TravellerState::Served);
  CHECK_THROWS_AS(traveller_step(t, dropoff, 10.0), SimulationError);  // terminal state
}
