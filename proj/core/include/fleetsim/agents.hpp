#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fleetsim/demand.hpp"
#include "fleetsim/road_network.hpp"

namespace fleetsim {

enum class TravellerState { WaitingForAssignment, WaitingForPickup, InTrip, Served };
enum class VehicleState { Idle, TravellingToOrigin, Loading, TravellingToDestination, Unloading };

std::string to_string(TravellerState s);
std::string to_string(VehicleState s);

struct Traveller {
  std::int64_t id = 0;
  TripRequest request;
  double t_request_s = 0;  ///< request time truncated to the step grid
  TravellerState state = TravellerState::WaitingForAssignment;
  std::optional<double> t_assigned_s;
  std::optional<double> t_pickup_s;
  std::optional<double> t_dropoff_s;
};

struct Vehicle {
  std::int64_t id = 0;
  VehicleState state = VehicleState::Idle;
  std::int64_t node = 0;  ///< current node while idle, last passed node en route
  Path route;
  std::size_t route_pos = 0;
  double link_offset_m = 0;
  std::optional<std::int64_t> assigned_traveller;
  std::int64_t trip_origin = 0;
  std::int64_t trip_destination = 0;
  double dwell_remaining_s = 0;
  double odometer_m = 0;
  int trips_served = 0;
};

struct VehicleEvent {
  enum class Kind { PickupComplete, DropoffComplete };
  Kind kind;
  std::int64_t vehicle_id = 0;
  std::int64_t traveller_id = 0;
};

/// Owns travellers by id; ids need not be dense.
class TravellerPool {
 public:
  Traveller& add(Traveller t);
  Traveller& get(std::int64_t id);
  const Traveller& get(std::int64_t id) const;
  bool contains(std::int64_t id) const { return index_.count(id) > 0; }
  std::vector<Traveller>& all() { return items_; }
  const std::vector<Traveller>& all() const { return items_; }
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<Traveller> items_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

/// The broker: owns the single FIFO queue of unassigned travellers.
class Operator {
 public:
  /// Appends at the tail. The queue must stay ordered by (request time, id);
  /// re-enqueueing a traveller is an error.
  void enqueue(std::int64_t traveller_id, double t_request_s);
  std::int64_t front() const;
  void pop_front();
  bool empty() const { return queue_.empty(); }
  std::size_t queue_length() const { return queue_.size(); }
  const std::deque<std::int64_t>& queue() const { return queue_; }

 private:
  std::deque<std::int64_t> queue_;
  std::unordered_set<std::int64_t> ever_enqueued_;
  double last_time_ = -1;
  std::int64_t last_id_ = 0;
};

struct Assignment {
  std::int64_t traveller_id = 0;
  std::int64_t vehicle_id = 0;
};

/// Serves the queue head-to-tail: each traveller takes the idle vehicle with
/// the minimum network travel time to its origin (ties to the lower vehicle
/// id), until the queue or the idle pool is exhausted. A straight-line
/// pre-filter keeps only the prefilter_k nearest candidates per traveller to
/// bound the number of route computations.
std::vector<Assignment> fifo_assign(Operator& op, const RoadNetwork& net,
                                    std::vector<Vehicle>& fleet, TravellerPool& travellers,
                                    double now_s, int prefilter_k = 16);

/// Advances one vehicle by dt_s: moves along the route (possibly crossing
/// several links), runs the loading/unloading dwells and emits pickup and
/// dropoff events. Route legs to the trip destination are planned when
/// loading completes.
void vehicle_step(Vehicle& v, const RoadNetwork& net, double dt_s, double dwell_load_s,
                  double dwell_unload_s, std::vector<VehicleEvent>& events);

/// Applies one event to the traveller's state machine, stamping pickup and
/// dropoff times. Throws SimulationError on out-of-order events.
void traveller_step(Traveller& t, const VehicleEvent& event, double now_s);

}  // namespace fleetsim
