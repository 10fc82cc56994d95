#include "fleetsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fleetsim/errors.hpp"

namespace fleetsim {

std::string to_string(TravellerState s) {
  switch (s) {
    case TravellerState::WaitingForAssignment: return "waiting_for_assignment";
    case TravellerState::WaitingForPickup: return "waiting_for_pickup";
    case TravellerState::InTrip: return "in_trip";
    case TravellerState::Served: return "served";
  }
  return "?";
}

std::string to_string(VehicleState s) {
  switch (s) {
    case VehicleState::Idle: return "idle";
    case VehicleState::TravellingToOrigin: return "travelling_to_origin";
    case VehicleState::Loading: return "loading";
    case VehicleState::TravellingToDestination: return "travelling_to_destination";
    case VehicleState::Unloading: return "unloading";
  }
  return "?";
}

Traveller& TravellerPool::add(Traveller t) {
  if (!index_.emplace(t.id, items_.size()).second) {
    throw ValidationError("duplicate traveller id " + std::to_string(t.id));
  }
  items_.push_back(std::move(t));
  return items_.back();
}

Traveller& TravellerPool::get(std::int64_t id) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw SimulationError("unknown traveller id " + std::to_string(id));
  }
  return items_[it->second];
}

const Traveller& TravellerPool::get(std::int64_t id) const {
  return const_cast<TravellerPool*>(this)->get(id);
}

void Operator::enqueue(std::int64_t traveller_id, double t_request_s) {
  if (!ever_enqueued_.insert(traveller_id).second) {
    throw ValidationError("traveller " + std::to_string(traveller_id) + " already enqueued");
  }
  if (!queue_.empty() &&
      (t_request_s < last_time_ || (t_request_s == last_time_ && traveller_id < last_id_))) {
    throw ValidationError("enqueue would break (request time, id) queue ordering");
  }
  queue_.push_back(traveller_id);
  last_time_ = t_request_s;
  last_id_ = traveller_id;
}

std::int64_t Operator::front() const {
  if (queue_.empty()) {
    throw SimulationError("front() on an empty queue");
  }
  return queue_.front();
}

void Operator::pop_front() {
  if (queue_.empty()) {
    throw SimulationError("pop_front() on an empty queue");
  }
  queue_.pop_front();
}

std::vector<Assignment> fifo_assign(Operator& op, const RoadNetwork& net,
                                    std::vector<Vehicle>& fleet, TravellerPool& travellers,
                                    double now_s, int prefilter_k) {
  std::vector<Assignment> out;
  std::vector<std::size_t> idle;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (fleet[i].state == VehicleState::Idle) idle.push_back(i);
  }
  if (prefilter_k < 1) prefilter_k = 1;

  std::vector<std::pair<double, std::size_t>> near;  // (straight-line m, fleet index)
  while (!op.empty() && !idle.empty()) {
    Traveller& t = travellers.get(op.front());
    const RoadNode& origin = net.node(t.request.origin);

    near.clear();
    near.reserve(idle.size());
    for (const std::size_t i : idle) {
      near.emplace_back(net.straight_line_m(net.node(fleet[i].node), origin), i);
    }
    const std::size_t keep = std::min<std::size_t>(near.size(), static_cast<std::size_t>(prefilter_k));
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(keep), near.end(),
                      [&](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return fleet[a.second].id < fleet[b.second].id;
                      });

    double best_time = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    Path best_path;
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t i = near[k].second;
      Path p = shortest_path(net, fleet[i].node, t.request.origin);
      if (p.total_time_s < best_time ||
          (p.total_time_s == best_time && fleet[i].id < fleet[best_index].id)) {
        best_time = p.total_time_s;
        best_index = i;
        best_path = std::move(p);
      }
    }

    Vehicle& v = fleet[best_index];
    op.pop_front();
    t.state = TravellerState::WaitingForPickup;
    t.t_assigned_s = now_s;
    v.state = VehicleState::TravellingToOrigin;
    v.assigned_traveller = t.id;
    v.trip_origin = t.request.origin;
    v.trip_destination = t.request.destination;
    v.route = std::move(best_path);
    v.route_pos = 0;
    v.link_offset_m = 0;
    idle.erase(std::find(idle.begin(), idle.end(), best_index));
    out.push_back({t.id, v.id});
  }
  return out;
}

namespace {

// Moves the vehicle along its route for up to time_budget_s; returns true
// when the route is exhausted. Leftover budget after exhaustion is dropped
// (arrivals are quantized to the step grid).
bool advance_along_route(Vehicle& v, const RoadNetwork& net, double time_budget_s) {
  while (true) {
    if (v.route_pos >= v.route.links.size()) {
      return true;
    }
    const RoadLink& link = net.links[static_cast<std::size_t>(v.route.links[v.route_pos])];
    const double speed_mps = link.effective_speed_kmh / 3.6;
    const double remaining_m = link.length_m - v.link_offset_m;
    const double need_s = remaining_m / speed_mps;
    if (need_s <= time_budget_s + 1e-9) {
      v.odometer_m += remaining_m;
      v.node = link.to;
      v.link_offset_m = 0;
      ++v.route_pos;
      time_budget_s -= need_s;
      if (time_budget_s <= 1e-9 && v.route_pos < v.route.links.size()) {
        return false;
      }
      continue;
    }
    const double moved = speed_mps * time_budget_s;
    v.link_offset_m += moved;
    v.odometer_m += moved;
    return false;
  }
}

void complete_loading(Vehicle& v, const RoadNetwork& net, std::vector<VehicleEvent>& events) {
  if (!v.assigned_traveller) {
    throw SimulationError("vehicle " + std::to_string(v.id) + " loading without a traveller");
  }
  events.push_back({VehicleEvent::Kind::PickupComplete, v.id, *v.assigned_traveller});
  v.route = shortest_path(net, v.trip_origin, v.trip_destination);
  if (v.route.empty()) {
    throw SimulationError("vehicle " + std::to_string(v.id) + " has an empty trip route");
  }
  v.route_pos = 0;
  v.link_offset_m = 0;
  v.dwell_remaining_s = 0;
  v.state = VehicleState::TravellingToDestination;
}

void complete_unloading(Vehicle& v, std::vector<VehicleEvent>& events) {
  if (!v.assigned_traveller) {
    throw SimulationError("vehicle " + std::to_string(v.id) + " unloading without a traveller");
  }
  events.push_back({VehicleEvent::Kind::DropoffComplete, v.id, *v.assigned_traveller});
  v.assigned_traveller.reset();
  v.route = Path{};
  v.route_pos = 0;
  v.link_offset_m = 0;
  v.dwell_remaining_s = 0;
  v.trips_served += 1;
  v.state = VehicleState::Idle;
}

}  // namespace

void vehicle_step(Vehicle& v, const RoadNetwork& net, double dt_s, double dwell_load_s,
                  double dwell_unload_s, std::vector<VehicleEvent>& events) {
  switch (v.state) {
    case VehicleState::Idle:
      return;
    case VehicleState::TravellingToOrigin:
      if (advance_along_route(v, net, dt_s)) {
        v.state = VehicleState::Loading;
        v.dwell_remaining_s = dwell_load_s;
        if (v.dwell_remaining_s <= 1e-9) {
          complete_loading(v, net, events);
        }
      }
      return;
    case VehicleState::Loading:
      v.dwell_remaining_s -= dt_s;
      if (v.dwell_remaining_s <= 1e-9) {
        complete_loading(v, net, events);
      }
      return;
    case VehicleState::TravellingToDestination:
      if (v.route.empty()) {
        throw SimulationError("vehicle " + std::to_string(v.id) +
                              " travelling with an empty route");
      }
      if (advance_along_route(v, net, dt_s)) {
        v.state = VehicleState::Unloading;
        v.dwell_remaining_s = dwell_unload_s;
        if (v.dwell_remaining_s <= 1e-9) {
          complete_unloading(v, events);
        }
      }
      return;
    case VehicleState::Unloading:
      v.dwell_remaining_s -= dt_s;
      if (v.dwell_remaining_s <= 1e-9) {
        complete_unloading(v, events);
      }
      return;
  }
}

void traveller_step(Traveller& t, const VehicleEvent& event, double now_s) {
  switch (event.kind) {
    case VehicleEvent::Kind::PickupComplete:
      if (t.state != TravellerState::WaitingForPickup) {
        throw SimulationError("pickup event for traveller " + std::to_string(t.id) +
                              " in state " + to_string(t.state));
      }
      t.state = TravellerState::InTrip;
      t.t_pickup_s = now_s;
      return;
    case VehicleEvent::Kind::DropoffComplete:
      if (t.state != TravellerState::InTrip) {
        throw SimulationError("dropoff event for traveller " + std::to_string(t.id) +
                              " in state " + to_string(t.state));
      }
      t.state = TravellerState::Served;
      t.t_dropoff_s = now_s;
      return;
  }
}

}  // namespace fleetsim
