#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/agents.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/road_network.hpp"

namespace fleetsim {

enum class VehicleInit { UniformNodes, Listed };

struct SimConfig {
  double dt_s = 1.0;
  double horizon_s = 0;
  int fleet_size = 0;
  std::uint64_t rng_seed = 0;
  double dwell_load_s = 0;
  double dwell_unload_s = 0;
  int prefilter_k = 16;
  VehicleInit vehicle_init = VehicleInit::UniformNodes;
  std::vector<std::int64_t> vehicle_nodes;  ///< used when vehicle_init == Listed
  double tail_window_fraction = 1.0 / 3.0;  ///< steady-state statistics window
};

struct TravellerRecord {
  std::int64_t id = 0;
  double request_time_s = 0;  ///< original (continuous) request time
  std::optional<double> t_assigned_s;
  std::optional<double> t_pickup_s;
  std::optional<double> t_dropoff_s;
  std::optional<double> assignment_wait_s;
  std::optional<double> pickup_wait_s;
  std::optional<double> trip_time_s;
  bool served = false;
};

struct VehicleRecord {
  std::int64_t id = 0;
  double odometer_m = 0;
  int trips_served = 0;
};

struct KpiTrace {
  double dt_s = 1.0;
  std::vector<int> queue_length;
  std::vector<int> idle_count;
  std::vector<int> busy_count;
  std::vector<int> arrivals;
  std::vector<int> assignments;
  std::vector<TravellerRecord> travellers;
  std::vector<VehicleRecord> vehicles;

  std::size_t n_steps() const { return queue_length.size(); }
  double horizon_s() const { return static_cast<double>(n_steps()) * dt_s; }
};

struct SimSummary {
  int total_requests = 0;
  int served = 0;
  int in_flight = 0;
  int unserved = 0;
  double mean_queue_length = 0;
  int max_queue_length = 0;
  double lambda_per_h = 0;  ///< injected requests per hour over the horizon
  std::optional<double> t_bar_h;                 ///< mean trip time over served
  std::optional<double> t_bar_p_h;               ///< tail-window mean pickup wait
  std::optional<double> mean_pickup_wait_s;      ///< over all picked-up travellers
  std::optional<double> max_pickup_wait_s;
  std::optional<double> empirical_rho;  ///< (lambda / c) * (t_bar + t_bar_p)
};

struct SimResult {
  SimConfig config;
  KpiTrace trace;
  SimSummary summary;
  std::vector<std::string> warnings;
};

/// Runs the one-second-stepped loop. Per step: inject new travellers and
/// enqueue, operator FIFO assignment, vehicle steps, traveller steps from the
/// emitted events, KPI recording. Identical inputs produce bit-identical
/// results.
SimResult run_simulation(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                         const SimConfig& config);

struct ServiceParams {
  double t_bar_h = 0;
  double t_bar_p_h = 0;
  double lambda_per_h = 0;
};

/// Measured service parameters: mean trip time over served travellers,
/// steady-state pickup wait over the tail window, and the realized request
/// rate. Throws ValidationError when nothing was served.
ServiceParams empirical_service_params(const SimResult& result);

/// Writes trace.csv, travellers.csv and summary.json into the directory.
void write_sim_result(const std::string& dir, const SimResult& result);

struct TraceRow {
  int step = 0;
  int queue_length = 0;
  int idle_count = 0;
  int busy_count = 0;
};

std::vector<TraceRow> read_trace_csv(const std::string& file_path);
std::vector<TravellerRecord> read_travellers_csv(const std::string& file_path);

}  // namespace fleetsim
