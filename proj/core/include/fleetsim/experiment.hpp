#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/queueing.hpp"
#include "fleetsim/sim_engine.hpp"

namespace fleetsim {

struct StabilitySettings {
  double window_s = 0;          ///< 0 means the final third of the horizon
  double slope_tol_per_h = 0;   ///< 0 means 0.05 * lambda
  double level_factor = 3.0;    ///< tail mean queue bound, in units of lambda*dt
};

struct StabilityVerdict {
  int fleet_size = 0;
  bool stable = false;
  double tail_mean_queue = 0;
  double tail_slope_per_h = 0;  ///< least-squares queue growth, requests/hour
  double slope_tol_per_h = 0;   ///< threshold actually applied
  double level_bound = 0;       ///< threshold actually applied
  std::optional<double> tail_mean_pickup_wait_s;
  std::optional<double> tail_max_pickup_wait_s;
  std::optional<double> tail_mean_assignment_wait_s;
  std::optional<double> empirical_rho;
};

/// Classifies a run as stable iff the least-squares slope of the queue length
/// over the tail window stays below slope_tol AND the tail mean queue length
/// stays below level_factor * lambda * dt.
StabilityVerdict detect_stability(const KpiTrace& trace, double lambda_per_h,
                                  const StabilitySettings& settings = {});

struct SweepSpec {
  std::vector<int> fleet_sizes;
  SimConfig base;
  StabilitySettings stability;
  int replications = 1;
};

struct SweepEntry {
  int fleet_size = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  StabilityVerdict verdict;
  SimSummary summary;
  std::optional<std::string> error;
};

/// Runs every (size, replication) pair with a seed derived from the base
/// seed. Per-run failures are captured in the entry instead of aborting the
/// sweep. Entries come back sorted by (fleet size, replication).
std::vector<SweepEntry> sweep(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                              const SweepSpec& spec);

void write_sweep_csv(const std::string& file_path, const std::vector<SweepEntry>& entries);

/// Runs the sweep and writes sweep.csv plus sweep_summary.json into out_dir.
std::vector<SweepEntry> run_sweep_to_dir(const RoadNetwork& net,
                                         const std::vector<TripRequest>& requests,
                                         const SweepSpec& spec, const std::string& out_dir);

struct CriticalBracket {
  int largest_unstable = 0;
  int smallest_stable = 0;  ///< c_star
  std::vector<SweepEntry> evaluated;
};

/// Bisection over fleet size on an arbitrary stability oracle. Asserts the
/// bracket endpoints (c_lo unstable, c_hi stable) before narrowing; throws
/// ValidationError when they are inverted.
CriticalBracket bisect_critical(int c_lo, int c_hi, const std::function<bool(int)>& is_stable);

struct CriticalSearch {
  SimConfig base;
  StabilitySettings stability;
  std::optional<int> c_lo;  ///< default ceil(lambda * t_bar)
  std::optional<int> c_hi;  ///< default 2 * min_fleet_fluid
  double fluid_dt_s = 60;
  int circuity_samples = 400;
};

/// Locates the smallest stable fleet size by simulation-backed bisection.
/// The default bracket comes from the queueing bound (below) and twice the
/// fluid-model size (above).
CriticalBracket find_critical_fleet_size(const RoadNetwork& net,
                                         const std::vector<TripRequest>& requests,
                                         const CriticalSearch& search);

/// Mean A* travel time over the request OD pairs, in hours.
double mean_request_trip_time_h(const RoadNetwork& net,
                                const std::vector<TripRequest>& requests);

struct PickupComparisonRow {
  double v_used = 0;             ///< idle-vehicle count fed into the model
  double tp_model_min = 0;       ///< pickup-wait model estimate
  double tp_sim_steady_min = 0;  ///< simulated plateau (tail mean)
  double tp_sim_max_min = 0;     ///< largest single pickup wait in the tail
  double abs_error_pct = 0;      ///< |model - steady| / steady * 100
};

/// Compares the pickup-wait model against an unstable-regime run, using
/// V = max(1, per-second arrivals): the model's idle-vehicle count cannot
/// drop below the single vehicle present at any actual assignment.
PickupComparisonRow compare_pickup_model(const SimResult& unstable_run,
                                         const QueueParams& params);

}  // namespace fleetsim
