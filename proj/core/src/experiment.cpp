#include "fleetsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "fleetsim/errors.hpp"
#include "fleetsim/rng.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace fleetsim {

StabilityVerdict detect_stability(const KpiTrace& trace, double lambda_per_h,
                                  const StabilitySettings& settings) {
  if (trace.n_steps() == 0) {
    throw ValidationError("detect_stability needs a non-empty trace");
  }
  if (!(lambda_per_h > 0)) {
    throw ValidationError("detect_stability needs lambda > 0");
  }
  const double horizon_s = trace.horizon_s();
  const double window_s = settings.window_s > 0 ? settings.window_s : horizon_s / 3.0;
  if (window_s > horizon_s + 1e-9) {
    throw ValidationError("stability window exceeds the trace horizon");
  }
  if (window_s < 2 * trace.dt_s) {
    throw ValidationError("stability window must span at least two steps");
  }

  StabilityVerdict v;
  v.fleet_size = static_cast<int>(trace.vehicles.size());
  v.slope_tol_per_h =
      settings.slope_tol_per_h > 0 ? settings.slope_tol_per_h : 0.05 * lambda_per_h;
  v.level_bound = settings.level_factor * lambda_per_h * trace.dt_s / 3600.0;

  const auto n = trace.n_steps();
  const auto start = n - static_cast<std::size_t>(std::llround(window_s / trace.dt_s));

  // Least-squares slope of queue length against time in hours.
  double sum_t = 0, sum_q = 0, sum_tt = 0, sum_tq = 0;
  const auto count = static_cast<double>(n - start);
  for (std::size_t i = start; i < n; ++i) {
    const double t_h = static_cast<double>(i) * trace.dt_s / 3600.0;
    const double q = trace.queue_length[i];
    sum_t += t_h;
    sum_q += q;
    sum_tt += t_h * t_h;
    sum_tq += t_h * q;
  }
  const double var = sum_tt - sum_t * sum_t / count;
  v.tail_slope_per_h = var > 0 ? (sum_tq - sum_t * sum_q / count) / var : 0.0;
  v.tail_mean_queue = sum_q / count;
  v.stable = v.tail_slope_per_h <= v.slope_tol_per_h && v.tail_mean_queue <= v.level_bound;

  const double tail_start_s = horizon_s - window_s;
  double pickup_sum = 0, pickup_max = 0, assign_sum = 0;
  std::size_t pickup_n = 0, assign_n = 0;
  for (const TravellerRecord& r : trace.travellers) {
    if (r.pickup_wait_s && *r.t_pickup_s >= tail_start_s) {
      pickup_sum += *r.pickup_wait_s;
      pickup_max = std::max(pickup_max, *r.pickup_wait_s);
      ++pickup_n;
    }
    if (r.assignment_wait_s && *r.t_assigned_s >= tail_start_s) {
      assign_sum += *r.assignment_wait_s;
      ++assign_n;
    }
  }
  if (pickup_n > 0) {
    v.tail_mean_pickup_wait_s = pickup_sum / static_cast<double>(pickup_n);
    v.tail_max_pickup_wait_s = pickup_max;
  }
  if (assign_n > 0) {
    v.tail_mean_assignment_wait_s = assign_sum / static_cast<double>(assign_n);
  }

  double trip_sum = 0;
  std::size_t trip_n = 0;
  for (const TravellerRecord& r : trace.travellers) {
    if (r.served) {
      trip_sum += *r.trip_time_s;
      ++trip_n;
    }
  }
  if (trip_n > 0 && v.tail_mean_pickup_wait_s && v.fleet_size > 0) {
    v.empirical_rho = utilization_with_pickup(lambda_per_h, v.fleet_size,
                                              trip_sum / static_cast<double>(trip_n) / 3600.0,
                                              *v.tail_mean_pickup_wait_s / 3600.0);
  }
  return v;
}

namespace {

SweepEntry run_one(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                   const SweepSpec& spec, int size, int replication) {
  SweepEntry entry;
  entry.fleet_size = size;
  entry.replication = replication;
  entry.seed = derive_seed(spec.base.rng_seed, static_cast<std::uint64_t>(size),
                           static_cast<std::uint64_t>(replication));
  try {
    SimConfig cfg = spec.base;
    cfg.fleet_size = size;
    cfg.rng_seed = entry.seed;
    const SimResult result = run_simulation(net, requests, cfg);
    entry.summary = result.summary;
    entry.verdict = detect_stability(result.trace, result.summary.lambda_per_h, spec.stability);
  } catch (const std::exception& e) {
    entry.error = e.what();
  }
  return entry;
}

}  // namespace

std::vector<SweepEntry> sweep(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                              const SweepSpec& spec) {
  if (spec.fleet_sizes.empty()) {
    throw ValidationError("sweep needs at least one fleet size");
  }
  for (const int size : spec.fleet_sizes) {
    if (size <= 0) throw ValidationError("fleet sizes must be positive");
  }
  if (spec.replications < 1) {
    throw ValidationError("replications must be >= 1");
  }
  std::vector<int> sizes = spec.fleet_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::vector<SweepEntry> entries;
  entries.reserve(sizes.size() * static_cast<std::size_t>(spec.replications));
  for (const int size : sizes) {
    for (int rep = 0; rep < spec.replications; ++rep) {
      entries.push_back(run_one(net, requests, spec, size, rep));
    }
  }
  return entries;
}

namespace {

std::string opt_csv(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void write_sweep_csv(const std::string& file_path, const std::vector<SweepEntry>& entries) {
  std::ofstream out(file_path);
  if (!out) throw ValidationError("cannot write '" + file_path + "'");
  out << "fleet_size,replication,seed,stable,tail_mean_queue,tail_slope_per_h,"
         "slope_tol_per_h,level_bound,tail_mean_pickup_wait_s,tail_max_pickup_wait_s,"
         "tail_mean_assignment_wait_s,empirical_rho,served,in_flight,unserved,error\n";
  for (const SweepEntry& e : entries) {
    out << e.fleet_size << ',' << e.replication << ',' << e.seed << ',';
    if (e.error) {
      out << ",,,,,,,,,,,," << '"' << *e.error << '"' << '\n';
      continue;
    }
    out << (e.verdict.stable ? 1 : 0) << ',' << format_double(e.verdict.tail_mean_queue) << ','
        << format_double(e.verdict.tail_slope_per_h) << ','
        << format_double(e.verdict.slope_tol_per_h) << ','
        << format_double(e.verdict.level_bound) << ','
        << opt_csv(e.verdict.tail_mean_pickup_wait_s) << ','
        << opt_csv(e.verdict.tail_max_pickup_wait_s) << ','
        << opt_csv(e.verdict.tail_mean_assignment_wait_s) << ','
        << opt_csv(e.verdict.empirical_rho) << ',' << e.summary.served << ','
        << e.summary.in_flight << ',' << e.summary.unserved << ",\n";
  }
}

std::vector<SweepEntry> run_sweep_to_dir(const RoadNetwork& net,
                                         const std::vector<TripRequest>& requests,
                                         const SweepSpec& spec, const std::string& out_dir) {
  const auto entries = sweep(net, requests, spec);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base(out_dir);
  write_sweep_csv((base / "sweep.csv").string(), entries);

  nlohmann::ordered_json j;
  j["base_seed"] = spec.base.rng_seed;
  j["replications"] = spec.replications;
  j["dt_s"] = spec.base.dt_s;
  j["horizon_s"] = spec.base.horizon_s;
  j["window_s"] = spec.stability.window_s;
  j["slope_tol_per_h"] = spec.stability.slope_tol_per_h;
  j["level_factor"] = spec.stability.level_factor;
  j["sizes"] = spec.fleet_sizes;
  std::ofstream out(base / "sweep_summary.json");
  if (!out) throw ValidationError("cannot write sweep_summary.json");
  out << j.dump(2) << '\n';
  return entries;
}

CriticalBracket bisect_critical(int c_lo, int c_hi, const std::function<bool(int)>& is_stable) {
  if (c_lo >= c_hi) {
    throw ValidationError("bisect_critical needs c_lo < c_hi");
  }
  if (is_stable(c_lo)) {
    throw ValidationError("bracket verdicts inverted: c_lo = " + std::to_string(c_lo) +
                          " is already stable");
  }
  if (!is_stable(c_hi)) {
    throw ValidationError("bracket verdicts inverted: c_hi = " + std::to_string(c_hi) +
                          " is unstable");
  }
  while (c_hi - c_lo > 1) {
    const int mid = c_lo + (c_hi - c_lo) / 2;
    if (is_stable(mid)) {
      c_hi = mid;
    } else {
      c_lo = mid;
    }
  }
  return {c_lo, c_hi, {}};
}

double mean_request_trip_time_h(const RoadNetwork& net,
                                const std::vector<TripRequest>& requests) {
  if (requests.empty()) {
    throw ValidationError("mean trip time needs at least one request");
  }
  double sum_s = 0;
  for (const TripRequest& r : requests) {
    sum_s += shortest_path(net, r.origin, r.destination).total_time_s;
  }
  return sum_s / static_cast<double>(requests.size()) / 3600.0;
}

CriticalBracket find_critical_fleet_size(const RoadNetwork& net,
                                         const std::vector<TripRequest>& requests,
                                         const CriticalSearch& search) {
  if (requests.empty()) {
    throw ValidationError("critical size search needs requests");
  }
  const double lambda = static_cast<double>(requests.size()) / (search.base.horizon_s / 3600.0);
  const double t_bar_h = mean_request_trip_time_h(net, requests);

  int c_lo = search.c_lo.value_or(
      static_cast<int>(std::ceil(lambda * t_bar_h - 1e-9)));
  int c_hi;
  if (search.c_hi) {
    c_hi = *search.c_hi;
  } else {
    const double phi = net.phi_override.value_or(
        estimate_circuity(net, search.circuity_samples, search.base.rng_seed));
    const PickupModel pickup = spatial_pickup_model(network_area_km2(net), 1.0, phi,
                                               net.mean_effective_speed_kmh);
    const std::int64_t fluid = min_fleet_fluid(lambda, t_bar_h, pickup, search.fluid_dt_s,
                                               search.base.horizon_s);
    c_hi = static_cast<int>(2 * fluid);
  }

  SweepSpec spec;
  spec.base = search.base;
  spec.stability = search.stability;
  std::map<int, SweepEntry> evaluated;
  auto is_stable = [&](int c) {
    auto it = evaluated.find(c);
    if (it == evaluated.end()) {
      SweepEntry entry = run_one(net, requests, spec, c, 0);
      if (entry.error) {
        throw ValidationError("simulation at fleet size " + std::to_string(c) +
                              " failed: " + *entry.error);
      }
      it = evaluated.emplace(c, std::move(entry)).first;
    }
    return it->second.verdict.stable;
  };

  CriticalBracket bracket;
  try {
    bracket = bisect_critical(c_lo, c_hi, is_stable);
  } catch (const ValidationError& e) {
    std::string what = e.what();
    for (const int c : {c_lo, c_hi}) {
      auto it = evaluated.find(c);
      if (it == evaluated.end()) continue;
      const StabilityVerdict& v = it->second.verdict;
      what += "; c=" + std::to_string(c) + ": tail mean queue " +
              format_double(v.tail_mean_queue) + " (bound " + format_double(v.level_bound) +
              "), slope " + format_double(v.tail_slope_per_h) + "/h (tol " +
              format_double(v.slope_tol_per_h) + ")";
    }
    throw ValidationError(what);
  }
  bracket.evaluated.reserve(evaluated.size());
  for (auto& [size, entry] : evaluated) {
    bracket.evaluated.push_back(std::move(entry));
  }
  return bracket;
}

PickupComparisonRow compare_pickup_model(const SimResult& unstable_run,
                                         const QueueParams& params) {
  const StabilitySettings tail{unstable_run.config.horizon_s *
                                   unstable_run.config.tail_window_fraction,
                               0, 3.0};
  const StabilityVerdict verdict =
      detect_stability(unstable_run.trace, unstable_run.summary.lambda_per_h, tail);
  if (!verdict.tail_mean_pickup_wait_s) {
    throw ValidationError("compare_pickup_model: the run recorded no pickup waits in the tail");
  }
  PickupComparisonRow row;
  row.v_used = std::max(1.0, unstable_run.summary.lambda_per_h / 3600.0);
  row.tp_model_min =
      pickup_wait_h(params.area_km2, params.psi, row.v_used, params.phi, params.v_bar_kmh) * 60.0;
  row.tp_sim_steady_min = *verdict.tail_mean_pickup_wait_s / 60.0;
  row.tp_sim_max_min = *verdict.tail_max_pickup_wait_s / 60.0;
  row.abs_error_pct =
      std::abs(row.tp_model_min - row.tp_sim_steady_min) / row.tp_sim_steady_min * 100.0;
  return row;
}

}  // namespace fleetsim
