#include "fleetsim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fleetsim/errors.hpp"
#include "fleetsim/queueing.hpp"
#include "fleetsim/rng.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace fleetsim {

namespace {

void validate_inputs(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                     const SimConfig& cfg) {
  if (!(cfg.dt_s > 0) || !(cfg.horizon_s > 0)) {
    throw ValidationError("simulation needs dt > 0 and horizon > 0");
  }
  const double steps = cfg.horizon_s / cfg.dt_s;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw ValidationError("horizon must be a multiple of dt");
  }
  if (cfg.fleet_size < 0) {
    throw ValidationError("fleet size must be >= 0");
  }
  if (cfg.vehicle_init == VehicleInit::Listed &&
      cfg.vehicle_nodes.size() != static_cast<std::size_t>(cfg.fleet_size)) {
    throw ValidationError("listed vehicle positions must match the fleet size");
  }
  if (!(cfg.tail_window_fraction > 0) || cfg.tail_window_fraction > 1.0) {
    throw ValidationError("tail_window_fraction must lie in (0, 1]");
  }
  double last = -std::numeric_limits<double>::infinity();
  for (const TripRequest& r : requests) {
    if (r.request_time_s < last) {
      throw ValidationError("requests must be sorted by request_time");
    }
    last = r.request_time_s;
    if (r.request_time_s < 0) {
      throw ValidationError("request " + std::to_string(r.id) + " has a negative time");
    }
    if (r.origin == r.destination) {
      throw ValidationError("request " + std::to_string(r.id) + " has origin == destination");
    }
    if (!net.has_node(r.origin) || !net.has_node(r.destination)) {
      throw ValidationError("request " + std::to_string(r.id) +
                            " references a node outside the used component");
    }
  }
}

std::vector<Vehicle> make_fleet(const RoadNetwork& net, const SimConfig& cfg) {
  std::vector<Vehicle> fleet(static_cast<std::size_t>(cfg.fleet_size));
  Rng rng(cfg.rng_seed);
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    fleet[i].id = static_cast<std::int64_t>(i);
    if (cfg.vehicle_init == VehicleInit::UniformNodes) {
      fleet[i].node = net.nodes[static_cast<std::size_t>(
                                    rng.uniform_int(static_cast<std::int64_t>(net.nodes.size())))]
                          .id;
    } else {
      if (!net.has_node(cfg.vehicle_nodes[i])) {
        throw ValidationError("listed vehicle node " + std::to_string(cfg.vehicle_nodes[i]) +
                              " is outside the used component");
      }
      fleet[i].node = cfg.vehicle_nodes[i];
    }
  }
  return fleet;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

struct ServiceStats {
  std::optional<double> t_bar_h;
  std::optional<double> t_bar_p_h;
  std::optional<double> mean_pickup_wait_s;
  std::optional<double> max_pickup_wait_s;
  double lambda_per_h = 0;
  int served = 0;
  int in_flight = 0;
};

ServiceStats service_stats(const KpiTrace& trace, double horizon_s, double tail_fraction) {
  ServiceStats out;
  int injected = 0;
  for (const int a : trace.arrivals) injected += a;
  out.lambda_per_h = injected / (horizon_s / 3600.0);

  std::vector<double> trip_times, pickup_waits, tail_pickup_waits;
  const double tail_start_s = horizon_s * (1.0 - tail_fraction);
  for (const TravellerRecord& rec : trace.travellers) {
    if (rec.served) {
      ++out.served;
      trip_times.push_back(*rec.trip_time_s);
    } else if (rec.t_assigned_s) {
      ++out.in_flight;
    }
    if (rec.pickup_wait_s) {
      pickup_waits.push_back(*rec.pickup_wait_s);
      if (*rec.t_pickup_s >= tail_start_s) tail_pickup_waits.push_back(*rec.pickup_wait_s);
    }
  }
  if (auto m = mean_of(trip_times)) out.t_bar_h = *m / 3600.0;
  if (auto m = mean_of(pickup_waits)) {
    out.mean_pickup_wait_s = *m;
    out.max_pickup_wait_s = *std::max_element(pickup_waits.begin(), pickup_waits.end());
  }
  // Fall back to all pickups when the tail window saw none.
  if (auto m = mean_of(tail_pickup_waits)) {
    out.t_bar_p_h = *m / 3600.0;
  } else if (auto all = mean_of(pickup_waits)) {
    out.t_bar_p_h = *all / 3600.0;
  }
  return out;
}

}  // namespace

SimResult run_simulation(const RoadNetwork& net, const std::vector<TripRequest>& requests,
                         const SimConfig& cfg) {
  validate_inputs(net, requests, cfg);

  SimResult result;
  result.config = cfg;
  if (!requests.empty() && requests.back().request_time_s >= cfg.horizon_s) {
    result.warnings.push_back("horizon ends before the last request; late requests are dropped");
  }

  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon_s / cfg.dt_s));
  std::vector<Vehicle> fleet = make_fleet(net, cfg);
  Operator op;
  TravellerPool pool;

  KpiTrace& trace = result.trace;
  trace.dt_s = cfg.dt_s;
  trace.queue_length.reserve(n_steps);
  trace.idle_count.reserve(n_steps);
  trace.busy_count.reserve(n_steps);
  trace.arrivals.reserve(n_steps);
  trace.assignments.reserve(n_steps);

  std::size_t next_request = 0;
  std::vector<std::int64_t> batch;
  std::vector<VehicleEvent> events;

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double now = static_cast<double>(step) * cfg.dt_s;
    const double step_end = now + cfg.dt_s;

    // 1) inject travellers whose request falls in this step, ordered by id
    batch.clear();
    while (next_request < requests.size() &&
           requests[next_request].request_time_s < step_end) {
      const TripRequest& r = requests[next_request++];
      Traveller t;
      t.id = r.id;
      t.request = r;
      t.t_request_s = now;
      pool.add(std::move(t));
      batch.push_back(r.id);
    }
    std::sort(batch.begin(), batch.end());
    for (const std::int64_t id : batch) {
      op.enqueue(id, now);
    }

    // 2) operator logic step
    const auto assigned = fifo_assign(op, net, fleet, pool, now, cfg.prefilter_k);

    // 3) vehicle steps
    events.clear();
    for (Vehicle& v : fleet) {
      vehicle_step(v, net, cfg.dt_s, cfg.dwell_load_s, cfg.dwell_unload_s, events);
    }

    // 4) traveller steps
    for (const VehicleEvent& e : events) {
      traveller_step(pool.get(e.traveller_id), e, now);
    }

    // 5) record
    int idle = 0;
    for (const Vehicle& v : fleet) {
      if (v.state == VehicleState::Idle) ++idle;
    }
    trace.queue_length.push_back(static_cast<int>(op.queue_length()));
    trace.idle_count.push_back(idle);
    trace.busy_count.push_back(cfg.fleet_size - idle);
    trace.arrivals.push_back(static_cast<int>(batch.size()));
    trace.assignments.push_back(static_cast<int>(assigned.size()));
  }

  // Per-traveller and per-vehicle records
  trace.travellers.reserve(pool.size());
  for (const Traveller& t : pool.all()) {
    TravellerRecord rec;
    rec.id = t.id;
    rec.request_time_s = t.request.request_time_s;
    rec.t_assigned_s = t.t_assigned_s;
    rec.t_pickup_s = t.t_pickup_s;
    rec.t_dropoff_s = t.t_dropoff_s;
    if (t.t_assigned_s) rec.assignment_wait_s = *t.t_assigned_s - t.t_request_s;
    if (t.t_assigned_s && t.t_pickup_s) rec.pickup_wait_s = *t.t_pickup_s - *t.t_assigned_s;
    if (t.t_pickup_s && t.t_dropoff_s) rec.trip_time_s = *t.t_dropoff_s - *t.t_pickup_s;
    rec.served = t.state == TravellerState::Served;
    trace.travellers.push_back(rec);
  }
  trace.vehicles.reserve(fleet.size());
  for (const Vehicle& v : fleet) {
    trace.vehicles.push_back({v.id, v.odometer_m, v.trips_served});
  }

  // Summary
  SimSummary& s = result.summary;
  s.total_requests = static_cast<int>(requests.size());
  double queue_sum = 0;
  for (const int q : trace.queue_length) {
    queue_sum += q;
    s.max_queue_length = std::max(s.max_queue_length, q);
  }
  s.mean_queue_length = n_steps > 0 ? queue_sum / static_cast<double>(n_steps) : 0;

  const ServiceStats stats = service_stats(trace, cfg.horizon_s, cfg.tail_window_fraction);
  s.lambda_per_h = stats.lambda_per_h;
  s.served = stats.served;
  s.in_flight = stats.in_flight;
  s.unserved = s.total_requests - s.served - s.in_flight;
  s.t_bar_h = stats.t_bar_h;
  s.t_bar_p_h = stats.t_bar_p_h;
  s.mean_pickup_wait_s = stats.mean_pickup_wait_s;
  s.max_pickup_wait_s = stats.max_pickup_wait_s;
  if (s.t_bar_h && s.t_bar_p_h && cfg.fleet_size > 0 && s.lambda_per_h > 0) {
    s.empirical_rho =
        utilization_with_pickup(s.lambda_per_h, cfg.fleet_size, *s.t_bar_h, *s.t_bar_p_h);
  }
  return result;
}

ServiceParams empirical_service_params(const SimResult& result) {
  const ServiceStats stats = service_stats(result.trace, result.trace.horizon_s(),
                                           result.config.tail_window_fraction);
  if (stats.served == 0 || !stats.t_bar_h) {
    throw ValidationError("no served travellers: service parameters are undefined");
  }
  ServiceParams out;
  out.t_bar_h = *stats.t_bar_h;
  out.t_bar_p_h = stats.t_bar_p_h.value_or(0.0);
  out.lambda_per_h = stats.lambda_per_h;
  return out;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

nlohmann::ordered_json summary_to_json(const SimResult& result) {
  const SimSummary& s = result.summary;
  const SimConfig& c = result.config;
  nlohmann::ordered_json j;
  j["total_requests"] = s.total_requests;
  j["served"] = s.served;
  j["in_flight"] = s.in_flight;
  j["unserved"] = s.unserved;
  j["mean_queue_length"] = s.mean_queue_length;
  j["max_queue_length"] = s.max_queue_length;
  j["lambda_per_h"] = s.lambda_per_h;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["t_bar_h"] = opt(s.t_bar_h);
  j["t_bar_p_h"] = opt(s.t_bar_p_h);
  j["mean_pickup_wait_s"] = opt(s.mean_pickup_wait_s);
  j["max_pickup_wait_s"] = opt(s.max_pickup_wait_s);
  j["empirical_rho"] = opt(s.empirical_rho);
  j["config"] = {{"dt_s", c.dt_s},
                 {"horizon_s", c.horizon_s},
                 {"fleet_size", c.fleet_size},
                 {"seed", c.rng_seed},
                 {"dwell_load_s", c.dwell_load_s},
                 {"dwell_unload_s", c.dwell_unload_s},
                 {"prefilter_k", c.prefilter_k},
                 {"vehicle_init",
                  c.vehicle_init == VehicleInit::UniformNodes ? "uniform_nodes" : "listed"},
                 {"tail_window_fraction", c.tail_window_fraction}};
  if (!result.warnings.empty()) {
    j["warnings"] = result.warnings;
  }
  return j;
}

}  // namespace

void write_sim_result(const std::string& dir, const SimResult& result) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "trace.csv");
    if (!out) throw ValidationError("cannot write " + (base / "trace.csv").string());
    out << "step,queue_length,idle_count,busy_count\n";
    for (std::size_t i = 0; i < result.trace.n_steps(); ++i) {
      out << i << ',' << result.trace.queue_length[i] << ',' << result.trace.idle_count[i]
          << ',' << result.trace.busy_count[i] << '\n';
    }
  }
  {
    std::ofstream out(base / "travellers.csv");
    if (!out) throw ValidationError("cannot write " + (base / "travellers.csv").string());
    out << "id,request_time_s,assignment_wait_s,pickup_wait_s,trip_time_s,served_flag\n";
    for (const TravellerRecord& r : result.trace.travellers) {
      out << r.id << ',' << format_double(r.request_time_s) << ','
          << opt_field(r.assignment_wait_s) << ',' << opt_field(r.pickup_wait_s) << ','
          << opt_field(r.trip_time_s) << ',' << (r.served ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(base / "summary.json");
    if (!out) throw ValidationError("cannot write " + (base / "summary.json").string());
    out << summary_to_json(result).dump(2) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ValidationError("cannot open '" + file_path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "step,queue_length,idle_count,busy_count") {
    throw ValidationError("bad trace.csv header");
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw ValidationError("bad trace.csv row at line " + std::to_string(line_no));
    rows.push_back({static_cast<int>(parse_int_field(f[0], "step", line_no)),
                    static_cast<int>(parse_int_field(f[1], "queue_length", line_no)),
                    static_cast<int>(parse_int_field(f[2], "idle_count", line_no)),
                    static_cast<int>(parse_int_field(f[3], "busy_count", line_no))});
  }
  return rows;
}

std::vector<TravellerRecord> read_travellers_csv(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ValidationError("cannot open '" + file_path + "'");
  std::string line;
  if (!std::getline(in, line) ||
      line != "id,request_time_s,assignment_wait_s,pickup_wait_s,trip_time_s,served_flag") {
    throw ValidationError("bad travellers.csv header");
  }
  std::vector<TravellerRecord> rows;
  std::size_t line_no = 1;
  auto opt = [&](std::string_view field, const char* what) -> std::optional<double> {
    if (field.empty()) return std::nullopt;
    return parse_double_field(field, what, line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw ValidationError("bad travellers.csv row at line " + std::to_string(line_no));
    }
    TravellerRecord r;
    r.id = parse_int_field(f[0], "id", line_no);
    r.request_time_s = parse_double_field(f[1], "request_time_s", line_no);
    r.assignment_wait_s = opt(f[2], "assignment_wait_s");
    r.pickup_wait_s = opt(f[3], "pickup_wait_s");
    r.trip_time_s = opt(f[4], "trip_time_s");
    r.served = parse_int_field(f[5], "served_flag", line_no) != 0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fleetsim
