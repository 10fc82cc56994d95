#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/errors.hpp"
#include "fleetsim/experiment.hpp"
#include "fleetsim/queueing.hpp"
#include "fleetsim/rng.hpp"
#include "fleetsim/road_network.hpp"
#include "fleetsim/sim_engine.hpp"
#include "json.hpp"

namespace {

using namespace fleetsim;

struct GridSpec {
  int rows = 0;
  int cols = 0;
};

GridSpec parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    throw ValidationError("--grid expects ROWSxCOLS, e.g. 40x40");
  }
  GridSpec g;
  g.rows = std::stoi(s.substr(0, x));
  g.cols = std::stoi(s.substr(x + 1));
  return g;
}

std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> sizes;
  if (s.find(':') != std::string::npos) {
    int lo = 0, hi = 0, stride = 1;
    const auto a = s.find(':');
    const auto b = s.find(':', a + 1);
    lo = std::stoi(s.substr(0, a));
    if (b == std::string::npos) {
      hi = std::stoi(s.substr(a + 1));
    } else {
      hi = std::stoi(s.substr(a + 1, b - a - 1));
      stride = std::stoi(s.substr(b + 1));
    }
    if (stride <= 0 || hi < lo) throw ValidationError("--sizes range must be lo:hi[:stride]");
    for (int c = lo; c <= hi; c += stride) sizes.push_back(c);
    return sizes;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string tok =
        comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start);
    if (!tok.empty()) sizes.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

double default_horizon_s(const std::vector<TripRequest>& requests) {
  if (requests.empty()) return 3600.0;
  return std::ceil((requests.back().request_time_s + 1.0) / 3600.0) * 3600.0;
}

RoadNetwork load_and_reduce(const std::string& path, double reduce_res_motorway,
                            double reduce_other) {
  RoadNetwork net = load_network(path);
  if (net.dropped_nodes > 0 || net.dropped_links > 0) {
    std::cerr << "note: dropped " << net.dropped_nodes << " nodes and " << net.dropped_links
              << " links outside the largest strongly connected component\n";
  }
  if (reduce_res_motorway != 1.0 || reduce_other != 1.0) {
    net = apply_speed_reduction(std::move(net), reduce_res_motorway, reduce_other);
  }
  return net;
}

int cmd_gen_network(const std::string& grid, double block_m, double speed_kmh,
                    std::optional<double> area_override, std::optional<double> phi_override,
                    const std::string& out) {
  const GridSpec g = parse_grid(grid);
  RoadNetwork net = generate_grid(g.rows, g.cols, block_m, speed_kmh);
  net.area_override_km2 = area_override;
  net.phi_override = phi_override;
  write_network(out, net);
  std::cout << "wrote " << out << ": " << net.nodes.size() << " nodes, " << net.links.size()
            << " links\n";
  return 0;
}

int cmd_gen_demand(const std::string& net_path, double lambda_per_h, double horizon_h,
                   std::uint64_t seed, const std::string& od_mode,
                   const std::string& matrix_path, const std::string& out) {
  const RoadNetwork net = load_network(net_path);
  const auto times = sample_arrival_times(lambda_per_h, horizon_h, seed);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const std::uint64_t od_seed = derive_seed(seed, 0x0d, 0);
  if (od_mode == "uniform") {
    pairs = sample_od_uniform(net, od_seed, static_cast<int>(times.size()));
  } else if (od_mode == "zonal") {
    if (matrix_path.empty()) {
      throw ValidationError("--od zonal needs --matrix");
    }
    const ODMatrix od = load_od_matrix(matrix_path);
    for (const auto& [zone, nodes] : od.zone_nodes) {
      for (const std::int64_t node : nodes) {
        if (!net.has_node(node)) {
          throw ValidationError("zone " + std::to_string(zone) + " references node " +
                                std::to_string(node) + " outside the used component");
        }
      }
    }
    pairs = sample_od_zonal(od, od_seed, static_cast<int>(times.size()));
  } else {
    throw ValidationError("--od must be 'uniform' or 'zonal'");
  }
  const auto requests = make_requests(times, pairs);
  write_requests(out, requests);
  std::cout << "wrote " << out << ": " << requests.size() << " requests over "
            << horizon_h << " h\n";
  return 0;
}

int cmd_simulate(const std::string& net_path, const std::string& req_path, int fleet,
                 std::uint64_t seed, double horizon_h, double dt_s, double dwell_load_s,
                 double dwell_unload_s, int prefilter_k, double reduce_rm, double reduce_other,
                 double tail_fraction, const std::string& out_dir) {
  const RoadNetwork net = load_and_reduce(net_path, reduce_rm, reduce_other);
  const auto requests = load_requests(req_path);
  SimConfig cfg;
  cfg.dt_s = dt_s;
  cfg.horizon_s = horizon_h > 0 ? horizon_h * 3600.0 : default_horizon_s(requests);
  cfg.fleet_size = fleet;
  cfg.rng_seed = seed;
  cfg.dwell_load_s = dwell_load_s;
  cfg.dwell_unload_s = dwell_unload_s;
  cfg.prefilter_k = prefilter_k;
  cfg.tail_window_fraction = tail_fraction;
  const SimResult result = run_simulation(net, requests, cfg);
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_sim_result(out_dir, result);
  std::cout << "served " << result.summary.served << "/" << result.summary.total_requests
            << ", mean queue " << result.summary.mean_queue_length << ", results in " << out_dir
            << '\n';
  return 0;
}

int cmd_sweep(const std::string& net_path, const std::string& req_path,
              const std::string& sizes_arg, bool bisect, std::uint64_t seed, double horizon_h,
              double dt_s, int prefilter_k, double reduce_rm, double reduce_other,
              double window_s, double slope_tol, double level_factor, int replications,
              const std::string& out_dir) {
  const RoadNetwork net = load_and_reduce(net_path, reduce_rm, reduce_other);
  const auto requests = load_requests(req_path);

  SimConfig base;
  base.dt_s = dt_s;
  base.horizon_s = horizon_h > 0 ? horizon_h * 3600.0 : default_horizon_s(requests);
  base.rng_seed = seed;
  base.prefilter_k = prefilter_k;
  StabilitySettings stability{window_s, slope_tol, level_factor};

  if (bisect) {
    CriticalSearch search;
    search.base = base;
    search.stability = stability;
    const CriticalBracket bracket = find_critical_fleet_size(net, requests, search);
    std::filesystem::create_directories(out_dir);
    write_sweep_csv((std::filesystem::path(out_dir) / "sweep.csv").string(),
                    bracket.evaluated);
    nlohmann::ordered_json j;
    j["largest_unstable"] = bracket.largest_unstable;
    j["c_star"] = bracket.smallest_stable;
    std::ofstream out(std::filesystem::path(out_dir) / "bisect.json");
    out << j.dump(2) << '\n';
    std::cout << "critical fleet size bracket: (" << bracket.largest_unstable << ", "
              << bracket.smallest_stable << "]\n";
    return 0;
  }

  SweepSpec spec;
  spec.fleet_sizes = parse_sizes(sizes_arg);
  spec.base = base;
  spec.stability = stability;
  spec.replications = replications;
  const auto entries = run_sweep_to_dir(net, requests, spec, out_dir);
  for (const SweepEntry& e : entries) {
    std::cout << "c=" << e.fleet_size << " rep=" << e.replication << " -> "
              << (e.error ? "error: " + *e.error
                          : std::string(e.verdict.stable ? "stable" : "unstable"))
              << '\n';
  }
  return 0;
}

struct FluidOptions {
  double dt_s = 60.0;
  double horizon_s = 4 * 3600.0;
  std::optional<double> v0;
};

int cmd_analytic(const std::string& params_path, const QueueParams& flag_params,
                 bool flags_given, const std::string& out_path,
                 const std::string& fluid_trace_path) {
  QueueParams p = flag_params;
  FluidOptions fluid_opts;
  if (!params_path.empty()) {
    std::ifstream in(params_path);
    if (!in) throw ValidationError("cannot open params file '" + params_path + "'");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed params file: " + std::string(e.what()));
    }
    if (!doc.contains("lambda_per_h") || !doc.contains("t_bar_h") || !doc.contains("c")) {
      throw ValidationError("params need lambda_per_h, t_bar_h and c");
    }
    p.lambda_per_h = doc["lambda_per_h"].get<double>();
    p.t_bar_h = doc["t_bar_h"].get<double>();
    p.c = doc["c"].get<std::int64_t>();
    p.psi = doc.value("psi", 1.0);
    p.phi = doc.value("phi", 1.0);
    p.area_km2 = doc.value("area_km2", 0.0);
    p.v_bar_kmh = doc.value("v_bar_kmh", 0.0);
    if (doc.contains("t_bar_p_h") && !doc["t_bar_p_h"].is_null()) {
      p.t_bar_p_h = doc["t_bar_p_h"].get<double>();
    }
    if (doc.contains("fluid") && doc["fluid"].is_object()) {
      fluid_opts.dt_s = doc["fluid"].value("dt_s", fluid_opts.dt_s);
      fluid_opts.horizon_s = doc["fluid"].value("horizon_s", fluid_opts.horizon_s);
      if (doc["fluid"].contains("v0")) fluid_opts.v0 = doc["fluid"]["v0"].get<double>();
    }
  } else if (!flags_given) {
    throw ValidationError("analytic needs --params or the --lambda-per-h/--t-bar-h/--c flags");
  }

  const double mu = p.t_bar_p_h ? service_rate_with_pickup(p.t_bar_h, *p.t_bar_p_h)
                                : 1.0 / p.t_bar_h;
  const double rho = utilization(p.lambda_per_h, p.c, mu);
  const MinFleet fleet = min_fleet_base(p.lambda_per_h, mu);

  nlohmann::ordered_json j;
  j["lambda_per_h"] = p.lambda_per_h;
  j["t_bar_h"] = p.t_bar_h;
  j["t_bar_p_h"] = p.t_bar_p_h ? nlohmann::ordered_json(*p.t_bar_p_h)
                               : nlohmann::ordered_json(nullptr);
  j["c"] = p.c;
  j["mu_per_h"] = mu;
  j["rho"] = rho;
  j["min_fleet"] = {{"exact", fleet.exact},
                    {"ceil", fleet.ceil},
                    {"smallest_stable", fleet.smallest_stable}};
  j["stable"] = rho < 1.0;
  if (rho < 1.0) {
    const QueueMetrics m = mmc_metrics(p);
    j["erlang_c"] = m.erlang_c;
    j["p0_empty"] = m.p0_empty;
    j["lq"] = m.lq;
    j["wq_h"] = m.wq_h;
    j["w_h"] = m.w_h;
    j["l"] = m.l;
  }

  const bool spatial = p.area_km2 > 0 && p.v_bar_kmh > 0;
  if (spatial) {
    const double v_per_s = p.lambda_per_h / 3600.0;
    j["pickup"] = {{"v_per_second_arrivals", v_per_s},
                   {"tp_at_per_second_arrivals_min",
                    pickup_wait_h(p.area_km2, p.psi, v_per_s, p.phi, p.v_bar_kmh) * 60.0}};
  }

  const double fluid_dt_s = fluid_opts.dt_s;
  const double fluid_horizon_s = fluid_opts.horizon_s;
  const double fluid_v0 = fluid_opts.v0.value_or(static_cast<double>(p.c));
  if (spatial) {
    const PickupModel model = spatial_pickup_model(p.area_km2, p.psi, p.phi, p.v_bar_kmh);
    j["pickup"]["min_fleet_fluid"] =
        min_fleet_fluid(p.lambda_per_h, p.t_bar_h, model, fluid_dt_s, fluid_horizon_s);
    if (!fluid_trace_path.empty()) {
      const FluidTrace trace =
          fluid_recursion(p.lambda_per_h, p.t_bar_h, model, fluid_v0, fluid_dt_s, fluid_horizon_s);
      std::ofstream out(fluid_trace_path);
      if (!out) throw ValidationError("cannot write '" + fluid_trace_path + "'");
      out << "step,v_idle,v_in,v_out,feasible_flag\n";
      for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const FluidStep& st = trace.steps[t];
        out << t << ',' << st.v_idle << ',' << st.v_in << ',' << st.v_out << ','
            << (st.feasible ? 1 : 0) << '\n';
      }
      j["fluid"] = {{"v0", fluid_v0},
                    {"dt_s", fluid_dt_s},
                    {"horizon_s", fluid_horizon_s},
                    {"feasible", trace.feasible},
                    {"min_v", trace.min_v}};
    }
  } else if (!fluid_trace_path.empty()) {
    throw ValidationError("--fluid-trace needs area_km2 and v_bar_kmh in the params file");
  }

  std::ofstream out(out_path);
  if (!out) throw ValidationError("cannot write '" + out_path + "'");
  out << j.dump(2) << '\n';
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fleetsim: autonomous ride-sourcing fleet simulator and M/M/c toolkit"};
  app.require_subcommand(1);

  // gen-network
  auto* gen_net = app.add_subcommand("gen-network", "generate a synthetic grid network");
  std::string grid = "10x10", net_out = "net.json";
  double block_m = 200, speed_kmh = 30;
  std::optional<double> area_override, phi_override;
  gen_net->add_option("--grid", grid, "grid dimensions ROWSxCOLS")->required();
  gen_net->add_option("--block-m", block_m, "block edge length in meters")->required();
  gen_net->add_option("--speed-kmh", speed_kmh, "uniform free-flow speed")->required();
  gen_net->add_option("--area-km2", area_override, "override the derived network area");
  gen_net->add_option("--phi", phi_override, "override the estimated circuity factor");
  gen_net->add_option("--out", net_out, "output network JSON")->required();

  // gen-demand
  auto* gen_dem = app.add_subcommand("gen-demand", "sample trip requests");
  std::string dem_net, dem_out = "req.csv", od_mode = "uniform", matrix_path;
  double lambda_per_h = 0, horizon_h = 0;
  std::uint64_t dem_seed = 0;
  gen_dem->add_option("--net", dem_net, "network JSON")->required();
  gen_dem->add_option("--lambda-per-h", lambda_per_h, "request rate per hour")->required();
  gen_dem->add_option("--horizon-h", horizon_h, "demand horizon in hours")->required();
  gen_dem->add_option("--seed", dem_seed, "RNG seed")->required();
  gen_dem->add_option("--od", od_mode, "OD sampling: uniform | zonal");
  gen_dem->add_option("--matrix", matrix_path, "OD matrix JSON for zonal sampling");
  gen_dem->add_option("--out", dem_out, "output request CSV")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one simulation");
  std::string sim_net, sim_req, sim_out = "out";
  int fleet = 0, prefilter_k = 16;
  std::uint64_t sim_seed = 0;
  double sim_horizon_h = 0, dt_s = 1.0, dwell_load_s = 0, dwell_unload_s = 0;
  double reduce_rm = 1.0, reduce_other = 1.0, tail_fraction = 1.0 / 3.0;
  sim->add_option("--net", sim_net)->required();
  sim->add_option("--req", sim_req)->required();
  sim->add_option("--fleet", fleet, "fleet size")->required();
  sim->add_option("--seed", sim_seed)->required();
  sim->add_option("--horizon-h", sim_horizon_h, "default: whole hours covering the demand");
  sim->add_option("--dt-s", dt_s, "time step (default 1 s)");
  sim->add_option("--dwell-load-s", dwell_load_s);
  sim->add_option("--dwell-unload-s", dwell_unload_s);
  sim->add_option("--prefilter-k", prefilter_k, "nearest-candidate pre-filter size");
  sim->add_option("--reduce-res-motorway", reduce_rm,
                  "speed factor for residential/motorway links");
  sim->add_option("--reduce-other", reduce_other, "speed factor for other links");
  sim->add_option("--tail-fraction", tail_fraction, "steady-state window fraction");
  sim->add_option("--out-dir", sim_out)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "fleet-size sweep or critical-size bisection");
  std::string sw_net, sw_req, sizes_arg, sw_out = "sweep_out";
  bool bisect = false;
  std::uint64_t sw_seed = 0;
  double sw_horizon_h = 0, sw_dt_s = 1.0, window_s = 0, slope_tol = 0, level_factor = 3.0;
  double sw_reduce_rm = 1.0, sw_reduce_other = 1.0;
  int sw_prefilter_k = 16, replications = 1;
  sw->add_option("--net", sw_net)->required();
  sw->add_option("--req", sw_req)->required();
  sw->add_option("--sizes", sizes_arg, "comma list or lo:hi[:stride]");
  sw->add_flag("--bisect", bisect, "bisect for the critical fleet size");
  sw->add_option("--seed", sw_seed)->required();
  sw->add_option("--horizon-h", sw_horizon_h);
  sw->add_option("--dt-s", sw_dt_s);
  sw->add_option("--window-s", window_s, "stability window (default: final third)");
  sw->add_option("--slope-tol-per-h", slope_tol, "queue slope tolerance (default 0.05*lambda)");
  sw->add_option("--level-factor", level_factor, "queue level bound in lambda*dt units");
  sw->add_option("--replications", replications);
  sw->add_option("--prefilter-k", sw_prefilter_k);
  sw->add_option("--reduce-res-motorway", sw_reduce_rm);
  sw->add_option("--reduce-other", sw_reduce_other);
  sw->add_option("--out-dir", sw_out)->required();

  // analytic
  auto* an = app.add_subcommand("analytic", "M/M/c metrics from a params file or flags");
  std::string params_path, metrics_out = "metrics.json", fluid_trace_path;
  QueueParams flag_params;
  double flag_t_bar_p = -1;
  an->add_option("--params", params_path, "params JSON (overrides the flags)");
  auto* flag_lambda = an->add_option("--lambda-per-h", flag_params.lambda_per_h);
  auto* flag_t_bar = an->add_option("--t-bar-h", flag_params.t_bar_h);
  auto* flag_c = an->add_option("--c", flag_params.c);
  an->add_option("--area-km2", flag_params.area_km2);
  an->add_option("--phi", flag_params.phi);
  an->add_option("--psi", flag_params.psi);
  an->add_option("--v-bar-kmh", flag_params.v_bar_kmh);
  an->add_option("--t-bar-p-h", flag_t_bar_p);
  an->add_option("--out", metrics_out)->required();
  an->add_option("--fluid-trace", fluid_trace_path, "also write the fluid recursion CSV");

  try {
    app.parse(argc, argv);
    if (gen_net->parsed()) {
      return cmd_gen_network(grid, block_m, speed_kmh, area_override, phi_override, net_out);
    }
    if (gen_dem->parsed()) {
      return cmd_gen_demand(dem_net, lambda_per_h, horizon_h, dem_seed, od_mode, matrix_path,
                            dem_out);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_net, sim_req, fleet, sim_seed, sim_horizon_h, dt_s, dwell_load_s,
                          dwell_unload_s, prefilter_k, reduce_rm, reduce_other, tail_fraction,
                          sim_out);
    }
    if (sw->parsed()) {
      if (!bisect && sizes_arg.empty()) {
        throw ValidationError("sweep needs --sizes or --bisect");
      }
      return cmd_sweep(sw_net, sw_req, sizes_arg, bisect, sw_seed, sw_horizon_h, sw_dt_s,
                       sw_prefilter_k, sw_reduce_rm, sw_reduce_other, window_s, slope_tol,
                       level_factor, replications, sw_out);
    }
    if (an->parsed()) {
      if (flag_t_bar_p >= 0) flag_params.t_bar_p_h = flag_t_bar_p;
      const bool flags_given =
          flag_lambda->count() > 0 && flag_t_bar->count() > 0 && flag_c->count() > 0;
      return cmd_analytic(params_path, flag_params, flags_given, metrics_out,
                          fluid_trace_path);
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  } catch (const fleetsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
