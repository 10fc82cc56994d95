#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fleetsim/road_network.hpp"

namespace fleetsim {

struct TripRequest {
  std::int64_t id = 0;
  double request_time_s = 0;
  std::int64_t origin = 0;
  std::int64_t destination = 0;
  int party_size = 1;
};

/// Zonal demand: cell (i, j) carries the weight of trips from zone i to
/// zone j; each zone maps onto the network nodes it contains.
struct ODMatrix {
  std::vector<std::int64_t> zones;
  std::vector<double> cells;  ///< row-major, zones.size() squared
  std::map<std::int64_t, std::vector<std::int64_t>> zone_nodes;

  double cell(std::size_t i, std::size_t j) const { return cells[i * zones.size() + j]; }
  double& cell(std::size_t i, std::size_t j) { return cells[i * zones.size() + j]; }
};

/// Poisson arrival process: strictly increasing times in [0, horizon) with
/// i.i.d. exponential gaps of mean 3600/lambda seconds.
std::vector<double> sample_arrival_times(double lambda_per_h, double horizon_h,
                                         std::uint64_t rng_seed);

/// Uniform origin-destination pairs over distinct nodes of the network.
std::vector<std::pair<std::int64_t, std::int64_t>> sample_od_uniform(const RoadNetwork& net,
                                                                     std::uint64_t rng_seed,
                                                                     int n);

struct IpfResult {
  std::vector<double> cells;  ///< row-major, rows x cols
  int iterations = 0;
  double residual = 0;  ///< max-norm marginal deviation at exit
};

/// Iterative proportional fitting: alternately scales rows and columns of the
/// seed matrix until both marginals match within tolerance. Throws on
/// inconsistent marginal totals, an infeasible zero structure, or
/// non-convergence at the iteration cap.
IpfResult ipf_fit(const std::vector<double>& seed_cells,
                  const std::vector<double>& row_marginals,
                  const std::vector<double>& col_marginals, double tolerance = 1e-8,
                  int max_iterations = 10000);

/// Zone pair proportional to cell weight, node uniform within each zone;
/// re-draws nodes within the chosen zone pair when origin == destination.
std::vector<std::pair<std::int64_t, std::int64_t>> sample_od_zonal(const ODMatrix& od,
                                                                   std::uint64_t rng_seed,
                                                                   int n);

/// Zips arrival times with OD pairs into requests with ids 1..n.
std::vector<TripRequest> make_requests(
    const std::vector<double>& arrival_times_s,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& od_pairs);

void write_requests(const std::string& file_path, const std::vector<TripRequest>& requests);
std::vector<TripRequest> load_requests(const std::string& file_path);

ODMatrix load_od_matrix(const std::string& file_path);

}  // namespace fleetsim
