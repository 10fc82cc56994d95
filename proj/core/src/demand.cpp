#include "fleetsim/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fleetsim/errors.hpp"
#include "fleetsim/rng.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace fleetsim {

std::vector<double> sample_arrival_times(double lambda_per_h, double horizon_h,
                                         std::uint64_t rng_seed) {
  if (!(lambda_per_h > 0) || !(horizon_h > 0)) {
    throw ValidationError("sample_arrival_times needs positive lambda and horizon");
  }
  const double mean_gap_s = 3600.0 / lambda_per_h;
  const double horizon_s = horizon_h * 3600.0;
  Rng rng(rng_seed);
  std::vector<double> times;
  double t = rng.exponential(mean_gap_s);
  while (t < horizon_s) {
    times.push_back(t);
    t += rng.exponential(mean_gap_s);
  }
  return times;
}

std::vector<std::pair<std::int64_t, std::int64_t>> sample_od_uniform(const RoadNetwork& net,
                                                                     std::uint64_t rng_seed,
                                                                     int n) {
  if (net.nodes.size() < 2) {
    throw ValidationError("OD sampling needs at least two nodes in the used component");
  }
  Rng rng(rng_seed);
  const auto count = static_cast<std::int64_t>(net.nodes.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(std::max(n, 0)));
  while (pairs.size() < static_cast<std::size_t>(n)) {
    const auto i = rng.uniform_int(count);
    const auto j = rng.uniform_int(count);
    if (i == j) continue;
    pairs.emplace_back(net.nodes[i].id, net.nodes[j].id);
  }
  return pairs;
}

IpfResult ipf_fit(const std::vector<double>& seed_cells,
                  const std::vector<double>& row_marginals,
                  const std::vector<double>& col_marginals, double tolerance,
                  int max_iterations) {
  const std::size_t rows = row_marginals.size();
  const std::size_t cols = col_marginals.size();
  if (rows == 0 || cols == 0 || seed_cells.size() != rows * cols) {
    throw ValidationError("ipf_fit: seed matrix shape does not match marginals");
  }
  for (double v : seed_cells) {
    if (v < 0 || !std::isfinite(v)) throw ValidationError("ipf_fit: seed cells must be >= 0");
  }
  double row_total = 0, col_total = 0;
  for (double v : row_marginals) {
    if (v < 0) throw ValidationError("ipf_fit: marginals must be >= 0");
    row_total += v;
  }
  for (double v : col_marginals) {
    if (v < 0) throw ValidationError("ipf_fit: marginals must be >= 0");
    col_total += v;
  }
  const double scale = std::max({std::abs(row_total), std::abs(col_total), 1.0});
  if (std::abs(row_total - col_total) > 1e-9 * scale) {
    throw ValidationError("ipf_fit: row marginal total " + format_double(row_total) +
                          " differs from column marginal total " + format_double(col_total));
  }

  // A positive marginal over an all-zero seed row/column can never be met.
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += seed_cells[i * cols + j];
    if (s == 0 && row_marginals[i] > 0) {
      throw ValidationError("ipf_fit: row " + std::to_string(i) +
                            " has zero seed but positive marginal");
    }
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < rows; ++i) s += seed_cells[i * cols + j];
    if (s == 0 && col_marginals[j] > 0) {
      throw ValidationError("ipf_fit: column " + std::to_string(j) +
                            " has zero seed but positive marginal");
    }
  }

  IpfResult result;
  result.cells = seed_cells;
  auto residual = [&]() {
    double worst = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < cols; ++j) s += result.cells[i * cols + j];
      worst = std::max(worst, std::abs(s - row_marginals[i]));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < rows; ++i) s += result.cells[i * cols + j];
      worst = std::max(worst, std::abs(s - col_marginals[j]));
    }
    return worst;
  };

  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    result.residual = residual();
    if (result.residual <= tolerance) {
      return result;
    }
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < cols; ++j) s += result.cells[i * cols + j];
      const double f = s > 0 ? row_marginals[i] / s : 0.0;
      for (std::size_t j = 0; j < cols; ++j) result.cells[i * cols + j] *= f;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < rows; ++i) s += result.cells[i * cols + j];
      const double f = s > 0 ? col_marginals[j] / s : 0.0;
      for (std::size_t i = 0; i < rows; ++i) result.cells[i * cols + j] *= f;
    }
  }
  result.residual = residual();
  if (result.residual > tolerance) {
    throw ValidationError("ipf_fit: no convergence after " + std::to_string(max_iterations) +
                          " iterations, residual " + format_double(result.residual));
  }
  return result;
}

std::vector<std::pair<std::int64_t, std::int64_t>> sample_od_zonal(const ODMatrix& od,
                                                                   std::uint64_t rng_seed,
                                                                   int n) {
  const std::size_t z = od.zones.size();
  if (z == 0 || od.cells.size() != z * z) {
    throw ValidationError("sample_od_zonal: matrix shape does not match zones");
  }
  std::vector<double> cdf(od.cells.size());
  double total = 0;
  for (std::size_t k = 0; k < od.cells.size(); ++k) {
    if (od.cells[k] < 0) throw ValidationError("sample_od_zonal: negative cell weight");
    total += od.cells[k];
    cdf[k] = total;
  }
  if (total <= 0) {
    throw ValidationError("sample_od_zonal: all cells are zero");
  }
  for (std::size_t i = 0; i < z; ++i) {
    auto it = od.zone_nodes.find(od.zones[i]);
    if (it == od.zone_nodes.end() || it->second.empty()) {
      throw ValidationError("sample_od_zonal: zone " + std::to_string(od.zones[i]) +
                            " has no nodes");
    }
  }

  Rng rng(rng_seed);
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  constexpr int kMaxNodeDraws = 100;
  while (out.size() < static_cast<std::size_t>(n)) {
    const double u = rng.uniform() * total;
    const std::size_t k =
        static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t zi = k / z, zj = k % z;
    const auto& from_nodes = od.zone_nodes.at(od.zones[zi]);
    const auto& to_nodes = od.zone_nodes.at(od.zones[zj]);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxNodeDraws; ++attempt) {
      const std::int64_t o = from_nodes[rng.uniform_int(static_cast<std::int64_t>(from_nodes.size()))];
      const std::int64_t d = to_nodes[rng.uniform_int(static_cast<std::int64_t>(to_nodes.size()))];
      if (o != d) {
        out.emplace_back(o, d);
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw ValidationError("sample_od_zonal: cannot draw origin != destination for zone pair " +
                            std::to_string(od.zones[zi]) + "->" + std::to_string(od.zones[zj]));
    }
  }
  return out;
}

std::vector<TripRequest> make_requests(
    const std::vector<double>& arrival_times_s,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& od_pairs) {
  if (arrival_times_s.size() != od_pairs.size()) {
    throw ValidationError("make_requests: times and OD pairs differ in length");
  }
  std::vector<TripRequest> requests;
  requests.reserve(arrival_times_s.size());
  for (std::size_t i = 0; i < arrival_times_s.size(); ++i) {
    requests.push_back({static_cast<std::int64_t>(i + 1), arrival_times_s[i],
                        od_pairs[i].first, od_pairs[i].second, 1});
  }
  return requests;
}

namespace {
constexpr const char* kRequestHeader = "id,request_time_s,origin_node,destination_node,party_size";
}

void write_requests(const std::string& file_path, const std::vector<TripRequest>& requests) {
  double last_time = -std::numeric_limits<double>::infinity();
  for (const TripRequest& r : requests) {
    if (r.request_time_s < last_time) {
      throw ValidationError("requests must be sorted by request_time before writing");
    }
    if (r.origin == r.destination) {
      throw ValidationError("request " + std::to_string(r.id) + " has origin == destination");
    }
    last_time = r.request_time_s;
  }
  std::ofstream out(file_path);
  if (!out) {
    throw ValidationError("cannot write request file '" + file_path + "'");
  }
  out << kRequestHeader << '\n';
  for (const TripRequest& r : requests) {
    out << r.id << ',' << format_double(r.request_time_s) << ',' << r.origin << ','
        << r.destination << ',' << r.party_size << '\n';
  }
}

std::vector<TripRequest> load_requests(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) {
    throw ValidationError("cannot open request file '" + file_path + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != kRequestHeader) {
    throw ValidationError("request file must start with header '" +
                          std::string(kRequestHeader) + "'");
  }
  std::vector<TripRequest> requests;
  std::unordered_map<std::int64_t, std::size_t> seen;
  double last_time = -std::numeric_limits<double>::infinity();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                            std::to_string(fields.size()));
    }
    TripRequest r;
    r.id = parse_int_field(fields[0], "id", line_no);
    r.request_time_s = parse_double_field(fields[1], "request_time_s", line_no);
    r.origin = parse_int_field(fields[2], "origin_node", line_no);
    r.destination = parse_int_field(fields[3], "destination_node", line_no);
    r.party_size = static_cast<int>(parse_int_field(fields[4], "party_size", line_no));
    if (r.request_time_s < 0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative request_time_s");
    }
    if (r.request_time_s < last_time) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": requests not sorted by request_time_s");
    }
    if (r.origin == r.destination) {
      throw ValidationError("line " + std::to_string(line_no) + ": origin == destination");
    }
    if (r.party_size < 1) {
      throw ValidationError("line " + std::to_string(line_no) + ": party_size must be >= 1");
    }
    if (!seen.emplace(r.id, line_no).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate id " +
                            std::to_string(r.id) + " (first seen at line " +
                            std::to_string(seen[r.id]) + ")");
    }
    last_time = r.request_time_s;
    requests.push_back(r);
  }
  return requests;
}

ODMatrix load_od_matrix(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) {
    throw ValidationError("cannot open OD matrix file '" + file_path + "'");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed OD matrix file: " + std::string(e.what()));
  }
  ODMatrix od;
  if (!doc.contains("zones") || !doc["zones"].is_array()) {
    throw ValidationError("OD matrix file needs a 'zones' array");
  }
  for (const auto& z : doc["zones"]) od.zones.push_back(z.get<std::int64_t>());
  const std::size_t z = od.zones.size();
  if (!doc.contains("cells") || !doc["cells"].is_array() || doc["cells"].size() != z) {
    throw ValidationError("OD matrix 'cells' must be a zones x zones array");
  }
  for (const auto& row : doc["cells"]) {
    if (!row.is_array() || row.size() != z) {
      throw ValidationError("OD matrix 'cells' must be a zones x zones array");
    }
    for (const auto& v : row) od.cells.push_back(v.get<double>());
  }
  if (!doc.contains("zone_nodes") || !doc["zone_nodes"].is_object()) {
    throw ValidationError("OD matrix file needs a 'zone_nodes' object");
  }
  for (const std::int64_t zone : od.zones) {
    const std::string key = std::to_string(zone);
    if (!doc["zone_nodes"].contains(key)) {
      throw ValidationError("zone_nodes is missing zone " + key);
    }
    std::vector<std::int64_t> nodes;
    for (const auto& v : doc["zone_nodes"][key]) nodes.push_back(v.get<std::int64_t>());
    if (nodes.empty()) {
      throw ValidationError("zone " + key + " maps to no nodes");
    }
    od.zone_nodes[zone] = std::move(nodes);
  }
  return od;
}

}  // namespace fleetsim
