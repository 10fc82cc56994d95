#include "fleetsim/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stack>

#include "fleetsim/errors.hpp"
#include "fleetsim/rng.hpp"

namespace fleetsim {

HighwayClass highway_class_from_string(const std::string& s) {
  if (s == "residential") return HighwayClass::Residential;
  if (s == "motorway") return HighwayClass::Motorway;
  if (s == "other") return HighwayClass::Other;
  throw ValidationError("unknown highway class '" + s + "'");
}

std::string to_string(HighwayClass c) {
  switch (c) {
    case HighwayClass::Residential: return "residential";
    case HighwayClass::Motorway: return "motorway";
    case HighwayClass::Other: return "other";
  }
  return "other";
}

std::string to_string(CoordinateSystem cs) {
  return cs == CoordinateSystem::LonLat ? "lonlat" : "planar_m";
}

std::size_t RoadNetwork::node_index(std::int64_t id) const {
  auto it = index_of.find(id);
  if (it == index_of.end()) {
    throw ValidationError("node id " + std::to_string(id) + " is not in the network");
  }
  return static_cast<std::size_t>(it->second);
}

double RoadNetwork::straight_line_m(const RoadNode& a, const RoadNode& b) const {
  if (coord_system == CoordinateSystem::LonLat) {
    return haversine_m(a.x, a.y, b.x, b.y);
  }
  return euclidean_m(a.x, a.y, b.x, b.y);
}

double RoadNetwork::straight_line_m(std::int64_t a, std::int64_t b) const {
  return straight_line_m(node(a), node(b));
}

namespace {

// Iterative Tarjan; returns the component id of every node and the id of the
// largest component.
std::pair<std::vector<int>, int> strongly_connected_components(
    std::size_t n, const std::vector<std::vector<std::int32_t>>& adj) {
  std::vector<int> comp(n, -1);
  std::vector<int> low(n, 0), disc(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::int32_t> stack;
  int timer = 0;
  int n_comps = 0;
  std::vector<std::size_t> comp_size;

  struct Frame {
    std::int32_t v;
    std::size_t edge;
  };
  std::vector<Frame> call;

  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    call.push_back({static_cast<std::int32_t>(root), 0});
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0) {
        disc[v] = low[v] = timer++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (edge < adj[v].size()) {
        const std::int32_t w = adj[v][edge++];
        if (disc[w] == -1) {
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], disc[w]);
        }
        continue;
      }
      if (low[v] == disc[v]) {
        std::size_t size = 0;
        while (true) {
          const std::int32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = n_comps;
          ++size;
          if (w == v) break;
        }
        comp_size.push_back(size);
        ++n_comps;
      }
      const std::int32_t child = v;
      call.pop_back();
      if (!call.empty()) {
        low[call.back().v] = std::min(low[call.back().v], low[child]);
      }
    }
  }

  int largest = 0;
  for (int c = 1; c < n_comps; ++c) {
    if (comp_size[c] > comp_size[largest]) largest = c;
  }
  return {std::move(comp), largest};
}

}  // namespace

RoadNetwork finalize_network(CoordinateSystem cs, std::vector<RoadNode> nodes,
                             std::vector<RoadLink> links,
                             std::optional<double> area_override_km2,
                             std::optional<double> phi_override) {
  if (nodes.empty()) {
    throw ValidationError("network has no nodes");
  }
  std::unordered_map<std::int64_t, std::int32_t> index;
  index.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!std::isfinite(nodes[i].x) || !std::isfinite(nodes[i].y)) {
      throw ValidationError("node " + std::to_string(nodes[i].id) +
                            " has non-finite coordinates");
    }
    if (!index.emplace(nodes[i].id, static_cast<std::int32_t>(i)).second) {
      throw ValidationError("duplicate node id " + std::to_string(nodes[i].id));
    }
  }
  for (const RoadLink& l : links) {
    const std::string name =
        "link " + std::to_string(l.from) + "->" + std::to_string(l.to);
    if (!index.count(l.from) || !index.count(l.to)) {
      throw ValidationError(name + " references an unknown node");
    }
    if (!(l.length_m > 0) || !std::isfinite(l.length_m)) {
      throw ValidationError(name + " has non-positive length_m " +
                            std::to_string(l.length_m));
    }
    if (!(l.free_speed_kmh > 0) || !std::isfinite(l.free_speed_kmh)) {
      throw ValidationError(name + " has non-positive speed_kmh " +
                            std::to_string(l.free_speed_kmh));
    }
    if (!(l.effective_speed_kmh > 0) || l.effective_speed_kmh > l.free_speed_kmh + 1e-9) {
      throw ValidationError(name + " has effective speed outside (0, free_speed]");
    }
  }
  if (area_override_km2 && !(*area_override_km2 > 0)) {
    throw ValidationError("area_km2_override must be positive");
  }
  if (phi_override && !(*phi_override >= 1.0)) {
    throw ValidationError("phi_override must be >= 1");
  }

  std::vector<std::vector<std::int32_t>> adj(nodes.size());
  for (const RoadLink& l : links) {
    adj[index.at(l.from)].push_back(index.at(l.to));
  }
  const auto [comp, keep] = strongly_connected_components(nodes.size(), adj);

  RoadNetwork net;
  net.coord_system = cs;
  net.area_override_km2 = area_override_km2;
  net.phi_override = phi_override;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (comp[i] == keep) {
      net.index_of.emplace(nodes[i].id, static_cast<std::int32_t>(net.nodes.size()));
      net.nodes.push_back(nodes[i]);
    } else {
      ++net.dropped_nodes;
    }
  }
  if (net.nodes.empty()) {
    throw ValidationError("network is empty after component restriction");
  }
  net.out_links.resize(net.nodes.size());
  double weighted_speed = 0;
  double total_length = 0;
  for (const RoadLink& l : links) {
    if (comp[index.at(l.from)] != keep || comp[index.at(l.to)] != keep) {
      ++net.dropped_links;
      continue;
    }
    const auto li = static_cast<std::int32_t>(net.links.size());
    net.links.push_back(l);
    net.out_links[net.node_index(l.from)].push_back(li);
    net.max_effective_speed_kmh = std::max(net.max_effective_speed_kmh, l.effective_speed_kmh);
    weighted_speed += l.effective_speed_kmh * l.length_m;
    total_length += l.length_m;
  }
  net.mean_effective_speed_kmh = total_length > 0 ? weighted_speed / total_length : 0;
  return net;
}

RoadNetwork generate_grid(int rows, int cols, double block_m, double speed_kmh) {
  if (rows < 2 || cols < 2) {
    throw ValidationError("grid needs rows >= 2 and cols >= 2");
  }
  if (!(block_m > 0) || !(speed_kmh > 0)) {
    throw ValidationError("grid block_m and speed_kmh must be positive");
  }
  std::vector<RoadNode> nodes;
  nodes.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      nodes.push_back({static_cast<std::int64_t>(r) * cols + c, c * block_m, r * block_m});
    }
  }
  std::vector<RoadLink> links;
  auto connect = [&](std::int64_t a, std::int64_t b) {
    links.push_back({a, b, block_m, speed_kmh, HighwayClass::Other, speed_kmh});
    links.push_back({b, a, block_m, speed_kmh, HighwayClass::Other, speed_kmh});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::int64_t id = static_cast<std::int64_t>(r) * cols + c;
      if (c + 1 < cols) connect(id, id + 1);
      if (r + 1 < rows) connect(id, id + cols);
    }
  }
  return finalize_network(CoordinateSystem::PlanarM, std::move(nodes), std::move(links));
}

RoadNetwork apply_speed_reduction(RoadNetwork net, double residential_motorway_factor,
                                  double other_factor) {
  for (double f : {residential_motorway_factor, other_factor}) {
    if (!(f > 0) || f > 1.0) {
      throw ValidationError("speed reduction factors must lie in (0, 1]");
    }
  }
  double weighted_speed = 0;
  double total_length = 0;
  net.max_effective_speed_kmh = 0;
  for (RoadLink& l : net.links) {
    const double factor =
        l.klass == HighwayClass::Other ? other_factor : residential_motorway_factor;
    l.effective_speed_kmh = l.free_speed_kmh * factor;
    net.max_effective_speed_kmh = std::max(net.max_effective_speed_kmh, l.effective_speed_kmh);
    weighted_speed += l.effective_speed_kmh * l.length_m;
    total_length += l.length_m;
  }
  net.mean_effective_speed_kmh = total_length > 0 ? weighted_speed / total_length : 0;
  return net;
}

Path shortest_path(const RoadNetwork& net, std::int64_t origin, std::int64_t destination) {
  const auto src = static_cast<std::int32_t>(net.node_index(origin));
  const auto dst = static_cast<std::int32_t>(net.node_index(destination));
  Path path;
  if (src == dst) {
    path.nodes.push_back(origin);
    return path;
  }

  const double vmax_mps = net.max_effective_speed_kmh / 3.6;
  const std::size_t n = net.nodes.size();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> parent_link(n, -1);
  std::vector<bool> closed(n, false);

  using Entry = std::pair<double, std::int32_t>;  // (f, node index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const RoadNode& goal = net.nodes[dst];

  auto heuristic = [&](std::int32_t v) {
    return net.straight_line_m(net.nodes[v], goal) / vmax_mps;
  };

  g[src] = 0;
  open.emplace(heuristic(src), src);
  while (!open.empty()) {
    const auto [f, v] = open.top();
    open.pop();
    if (closed[v]) continue;
    closed[v] = true;
    if (v == dst) break;
    for (const std::int32_t li : net.out_links[v]) {
      const RoadLink& l = net.links[li];
      const auto w = static_cast<std::int32_t>(net.node_index(l.to));
      if (closed[w]) continue;
      const double cand = g[v] + l.travel_time_s();
      if (cand < g[w]) {
        g[w] = cand;
        parent_link[w] = li;
        open.emplace(cand + heuristic(w), w);
      }
    }
  }

  if (!closed[dst]) {
    // Cannot happen on a component-restricted network.
    throw SimulationError("no path from " + std::to_string(origin) + " to " +
                          std::to_string(destination));
  }

  std::vector<std::int32_t> rev;
  for (std::int32_t v = dst; v != src;) {
    const std::int32_t li = parent_link[v];
    rev.push_back(li);
    v = static_cast<std::int32_t>(net.node_index(net.links[li].from));
  }
  path.links.assign(rev.rbegin(), rev.rend());
  path.nodes.push_back(origin);
  for (const std::int32_t li : path.links) {
    const RoadLink& l = net.links[li];
    path.nodes.push_back(l.to);
    path.total_time_s += l.travel_time_s();
    path.total_distance_m += l.length_m;
  }
  return path;
}

double circuity_over_pairs(const RoadNetwork& net,
                           std::span<const std::pair<std::int64_t, std::int64_t>> pairs) {
  if (pairs.empty()) {
    throw ValidationError("circuity needs at least one node pair");
  }
  double sum = 0;
  for (const auto& [a, b] : pairs) {
    const double straight = net.straight_line_m(a, b);
    if (straight <= 0) {
      throw ValidationError("degenerate pair with zero straight-line distance");
    }
    sum += shortest_path(net, a, b).total_distance_m / straight;
  }
  return sum / static_cast<double>(pairs.size());
}

double estimate_circuity(const RoadNetwork& net, int n_samples, std::uint64_t rng_seed) {
  if (n_samples < 1) {
    throw ValidationError("estimate_circuity needs n_samples >= 1");
  }
  if (net.nodes.size() < 2) {
    throw ValidationError("estimate_circuity needs at least two nodes");
  }
  Rng rng(rng_seed);
  const auto n = static_cast<std::int64_t>(net.nodes.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(n_samples));
  const long max_attempts = 100L * n_samples + 100;
  long attempts = 0;
  while (pairs.size() < static_cast<std::size_t>(n_samples)) {
    if (++attempts > max_attempts) {
      throw ValidationError("could not sample non-degenerate node pairs");
    }
    const auto i = rng.uniform_int(n);
    const auto j = rng.uniform_int(n);
    if (i == j) continue;
    if (net.straight_line_m(net.nodes[i], net.nodes[j]) <= 0) continue;
    pairs.emplace_back(net.nodes[i].id, net.nodes[j].id);
  }
  return circuity_over_pairs(net, pairs);
}

double network_area_km2(const RoadNetwork& net) {
  if (net.area_override_km2) {
    return *net.area_override_km2;
  }
  std::vector<Point2> pts;
  pts.reserve(net.nodes.size());
  if (net.coord_system == CoordinateSystem::PlanarM) {
    for (const RoadNode& nd : net.nodes) pts.push_back({nd.x, nd.y});
  } else {
    // Equirectangular projection about the mean latitude.
    double mean_lat = 0;
    for (const RoadNode& nd : net.nodes) mean_lat += nd.y;
    mean_lat /= static_cast<double>(net.nodes.size());
    const double rad = 3.14159265358979323846 / 180.0;
    const double mx = kEarthRadiusM * std::cos(mean_lat * rad) * rad;
    const double my = kEarthRadiusM * rad;
    for (const RoadNode& nd : net.nodes) pts.push_back({nd.x * mx, nd.y * my});
  }
  return convex_hull_area(std::move(pts)) / 1e6;
}

}  // namespace fleetsim
