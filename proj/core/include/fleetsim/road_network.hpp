#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fleetsim/geometry.hpp"

namespace fleetsim {

enum class CoordinateSystem { LonLat, PlanarM };
enum class HighwayClass { Residential, Motorway, Other };

HighwayClass highway_class_from_string(const std::string& s);
std::string to_string(HighwayClass c);
std::string to_string(CoordinateSystem cs);

struct RoadNode {
  std::int64_t id = 0;
  double x = 0;  ///< longitude in degrees, or meters in planar mode
  double y = 0;  ///< latitude in degrees, or meters in planar mode
};

struct RoadLink {
  std::int64_t from = 0;
  std::int64_t to = 0;
  double length_m = 0;
  double free_speed_kmh = 0;
  HighwayClass klass = HighwayClass::Other;
  double effective_speed_kmh = 0;

  double travel_time_s() const { return length_m / (effective_speed_kmh / 3.6); }
};

struct Path {
  std::vector<std::int64_t> nodes;  ///< empty when origin == destination
  std::vector<std::int32_t> links;  ///< indices into RoadNetwork::links
  double total_time_s = 0;
  double total_distance_m = 0;

  bool empty() const { return links.empty(); }
};

/// The road-network environment. Immutable after construction; construction
/// validates links and restricts the graph to its largest strongly connected
/// component so that every node pair is routable.
struct RoadNetwork {
  CoordinateSystem coord_system = CoordinateSystem::LonLat;
  std::vector<RoadNode> nodes;
  std::vector<RoadLink> links;
  std::vector<std::vector<std::int32_t>> out_links;  ///< node index -> link indices
  std::unordered_map<std::int64_t, std::int32_t> index_of;

  std::optional<double> area_override_km2;
  std::optional<double> phi_override;
  int dropped_nodes = 0;
  int dropped_links = 0;
  double max_effective_speed_kmh = 0;
  double mean_effective_speed_kmh = 0;  ///< length-weighted

  std::size_t node_index(std::int64_t id) const;
  bool has_node(std::int64_t id) const { return index_of.count(id) > 0; }
  const RoadNode& node(std::int64_t id) const { return nodes[node_index(id)]; }

  /// Haversine in lon/lat mode, Euclidean in planar mode.
  double straight_line_m(const RoadNode& a, const RoadNode& b) const;
  double straight_line_m(std::int64_t a, std::int64_t b) const;
};

/// Validates invariants, keeps the largest strongly connected component,
/// builds adjacency and speed caches. All loaders and generators funnel
/// through here.
RoadNetwork finalize_network(CoordinateSystem cs, std::vector<RoadNode> nodes,
                             std::vector<RoadLink> links,
                             std::optional<double> area_override_km2 = std::nullopt,
                             std::optional<double> phi_override = std::nullopt);

/// Reads the JSON network format (see README). Throws ValidationError on
/// malformed input, non-positive lengths or speeds, or an empty network
/// after component restriction.
RoadNetwork load_network(const std::string& file_path);

void write_network(const std::string& file_path, const RoadNetwork& net);

/// Bidirectional Manhattan grid with rows x cols nodes, block_m spacing and a
/// uniform speed. Planar coordinates; node ids are row-major.
RoadNetwork generate_grid(int rows, int cols, double block_m, double speed_kmh);

/// Recomputes effective speeds from free-flow speeds: residential and
/// motorway links get residential_motorway_factor, everything else
/// other_factor. Factors must lie in (0, 1].
RoadNetwork apply_speed_reduction(RoadNetwork net, double residential_motorway_factor,
                                  double other_factor);

/// Time-optimal path by A*. The heuristic is straight-line distance over the
/// network's maximum effective speed, which keeps it admissible.
Path shortest_path(const RoadNetwork& net, std::int64_t origin, std::int64_t destination);

/// Mean ratio of network path distance over straight-line distance across
/// n_samples random distinct node pairs. Degenerate pairs are resampled.
double estimate_circuity(const RoadNetwork& net, int n_samples, std::uint64_t rng_seed);

/// Same ratio averaged over caller-supplied pairs (e.g. demand-weighted).
double circuity_over_pairs(const RoadNetwork& net,
                           std::span<const std::pair<std::int64_t, std::int64_t>> pairs);

/// Convex-hull area of the node set, unless the network declares an override.
double network_area_km2(const RoadNetwork& net);

}  // namespace fleetsim
