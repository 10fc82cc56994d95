#include <fstream>

#include "fleetsim/errors.hpp"
#include "fleetsim/road_network.hpp"
#include "json.hpp"

namespace fleetsim {

namespace {

nlohmann::json parse_file(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) {
    throw ValidationError("cannot open network file '" + file_path + "'");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed network file '" + file_path + "': " + e.what());
  }
  return doc;
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw ValidationError(where + " is missing numeric field '" + key + "'");
  }
  return obj[key].get<double>();
}

std::int64_t require_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    throw ValidationError(where + " is missing integer field '" + key + "'");
  }
  return obj[key].get<std::int64_t>();
}

}  // namespace

RoadNetwork load_network(const std::string& file_path) {
  const nlohmann::json doc = parse_file(file_path);
  if (!doc.is_object()) {
    throw ValidationError("network file must contain a JSON object");
  }

  CoordinateSystem cs;
  const std::string cs_str = doc.value("coordinate_system", std::string());
  if (cs_str == "lonlat") {
    cs = CoordinateSystem::LonLat;
  } else if (cs_str == "planar_m") {
    cs = CoordinateSystem::PlanarM;
  } else {
    throw ValidationError("coordinate_system must be 'lonlat' or 'planar_m'");
  }

  std::optional<double> area_override;
  if (doc.contains("area_km2_override") && !doc["area_km2_override"].is_null()) {
    area_override = doc["area_km2_override"].get<double>();
  }
  std::optional<double> phi_override;
  if (doc.contains("phi_override") && !doc["phi_override"].is_null()) {
    phi_override = doc["phi_override"].get<double>();
  }

  if (!doc.contains("nodes") || !doc["nodes"].is_array() || !doc.contains("links") ||
      !doc["links"].is_array()) {
    throw ValidationError("network file needs 'nodes' and 'links' arrays");
  }

  std::vector<RoadNode> nodes;
  nodes.reserve(doc["nodes"].size());
  for (const auto& jn : doc["nodes"]) {
    RoadNode n;
    n.id = require_int(jn, "id", "node");
    n.x = require_number(jn, "x", "node " + std::to_string(n.id));
    n.y = require_number(jn, "y", "node " + std::to_string(n.id));
    nodes.push_back(n);
  }

  std::vector<RoadLink> links;
  links.reserve(doc["links"].size());
  for (const auto& jl : doc["links"]) {
    RoadLink l;
    l.from = require_int(jl, "from", "link");
    l.to = require_int(jl, "to", "link");
    const std::string where =
        "link " + std::to_string(l.from) + "->" + std::to_string(l.to);
    l.length_m = require_number(jl, "length_m", where);
    l.free_speed_kmh = require_number(jl, "speed_kmh", where);
    if (!jl.contains("class") || !jl["class"].is_string()) {
      throw ValidationError(where + " is missing string field 'class'");
    }
    l.klass = highway_class_from_string(jl["class"].get<std::string>());
    l.effective_speed_kmh = l.free_speed_kmh;
    links.push_back(l);
  }

  return finalize_network(cs, std::move(nodes), std::move(links), area_override, phi_override);
}

void write_network(const std::string& file_path, const RoadNetwork& net) {
  nlohmann::ordered_json doc;
  doc["coordinate_system"] = to_string(net.coord_system);
  if (net.area_override_km2) doc["area_km2_override"] = *net.area_override_km2;
  if (net.phi_override) doc["phi_override"] = *net.phi_override;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const RoadNode& n : net.nodes) {
    doc["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
  }
  doc["links"] = nlohmann::ordered_json::array();
  for (const RoadLink& l : net.links) {
    doc["links"].push_back({{"from", l.from},
                            {"to", l.to},
                            {"length_m", l.length_m},
                            {"speed_kmh", l.free_speed_kmh},
                            {"class", to_string(l.klass)}});
  }
  std::ofstream out(file_path);
  if (!out) {
    throw ValidationError("cannot write network file '" + file_path + "'");
  }
  out << doc.dump(2) << '\n';
}

}  // namespace fleetsim
