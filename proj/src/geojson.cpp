#include "vce/geojson.hpp"

#include "vce/error.hpp"
#include "vce/io.hpp"

namespace vce::geojson {

using nlohmann::json;

namespace {

json lonlat(const GeoPoint& p) { return json::array({p.lon, p.lat}); }

GeoPoint from_lonlat(const json& c) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
    throw Error(ErrorCode::InvalidGeometry, "bad coordinate pair");
  }
  return GeoPoint(c[1].get<double>(), c[0].get<double>());
}

json point_feature(const GeoPoint& p, json props) {
  return json{{"type", "Feature"},
              {"geometry", {{"type", "Point"}, {"coordinates", lonlat(p)}}},
              {"properties", std::move(props)}};
}

const json& features_of(const json& fc) {
  if (!fc.is_object() || fc.value("type", "") != "FeatureCollection" || !fc.contains("features") ||
      !fc.at("features").is_array()) {
    throw Error(ErrorCode::ParseError, "expected a GeoJSON FeatureCollection");
  }
  return fc.at("features");
}

std::string role_of(const json& f) {
  if (!f.contains("properties") || !f.at("properties").is_object()) return {};
  return f.at("properties").value("role", std::string{});
}

std::vector<GeoPoint> ring_from_polygon(const json& geometry) {
  if (geometry.value("type", "") != "Polygon" || !geometry.contains("coordinates") ||
      !geometry.at("coordinates").is_array() || geometry.at("coordinates").empty()) {
    throw Error(ErrorCode::InvalidGeometry, "expected a Polygon geometry");
  }
  std::vector<GeoPoint> ring;
  for (const auto& c : geometry.at("coordinates").at(0)) ring.push_back(from_lonlat(c));
  return ring;
}

}  // namespace

json world_to_geojson(const World& world) {
  json features = json::array();
  json ring = json::array();
  for (const auto& p : world.aoi().boundary()) ring.push_back(lonlat(p));
  ring.push_back(lonlat(world.aoi().boundary().front()));
  features.push_back({{"type", "Feature"},
                      {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                      {"properties", {{"role", "boundary"}, {"name", world.aoi().name()}}}});
  for (const auto& n : world.graph().nodes()) {
    features.push_back(point_feature(n.position, {{"role", "pano"},
                                                  {"id", n.id},
                                                  {"in_area", n.in_area},
                                                  {"indoor", n.indoor},
                                                  {"visible_nodes", n.visible_nodes}}));
  }
  for (const auto& e : world.graph().edges()) {
    const auto& g = world.graph();
    features.push_back({{"type", "Feature"},
                        {"geometry",
                         {{"type", "LineString"},
                          {"coordinates", json::array({lonlat(g.node(e.a).position), lonlat(g.node(e.b).position)})}}},
                        {"properties", {{"role", "edge"}, {"from", e.a}, {"to", e.b}, {"length_m", e.length_m}}}});
  }
  for (const auto& poi : world.pois()) {
    features.push_back(point_feature(poi.position, {{"role", "poi"}, {"id", poi.id}, {"visible_from", poi.visible_from}}));
  }
  return json{{"type", "FeatureCollection"},
              {"properties", {{"name", world.aoi().name()}, {"sight_radius_m", world.sight_radius_m()}}},
              {"features", features}};
}

World world_from_geojson(const json& fc) {
  const json& features = features_of(fc);
  double sight = 25.0;
  if (fc.contains("properties") && fc.at("properties").is_object()) {
    sight = fc.at("properties").value("sight_radius_m", sight);
  }
  try {
    std::optional<AreaOfInterest> aoi;
    std::vector<PanoNode> nodes;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<GroundTruthPoI> pois;
    for (const auto& f : features) {
      const std::string role = role_of(f);
      const json& props = f.at("properties");
      const json& geom = f.at("geometry");
      if (role == "boundary") {
        aoi = AreaOfInterest(ring_from_polygon(geom), props.value("name", std::string("aoi")));
      } else if (role == "pano") {
        PanoNode n;
        n.id = props.at("id").get<NodeId>();
        n.position = from_lonlat(geom.at("coordinates"));
        n.indoor = props.value("indoor", false);
        if (props.contains("visible_nodes")) n.visible_nodes = props.at("visible_nodes").get<std::vector<NodeId>>();
        nodes.push_back(std::move(n));
      } else if (role == "edge") {
        edges.emplace_back(props.at("from").get<NodeId>(), props.at("to").get<NodeId>());
      } else if (role == "poi") {
        GroundTruthPoI p;
        p.id = props.at("id").get<PoiId>();
        p.position = from_lonlat(geom.at("coordinates"));
        pois.push_back(std::move(p));
      }
    }
    if (!aoi) throw Error(ErrorCode::InvalidGeometry, "world file has no boundary polygon");
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(pois.begin(), pois.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return World(ExplorableGraph(std::move(nodes), edges), std::move(*aoi), std::move(pois), sight);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("bad world file: ") + ex.what());
  }
}

AreaOfInterest aoi_from_geojson(const json& j, const std::string& default_name) {
  try {
    if (j.value("type", "") == "Polygon") return AreaOfInterest(ring_from_polygon(j), default_name);
    if (j.value("type", "") == "Feature") {
      std::string name = default_name;
      if (j.contains("properties") && j.at("properties").is_object()) {
        name = j.at("properties").value("name", default_name);
      }
      return AreaOfInterest(ring_from_polygon(j.at("geometry")), name);
    }
    for (const auto& f : features_of(j)) {
      if (f.at("geometry").value("type", "") == "Polygon") return aoi_from_geojson(f, default_name);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::InvalidGeometry, std::string("bad area of interest: ") + ex.what());
  }
  throw Error(ErrorCode::InvalidGeometry, "no polygon found for the area of interest");
}

json detections_to_geojson(std::span<const Detection> detections) {
  json features = json::array();
  for (const auto& d : detections) {
    features.push_back(point_feature(d.centroid, {{"id", d.id},
                                                  {"worker_id", d.worker_id},
                                                  {"session_id", d.session_id},
                                                  {"dmax_m", d.dmax_m},
                                                  {"t", d.timestamp}}));
  }
  return json{{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<Detection> detections_from_geojson(const json& fc) {
  std::vector<Detection> out;
  try {
    std::size_t k = 0;
    for (const auto& f : features_of(fc)) {
      if (f.at("geometry").value("type", "") != "Point") continue;
      const json& props = f.at("properties");
      Detection d;
      d.centroid = from_lonlat(f.at("geometry").at("coordinates"));
      d.id = props.value("id", "d" + std::to_string(k));
      d.worker_id = props.value("worker_id", std::string{});
      d.session_id = props.value("session_id", std::string{});
      d.dmax_m = props.value("dmax_m", 0.0);
      d.timestamp = props.value("t", 0.0);
      out.push_back(std::move(d));
      ++k;
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("bad detections file: ") + ex.what());
  }
  return out;
}

json clusters_to_geojson(std::span<const PoICluster> clusters) {
  json features = json::array();
  for (const auto& c : clusters) {
    features.push_back(point_feature(
        c.centroid, {{"cluster_id", c.id}, {"n_detections", c.members.size()}, {"distinct_workers", c.distinct_workers}}));
  }
  return json{{"type", "FeatureCollection"}, {"features", features}};
}

json map_to_geojson(const PoIMap& map) {
  json features = json::array();
  for (const auto& p : map.points) features.push_back(point_feature(p.position, {{"id", p.id}}));
  return json{{"type", "FeatureCollection"}, {"properties", {{"name", map.name}, {"provenance", map.provenance}}},
              {"features", features}};
}

PoIMap map_from_geojson(const json& fc, const std::string& name) {
  PoIMap m;
  m.name = name;
  try {
    std::size_t k = 0;
    for (const auto& f : features_of(fc)) {
      if (f.at("geometry").value("type", "") != "Point") continue;
      const json props = f.value("properties", json::object());
      std::string id = std::to_string(k);
      for (const char* key : {"id", "cluster_id"}) {
        if (props.contains(key)) {
          id = props.at(key).is_string() ? props.at(key).get<std::string>() : props.at(key).dump();
          break;
        }
      }
      m.points.push_back({id, from_lonlat(f.at("geometry").at("coordinates"))});
      ++k;
    }
    if (fc.contains("properties") && fc.at("properties").is_object() && fc.at("properties").contains("provenance")) {
      m.provenance = fc.at("properties").at("provenance");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("bad map file: ") + ex.what());
  }
  return m;
}

PoIMap truth_map(const World& world) {
  PoIMap m;
  m.name = "truth";
  for (const auto& p : world.pois()) m.points.push_back({std::to_string(p.id), p.position});
  m.provenance = {{"source", "synthetic ground truth"}};
  return m;
}

std::string heatmap_csv(const ExplorableGraph& graph, std::span<const std::uint64_t> visits) {
  std::string out = "node_id,lat,lon,visits\n";
  for (const auto& n : graph.nodes()) {
    const std::uint64_t v = n.id < visits.size() ? visits[n.id] : 0;
    out += std::to_string(n.id) + "," + io::fixed(n.position.lat, 9) + "," + io::fixed(n.position.lon, 9) + "," +
           std::to_string(v) + "\n";
  }
  return out;
}

}  // namespace vce::geojson
