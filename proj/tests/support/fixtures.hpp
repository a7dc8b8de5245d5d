#pragma once

#include "vce/engine.hpp"
#include "vce/geo.hpp"
#include "vce/world.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

inline const vce::GeoPoint kOrigin{46.0700, 11.1200};

inline vce::GeoPoint at(double x, double y) { return vce::unproject_local(kOrigin, vce::LocalPoint(x, y)); }

inline std::vector<vce::GeoPoint> rect(double x0, double y0, double x1, double y1) {
  return {at(x0, y0), at(x1, y0), at(x1, y1), at(x0, y1)};
}

struct Layout {
  std::vector<std::pair<double, double>> nodes;  // local meters
  std::vector<std::pair<vce::NodeId, vce::NodeId>> edges;
  std::vector<std::vector<vce::NodeId>> visible;  // optional, per node
  std::vector<std::pair<double, double>> pois;
  std::vector<vce::GeoPoint> aoi;
  double sight_radius_m = 25.0;
};

inline std::shared_ptr<const vce::World> build(const Layout& s) {
  std::vector<vce::PanoNode> nodes;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    vce::PanoNode n;
    n.id = static_cast<vce::NodeId>(i);
    n.position = at(s.nodes[i].first, s.nodes[i].second);
    if (i < s.visible.size()) n.visible_nodes = s.visible[i];
    nodes.push_back(n);
  }
  std::vector<vce::GroundTruthPoI> pois;
  for (std::size_t i = 0; i < s.pois.size(); ++i) {
    vce::GroundTruthPoI p;
    p.id = static_cast<vce::PoiId>(i);
    p.position = at(s.pois[i].first, s.pois[i].second);
    pois.push_back(p);
  }
  return std::make_shared<const vce::World>(vce::ExplorableGraph(std::move(nodes), s.edges),
                                            vce::AreaOfInterest(s.aoi, "fixture"), std::move(pois), s.sight_radius_m);
}

// Straight street along x: n nodes `spacing` apart, AOI covers the first `in_area` nodes.
inline std::shared_ptr<const vce::World> line_world(int n, double spacing, int in_area,
                                                    std::vector<std::pair<double, double>> pois = {}) {
  Layout s;
  for (int i = 0; i < n; ++i) s.nodes.emplace_back(i * spacing, 0.0);
  for (int i = 0; i + 1 < n; ++i) s.edges.emplace_back(i, i + 1);
  s.aoi = rect(-5.0, -20.0, (in_area - 1) * spacing + 5.0, 20.0);
  s.pois = std::move(pois);
  return build(s);
}

// Three mutually adjacent nodes around two PoIs, P0 (20,0) and P1 (20,40).
// Bearings to P0 are 135, 0, 225 and to P1 45, 0, 315; each triad is concurrent.
inline std::shared_ptr<const vce::World> triad_world() {
  Layout s;
  s.nodes = {{0, 20}, {20, -20}, {40, 20}};
  s.edges = {{0, 1}, {1, 2}, {0, 2}};
  s.pois = {{20, 0}, {20, 40}};
  s.aoi = rect(-10, -30, 50, 50);
  s.sight_radius_m = 50.0;
  return build(s);
}

inline vce::Shot shot(double x, double y, double heading, vce::NodeId node = 0) {
  vce::Shot s;
  s.position = at(x, y);
  s.heading = vce::Heading(heading);
  s.node_id = node;
  return s;
}

inline vce::Detection detection(std::string id, std::string worker, vce::GeoPoint where) {
  vce::Detection d;
  d.id = std::move(id);
  d.worker_id = std::move(worker);
  d.session_id = "s-" + d.worker_id;
  d.centroid = where;
  return d;
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
