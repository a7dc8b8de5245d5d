#pragma once

#include "vce/geo.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vce {

using NodeId = std::uint32_t;
using PoiId = std::uint32_t;

class AreaOfInterest {
 public:
  AreaOfInterest() = default;
  // Throws DegeneratePolygon / InvalidGeometry for rings without area.
  AreaOfInterest(std::vector<GeoPoint> boundary, std::string name);

  const std::vector<GeoPoint>& boundary() const { return boundary_; }
  const std::string& name() const { return name_; }
  bool contains(const GeoPoint& p) const { return point_in_polygon(boundary_, p); }
  double area_m2() const { return polygon_area_m2(boundary_); }

 private:
  std::vector<GeoPoint> boundary_;  // open ring
  std::string name_;
};

struct PanoNode {
  NodeId id = 0;
  GeoPoint position;
  std::vector<NodeId> neighbors;
  // Nodes reachable with a single fast-forward jump.
  std::vector<NodeId> visible_nodes;
  bool in_area = true;
  bool indoor = false;
};

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  double length_m = 0.0;
};

// Panorama graph. Node ids are dense indices 0..n-1. Neighbor lists are derived
// from the edge list, so the relation is symmetric by construction.
class ExplorableGraph {
 public:
  ExplorableGraph() = default;
  ExplorableGraph(std::vector<PanoNode> nodes, const std::vector<std::pair<NodeId, NodeId>>& edges);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool contains(NodeId id) const { return id < nodes_.size(); }
  const PanoNode& node(NodeId id) const;
  const std::vector<PanoNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool adjacent(NodeId a, NodeId b) const;
  bool can_jump(NodeId from, NodeId to) const;

  // Recomputes in_area for every node against `aoi`.
  void mark_in_area(const AreaOfInterest& aoi);

 private:
  std::vector<PanoNode> nodes_;
  std::vector<Edge> edges_;
};

struct GroundTruthPoI {
  PoiId id = 0;
  GeoPoint position;
  std::vector<NodeId> visible_from;
};

// Nodes within `sight_radius_m` (haversine, inclusive) of `p`, ascending id.
std::vector<NodeId> nodes_within(const ExplorableGraph& g, const GeoPoint& p, double sight_radius_m);

// Immutable after construction; shareable across threads.
class World {
 public:
  World() = default;
  World(ExplorableGraph graph, AreaOfInterest aoi, std::vector<GroundTruthPoI> pois,
        double sight_radius_m);

  const ExplorableGraph& graph() const { return graph_; }
  const AreaOfInterest& aoi() const { return aoi_; }
  const std::vector<GroundTruthPoI>& pois() const { return pois_; }
  double sight_radius_m() const { return sight_radius_m_; }
  const std::vector<PoiId>& pois_visible_at(NodeId node) const { return visible_at_.at(node); }

 private:
  ExplorableGraph graph_;
  AreaOfInterest aoi_;
  std::vector<GroundTruthPoI> pois_;
  double sight_radius_m_ = 25.0;
  std::vector<std::vector<PoiId>> visible_at_;
};

class VisitCounter {
 public:
  void record(NodeId node, const std::string& session_id = {});
  // Drops every visit attributed to the session (used when a session is purged).
  void forget_session(const std::string& session_id);

  std::uint64_t total() const { return total_; }
  const std::map<NodeId, std::uint64_t>& raw_counts() const { return raw_; }
  // Each session counts at most once per node.
  std::map<NodeId, std::uint64_t> deduplicated_counts() const;

 private:
  std::map<NodeId, std::uint64_t> raw_;
  std::map<std::string, std::vector<NodeId>> by_session_;
  std::uint64_t total_ = 0;
};

struct CoverageReport {
  double percent = 0.0;
  std::vector<std::uint64_t> heatmap;        // raw visits, indexed by node id
  std::vector<std::uint64_t> heatmap_dedup;  // per-session-deduplicated visits
};

double explorable_distance(const ExplorableGraph& g);

NodeId random_start_point(const ExplorableGraph& g, std::uint64_t seed);

CoverageReport coverage(const ExplorableGraph& g, const VisitCounter& visits);

struct WorldParams {
  int grid_rows = 6;
  int grid_cols = 6;
  double spacing_m = 10.0;     // distance between consecutive panoramas
  int segments_per_block = 8;  // panorama steps between two intersections
  int n_pois = 40;
  double sight_radius_m = 25.0;
  std::uint64_t seed = 1;
  GeoPoint origin{46.0700, 11.1200};
  double jump_range_m = 200.0;
  double poi_offset_min_m = 2.0;
  double poi_offset_max_m = 8.0;
  double min_poi_separation_m = 20.0;
  double aoi_margin_m = 5.0;
  // Blocks of street generated outside the AOI on every side.
  int outer_blocks = 0;
  std::string name = "synthetic";
};

World generate_synthetic_world(const WorldParams& params);

}  // namespace vce
