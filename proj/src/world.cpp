#include "vce/world.hpp"

#include "vce/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace vce {

AreaOfInterest::AreaOfInterest(std::vector<GeoPoint> boundary, std::string name)
    : boundary_(open_ring(boundary)), name_(std::move(name)) {
  if (!(polygon_area_m2(boundary_) > 0.0)) {
    throw Error(ErrorCode::InvalidGeometry, "area of interest has zero area");
  }
}

ExplorableGraph::ExplorableGraph(std::vector<PanoNode> nodes,
                                 const std::vector<std::pair<NodeId, NodeId>>& edges)
    : nodes_(std::move(nodes)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id != i) throw Error(ErrorCode::InvalidParams, "node ids must be dense and ordered");
    nodes_[i].neighbors.clear();
  }
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& [a, b] : edges) {
    if (!contains(a) || !contains(b)) throw Error(ErrorCode::UnknownNode, "edge references unknown node");
    if (a == b) throw Error(ErrorCode::InvalidParams, "self-loop edge");
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second) continue;
    edges_.push_back({a, b, haversine_distance(nodes_[a].position, nodes_[b].position)});
    nodes_[a].neighbors.push_back(b);
    nodes_[b].neighbors.push_back(a);
  }
  for (auto& n : nodes_) {
    std::sort(n.neighbors.begin(), n.neighbors.end());
    std::sort(n.visible_nodes.begin(), n.visible_nodes.end());
    n.visible_nodes.erase(std::unique(n.visible_nodes.begin(), n.visible_nodes.end()),
                          n.visible_nodes.end());
    for (NodeId v : n.visible_nodes) {
      if (!contains(v)) throw Error(ErrorCode::UnknownNode, "visible node references unknown node");
    }
    std::erase(n.visible_nodes, n.id);
  }
}

const PanoNode& ExplorableGraph::node(NodeId id) const {
  if (!contains(id)) throw Error(ErrorCode::UnknownNode, "unknown node " + std::to_string(id));
  return nodes_[id];
}

bool ExplorableGraph::adjacent(NodeId a, NodeId b) const {
  const auto& nb = node(a).neighbors;
  return std::binary_search(nb.begin(), nb.end(), b);
}

bool ExplorableGraph::can_jump(NodeId from, NodeId to) const {
  if (adjacent(from, to)) return true;
  const auto& vis = node(from).visible_nodes;
  return std::binary_search(vis.begin(), vis.end(), to);
}

void ExplorableGraph::mark_in_area(const AreaOfInterest& aoi) {
  for (auto& n : nodes_) n.in_area = aoi.contains(n.position);
}

std::vector<NodeId> nodes_within(const ExplorableGraph& g, const GeoPoint& p, double sight_radius_m) {
  std::vector<NodeId> out;
  for (const auto& n : g.nodes()) {
    if (haversine_distance(n.position, p) <= sight_radius_m) out.push_back(n.id);
  }
  return out;
}

World::World(ExplorableGraph graph, AreaOfInterest aoi, std::vector<GroundTruthPoI> pois,
             double sight_radius_m)
    : graph_(std::move(graph)), aoi_(std::move(aoi)), pois_(std::move(pois)), sight_radius_m_(sight_radius_m) {
  if (!(sight_radius_m_ > 0.0)) throw Error(ErrorCode::InvalidParams, "sight radius must be positive");
  graph_.mark_in_area(aoi_);
  visible_at_.assign(graph_.size(), {});
  for (std::size_t i = 0; i < pois_.size(); ++i) {
    auto& poi = pois_[i];
    if (poi.id != i) throw Error(ErrorCode::InvalidParams, "PoI ids must be dense and ordered");
    poi.visible_from = nodes_within(graph_, poi.position, sight_radius_m_);
    for (NodeId n : poi.visible_from) visible_at_[n].push_back(poi.id);
  }
}

void VisitCounter::record(NodeId node, const std::string& session_id) {
  ++raw_[node];
  ++total_;
  by_session_[session_id].push_back(node);
}

void VisitCounter::forget_session(const std::string& session_id) {
  auto it = by_session_.find(session_id);
  if (it == by_session_.end()) return;
  for (NodeId n : it->second) {
    if (--raw_[n] == 0) raw_.erase(n);
    --total_;
  }
  by_session_.erase(it);
}

std::map<NodeId, std::uint64_t> VisitCounter::deduplicated_counts() const {
  std::map<NodeId, std::uint64_t> out;
  for (const auto& [sid, visits] : by_session_) {
    std::set<NodeId> uniq(visits.begin(), visits.end());
    for (NodeId n : uniq) ++out[n];
  }
  return out;
}

double explorable_distance(const ExplorableGraph& g) {
  double total = 0.0;
  for (const auto& e : g.edges()) total += e.length_m;
  return total;
}

NodeId random_start_point(const ExplorableGraph& g, std::uint64_t seed) {
  std::vector<NodeId> candidates;
  for (const auto& n : g.nodes()) {
    if (n.in_area && !n.indoor) candidates.push_back(n.id);
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyGraph, "no eligible start node");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

CoverageReport coverage(const ExplorableGraph& g, const VisitCounter& visits) {
  CoverageReport out;
  out.heatmap.assign(g.size(), 0);
  out.heatmap_dedup.assign(g.size(), 0);
  for (const auto& [node, count] : visits.raw_counts()) {
    if (!g.contains(node)) throw Error(ErrorCode::UnknownNode, "visit on unknown node " + std::to_string(node));
    out.heatmap[node] = count;
  }
  for (const auto& [node, count] : visits.deduplicated_counts()) {
    if (!g.contains(node)) throw Error(ErrorCode::UnknownNode, "visit on unknown node " + std::to_string(node));
    out.heatmap_dedup[node] = count;
  }
  if (g.empty()) return out;
  const auto visited = std::count_if(out.heatmap.begin(), out.heatmap.end(), [](auto c) { return c > 0; });
  out.percent = 100.0 * static_cast<double>(visited) / static_cast<double>(g.size());
  return out;
}

World generate_synthetic_world(const WorldParams& p) {
  if (p.grid_rows < 2 || p.grid_cols < 2 || !(p.spacing_m > 0.0) || p.segments_per_block < 1 ||
      p.n_pois < 0 || !(p.sight_radius_m > 0.0) || p.outer_blocks < 0 || !(p.aoi_margin_m > 0.0) ||
      p.poi_offset_min_m < 0.0 || p.poi_offset_max_m < p.poi_offset_min_m ||
      (p.outer_blocks > 0 && p.aoi_margin_m >= p.spacing_m)) {
    throw Error(ErrorCode::InvalidParams, "invalid synthetic world parameters");
  }
  const int spb = p.segments_per_block;
  const int lo_i = -p.outer_blocks * spb;
  const int hi_i = (p.grid_cols - 1 + p.outer_blocks) * spb;
  const int lo_j = -p.outer_blocks * spb;
  const int hi_j = (p.grid_rows - 1 + p.outer_blocks) * spb;
  const auto on_street = [spb](int i, int j) { return i % spb == 0 || j % spb == 0; };

  const LocalFrame frame(p.origin);
  std::map<std::pair<int, int>, NodeId> lattice;
  std::vector<PanoNode> nodes;
  std::vector<std::pair<int, int>> coords;
  for (int j = lo_j; j <= hi_j; ++j) {
    for (int i = lo_i; i <= hi_i; ++i) {
      if (!on_street(i, j)) continue;
      PanoNode n;
      n.id = static_cast<NodeId>(nodes.size());
      n.position = frame.to_geo(LocalPoint(i * p.spacing_m, j * p.spacing_m));
      lattice[{i, j}] = n.id;
      nodes.push_back(std::move(n));
      coords.emplace_back(i, j);
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& [ij, id] : lattice) {
    const auto [i, j] = ij;
    if (j % spb == 0 && i + 1 <= hi_i) edges.emplace_back(id, lattice.at({i + 1, j}));
    if (i % spb == 0 && j + 1 <= hi_j) edges.emplace_back(id, lattice.at({i, j + 1}));
  }
  std::sort(edges.begin(), edges.end());

  // Fast-forward targets: nodes along the same straight street within jump range.
  const int jump_steps = static_cast<int>(std::floor(p.jump_range_m / p.spacing_m + 1e-9));
  for (auto& n : nodes) {
    const auto [i, j] = coords[n.id];
    for (int k = -jump_steps; k <= jump_steps; ++k) {
      if (k == 0) continue;
      if (j % spb == 0) {
        if (auto it = lattice.find({i + k, j}); it != lattice.end()) n.visible_nodes.push_back(it->second);
      }
      if (i % spb == 0) {
        if (auto it = lattice.find({i, j + k}); it != lattice.end()) n.visible_nodes.push_back(it->second);
      }
    }
  }

  const double margin = p.aoi_margin_m;
  const double x0 = -margin;
  const double y0 = -margin;
  const double x1 = (p.grid_cols - 1) * spb * p.spacing_m + margin;
  const double y1 = (p.grid_rows - 1) * spb * p.spacing_m + margin;
  AreaOfInterest aoi({frame.to_geo({x0, y0}), frame.to_geo({x1, y0}), frame.to_geo({x1, y1}),
                      frame.to_geo({x0, y1}), frame.to_geo({x0, y0})},
                     p.name);

  ExplorableGraph graph(std::move(nodes), edges);
  graph.mark_in_area(aoi);

  std::vector<NodeId> in_area;
  for (const auto& n : graph.nodes()) {
    if (n.in_area) in_area.push_back(n.id);
  }

  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, in_area.empty() ? 0 : in_area.size() - 1);
  std::uniform_real_distribution<double> pick_offset(p.poi_offset_min_m, p.poi_offset_max_m);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> quadrant(0, 3);

  std::vector<GroundTruthPoI> pois;
  std::vector<LocalPoint> placed;
  constexpr int kMaxAttempts = 10000;
  for (int k = 0; k < p.n_pois; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      const NodeId nid = in_area.at(pick_node(rng));
      const auto [i, j] = coords[nid];
      Eigen::Vector2d dir;
      if (i % spb == 0 && j % spb == 0) {
        const double a = (45.0 + 90.0 * quadrant(rng)) * kPi / 180.0;
        dir = {std::sin(a), std::cos(a)};
      } else if (j % spb == 0) {
        dir = {0.0, coin(rng) ? 1.0 : -1.0};  // east-west street, offset to a sidewalk
      } else {
        dir = {coin(rng) ? 1.0 : -1.0, 0.0};
      }
      const LocalPoint pos = frame.to_local(graph.node(nid).position) + pick_offset(rng) * dir;
      const bool far_enough = std::all_of(placed.begin(), placed.end(), [&](const LocalPoint& q) {
        return (q - pos).norm() >= p.min_poi_separation_m;
      });
      if (!far_enough || !aoi.contains(frame.to_geo(pos))) continue;
      placed.push_back(pos);
      pois.push_back({static_cast<PoiId>(k), frame.to_geo(pos), {}});
      ok = true;
    }
    if (!ok) throw Error(ErrorCode::InvalidParams, "cannot place PoIs with the requested separation");
  }

  return World(std::move(graph), std::move(aoi), std::move(pois), p.sight_radius_m);
}

}  // namespace vce
