#include "vce/aggregation.hpp"

#include "vce/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace vce {

void AggregationParams::validate() const {
  if (!(eps_m > 0.0) || min_pts < 1) throw Error(ErrorCode::InvalidParams, "invalid aggregation parameters");
}

namespace {

// Beyond this extent the planar grid is no longer a safe prefilter.
constexpr double kGridExtentM = 5000.0;
constexpr double kCellSlack = 1.05;

std::vector<std::vector<std::size_t>> neighbourhoods(std::span<const GeoPoint> pts, double eps) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> out(n);
  if (n == 0) return out;

  const GeoPoint anchor = mean_position(pts);
  bool use_grid = true;
  for (const auto& p : pts) {
    if (haversine_distance(anchor, p) > kGridExtentM) {
      use_grid = false;
      break;
    }
  }

  if (!use_grid) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (haversine_distance(pts[i], pts[j]) <= eps) out[i].push_back(j);
      }
    }
    return out;
  }

  const LocalFrame frame(anchor);
  const double cell = eps * kCellSlack;
  std::map<std::pair<long, long>, std::vector<std::size_t>> grid;
  std::vector<std::pair<long, long>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LocalPoint q = frame.to_local(pts[i]);
    keys[i] = {static_cast<long>(std::floor(q.x() / cell)), static_cast<long>(std::floor(q.y() / cell))};
    grid[keys[i]].push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({keys[i].first + dx, keys[i].second + dy});
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          if (haversine_distance(pts[i], pts[j]) <= eps) out[i].push_back(j);
        }
      }
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

}  // namespace

DbscanResult dbscan(std::span<const GeoPoint> points, const AggregationParams& params) {
  params.validate();
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const auto nbrs = neighbourhoods(points, params.eps_m);
  const auto min_pts = static_cast<std::size_t>(params.min_pts);
  std::vector<int> label(points.size(), kUnvisited);
  int next_cluster = 0;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] != kUnvisited) continue;
    if (nbrs[i].size() < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int c = next_cluster++;
    label[i] = c;
    std::deque<std::size_t> frontier(nbrs[i].begin(), nbrs[i].end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (label[q] == kNoise) label[q] = c;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = c;
      if (nbrs[q].size() >= min_pts) frontier.insert(frontier.end(), nbrs[q].begin(), nbrs[q].end());
    }
  }

  DbscanResult out;
  out.clusters.resize(static_cast<std::size_t>(next_cluster));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] >= 0) {
      out.clusters[static_cast<std::size_t>(label[i])].push_back(i);
    } else {
      out.noise.push_back(i);
    }
  }
  return out;
}

std::vector<PoICluster> consolidate(std::span<const Detection> detections, const AggregationParams& params) {
  std::vector<GeoPoint> pts;
  pts.reserve(detections.size());
  for (const auto& d : detections) pts.push_back(d.centroid);
  const DbscanResult db = dbscan(pts, params);

  std::vector<PoICluster> out;
  for (const auto& members : db.clusters) {
    if (members.size() < static_cast<std::size_t>(params.min_pts)) continue;
    PoICluster c;
    c.id = static_cast<std::uint32_t>(out.size());
    const LocalFrame frame(pts[members.front()]);
    LocalPoint sum = LocalPoint::Zero();
    std::set<std::string> workers;
    for (std::size_t idx : members) {
      sum += frame.to_local(pts[idx]);
      c.members.push_back(detections[idx].id);
      workers.insert(detections[idx].worker_id);
    }
    c.centroid = frame.to_geo(sum / static_cast<double>(members.size()));
    c.distinct_workers = workers.size();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace vce
