#pragma once

#include "vce/engine.hpp"
#include "vce/geo.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vce {

struct AggregationParams {
  double eps_m = 10.0;
  int min_pts = 3;  // counts the point itself

  void validate() const;
};

struct DbscanResult {
  std::vector<std::vector<std::size_t>> clusters;  // ascending indices, clusters in discovery order
  std::vector<std::size_t> noise;
};

// DBSCAN with the haversine metric. Scan order is input order; a border point
// reachable from two clusters joins the first one that claims it.
DbscanResult dbscan(std::span<const GeoPoint> points, const AggregationParams& params);

struct PoICluster {
  std::uint32_t id = 0;
  GeoPoint centroid;
  std::vector<std::string> members;  // detection ids
  std::size_t distinct_workers = 0;
};

// Confirmed PoIs. Noise detections are dropped, as are clusters left with
// fewer than min_pts members after border assignment.
std::vector<PoICluster> consolidate(std::span<const Detection> detections, const AggregationParams& params);

}  // namespace vce
