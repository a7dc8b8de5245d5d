#pragma once

#include "vce/aggregation.hpp"
#include "vce/engine.hpp"
#include "vce/evaluation.hpp"
#include "vce/world.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace vce::geojson {

// World file: AOI polygon ("role":"boundary"), panorama points ("role":"pano"),
// edge line strings ("role":"edge") and PoI points ("role":"poi").
nlohmann::json world_to_geojson(const World& world);
// Throws InvalidGeometry / ParseError.
World world_from_geojson(const nlohmann::json& fc);

// Reads a boundary polygon from a Feature, FeatureCollection or bare Polygon.
AreaOfInterest aoi_from_geojson(const nlohmann::json& j, const std::string& default_name = "aoi");

nlohmann::json detections_to_geojson(std::span<const Detection> detections);
std::vector<Detection> detections_from_geojson(const nlohmann::json& fc);

nlohmann::json clusters_to_geojson(std::span<const PoICluster> clusters);

nlohmann::json map_to_geojson(const PoIMap& map);
// Every Point feature becomes a map entry; ids come from "id" or "cluster_id"
// properties, falling back to the feature index.
PoIMap map_from_geojson(const nlohmann::json& fc, const std::string& name);

PoIMap truth_map(const World& world);

// node_id,lat,lon,visits
std::string heatmap_csv(const ExplorableGraph& graph, std::span<const std::uint64_t> visits);

}  // namespace vce::geojson
