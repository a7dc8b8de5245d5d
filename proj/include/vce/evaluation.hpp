#pragma once

#include "vce/aggregation.hpp"
#include "vce/engine.hpp"
#include "vce/geo.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vce {

struct MapPoint {
  std::string id;
  GeoPoint position;
};

struct PoIMap {
  std::string name;
  std::vector<MapPoint> points;
  nlohmann::json provenance = nlohmann::json::object();
};

PoIMap map_from_clusters(std::string name, std::span<const PoICluster> clusters);

struct MapComparison {
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (index in A, index in B)
  std::size_t a_size = 0;
  std::size_t b_size = 0;
  std::size_t intersection = 0;
  std::size_t a_minus_b = 0;
  std::size_t b_minus_a = 0;
  std::size_t union_size = 0;
  double jaccard = 0.0;
  double match_threshold_m = 10.0;
};

// One-to-one matching: repeatedly pairs the globally closest unmatched
// cross-map pair whose distance is within the threshold.
MapComparison match_maps(const PoIMap& a, const PoIMap& b, double threshold_m = 10.0);

// Mean confirmed count for every subset size n in [0, N], each estimated from
// `n_samples` uniformly drawn subsets of the executions.
std::vector<double> sampling_curve(const std::vector<std::vector<Detection>>& executions,
                                   const AggregationParams& params, int n_samples, std::uint64_t seed);

// Member count of every confirmed cluster, sorted descending.
std::vector<std::size_t> detections_per_confirmed(std::span<const PoICluster> clusters);
std::map<std::size_t, std::size_t> cluster_size_histogram(std::span<const PoICluster> clusters);

struct CumulativeRow {
  std::size_t workers = 0;
  std::size_t detections = 0;
  std::size_t confirmed = 0;
};

// Detections and confirmed PoIs after the first k executions, in completion order.
std::vector<CumulativeRow> cumulative_by_completion(const std::vector<std::vector<Detection>>& executions,
                                                    const AggregationParams& params);

struct SessionBehavior {
  std::string session_id;
  std::string worker_id;
  SessionState final_state = SessionState::Completed;
  double time_s = 0.0;
  double distance_m = 0.0;
  std::size_t moves = 0;
  std::size_t detections = 0;
  // steps_after[k] = moves after the k-th detection (k = 0: session start)
  // until the next detection or the end of the session.
  std::vector<std::size_t> steps_after;
  std::map<std::string, std::size_t> errors;  // boundary, triangulation, duplicate, taboo
  std::size_t total_errors = 0;
};

struct EscapeRow {
  std::string session_id;
  double distance_walked_m = 0.0;
  double since_last_detection_s = 0.0;
  std::size_t detections = 0;
};

struct BehaviorStats {
  std::vector<SessionBehavior> sessions;
  std::vector<EscapeRow> escapes;
  std::map<std::string, std::size_t> errors;              // totals per error kind
  std::map<std::string, std::size_t> error_histogram;     // "0".."5", ">5" -> sessions
  std::optional<double> escape_distance_m;                // reference lines
  std::optional<double> escape_time_s;
};

// Throws MalformedLog for unordered timestamps, purged (abandoned) sessions or
// sessions that never finished.
BehaviorStats behavior_stats(std::span<const ActionLogEntry> log,
                             const std::optional<TabooConfig>& taboo = std::nullopt);

// Groups a committed log into per-session detection lists, in log order.
std::vector<std::vector<Detection>> executions_from_log(std::span<const ActionLogEntry> log);

// Rebuilds the visit counter from the Move entries of a log (initial placements included).
VisitCounter visits_from_log(std::span<const ActionLogEntry> log);

// CSV renderings.
std::string comparison_csv_header();
std::string comparison_csv_row(const std::string& name_a, const std::string& name_b, const MapComparison& c);
std::string sampling_curve_csv(std::span<const double> curve);
std::string cumulative_csv(std::span<const CumulativeRow> rows);
std::string detections_per_confirmed_csv(std::span<const std::size_t> sizes);
std::string behavior_csv(const BehaviorStats& stats);
std::string steps_after_csv(const BehaviorStats& stats);
std::string error_histogram_csv(const BehaviorStats& stats);
std::string escape_scatter_csv(const BehaviorStats& stats);

}  // namespace vce
