#include "vce/evaluation.hpp"

#include "vce/error.hpp"
#include "vce/io.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <tuple>

namespace vce {

PoIMap map_from_clusters(std::string name, std::span<const PoICluster> clusters) {
  PoIMap m;
  m.name = std::move(name);
  for (const auto& c : clusters) m.points.push_back({std::to_string(c.id), c.centroid});
  return m;
}

MapComparison match_maps(const PoIMap& a, const PoIMap& b, double threshold_m) {
  MapComparison out;
  out.match_threshold_m = threshold_m;
  out.a_size = a.points.size();
  out.b_size = b.points.size();

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    for (std::size_t j = 0; j < b.points.size(); ++j) {
      const double d = haversine_distance(a.points[i].position, b.points[j].position);
      if (d <= threshold_m) candidates.emplace_back(d, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_a(a.points.size(), false);
  std::vector<bool> used_b(b.points.size(), false);
  for (const auto& [d, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    out.matched.emplace_back(i, j);
  }

  out.intersection = out.matched.size();
  out.a_minus_b = out.a_size - out.intersection;
  out.b_minus_a = out.b_size - out.intersection;
  out.union_size = out.a_size + out.b_size - out.intersection;
  // Two empty maps are identical sets.
  out.jaccard = out.union_size == 0 ? 1.0
                                    : static_cast<double>(out.intersection) / static_cast<double>(out.union_size);
  return out;
}

namespace {

std::size_t confirmed_count(const std::vector<std::vector<Detection>>& executions,
                            std::span<const std::size_t> chosen, const AggregationParams& params) {
  std::vector<Detection> pool;
  for (std::size_t idx : chosen) pool.insert(pool.end(), executions[idx].begin(), executions[idx].end());
  return consolidate(pool, params).size();
}

}  // namespace

std::vector<double> sampling_curve(const std::vector<std::vector<Detection>>& executions,
                                   const AggregationParams& params, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidParams, "n_samples must be positive");
  const std::size_t total = executions.size();
  std::vector<double> curve(total + 1, 0.0);
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), 0);

  for (std::size_t n = 1; n <= total; ++n) {
    // Independent sub-stream per n keeps each point reproducible on its own.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(n)};
    std::mt19937_64 rng(seq);
    double sum = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      std::vector<std::size_t> idx = all;
      for (std::size_t k = 0; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, total - 1);
        std::swap(idx[k], idx[pick(rng)]);
      }
      std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
      std::sort(chosen.begin(), chosen.end());
      sum += static_cast<double>(confirmed_count(executions, chosen, params));
    }
    curve[n] = sum / n_samples;
  }
  return curve;
}

std::vector<std::size_t> detections_per_confirmed(std::span<const PoICluster> clusters) {
  std::vector<std::size_t> out;
  for (const auto& c : clusters) out.push_back(c.members.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::map<std::size_t, std::size_t> cluster_size_histogram(std::span<const PoICluster> clusters) {
  std::map<std::size_t, std::size_t> out;
  for (const auto& c : clusters) ++out[c.members.size()];
  return out;
}

std::vector<CumulativeRow> cumulative_by_completion(const std::vector<std::vector<Detection>>& executions,
                                                    const AggregationParams& params) {
  std::vector<CumulativeRow> rows;
  std::vector<Detection> pool;
  rows.push_back({0, 0, 0});
  for (std::size_t k = 0; k < executions.size(); ++k) {
    pool.insert(pool.end(), executions[k].begin(), executions[k].end());
    rows.push_back({k + 1, pool.size(), consolidate(pool, params).size()});
  }
  return rows;
}

namespace {

GeoPoint pos_of(const nlohmann::json& j) { return GeoPoint(j.at(0).get<double>(), j.at(1).get<double>()); }

struct Grouped {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ActionLogEntry*>> by_session;
};

Grouped group_by_session(std::span<const ActionLogEntry> log) {
  Grouped g;
  for (const auto& e : log) {
    auto [it, inserted] = g.by_session.try_emplace(e.session_id);
    if (inserted) g.order.push_back(e.session_id);
    it->second.push_back(&e);
  }
  return g;
}

std::string error_key(ActionKind k) {
  switch (k) {
    case ActionKind::BoundaryRevert: return "boundary";
    case ActionKind::SubmitFailTriangulation: return "triangulation";
    case ActionKind::SubmitFailDuplicate: return "duplicate";
    case ActionKind::SubmitFailTaboo: return "taboo";
    default: return {};
  }
}

}  // namespace

BehaviorStats behavior_stats(std::span<const ActionLogEntry> log, const std::optional<TabooConfig>& taboo) {
  BehaviorStats stats;
  if (taboo) {
    stats.escape_distance_m = taboo->escape_distance_m;
    stats.escape_time_s = taboo->escape_time_s;
  }
  for (const char* k : {"boundary", "triangulation", "duplicate", "taboo"}) stats.errors[k] = 0;
  for (const char* k : {"0", "1", "2", "3", "4", "5", ">5"}) stats.error_histogram[k] = 0;

  const Grouped grouped = group_by_session(log);
  try {
    for (const auto& sid : grouped.order) {
      const auto& entries = grouped.by_session.at(sid);
      const ActionLogEntry& first = *entries.front();
      if (first.kind != ActionKind::Move || !first.payload.value("initial", false)) {
        throw Error(ErrorCode::MalformedLog, "session " + sid + " does not start with a placement");
      }
      SessionBehavior b;
      b.session_id = sid;
      b.worker_id = first.payload.at("worker_id").get<std::string>();
      for (const char* k : {"boundary", "triangulation", "duplicate", "taboo"}) b.errors[k] = 0;
      b.steps_after.push_back(0);
      double prev_t = first.t;
      double last_detection_t = first.t;
      bool finished = false;
      for (const ActionLogEntry* e : entries) {
        if (finished) throw Error(ErrorCode::MalformedLog, "session " + sid + " has entries after its end");
        if (e->t < prev_t) throw Error(ErrorCode::MalformedLog, "session " + sid + " has decreasing timestamps");
        prev_t = e->t;
        switch (e->kind) {
          case ActionKind::Move:
            if (e == &first) break;
            b.distance_m += haversine_distance(pos_of(e->payload.at("from_pos")), pos_of(e->payload.at("to_pos")));
            ++b.moves;
            ++b.steps_after.back();
            break;
          case ActionKind::SubmitOk:
            ++b.detections;
            last_detection_t = e->t;
            b.steps_after.push_back(0);
            break;
          case ActionKind::Complete:
            b.final_state = SessionState::Completed;
            finished = true;
            break;
          case ActionKind::Escape:
            b.final_state = SessionState::Escaped;
            finished = true;
            stats.escapes.push_back({sid, 0.0, e->t - last_detection_t, 0});
            break;
          case ActionKind::Abandon:
            throw Error(ErrorCode::MalformedLog, "abandoned session " + sid + " present in log");
          default:
            break;
        }
        if (const std::string key = error_key(e->kind); !key.empty()) {
          ++b.errors[key];
          ++stats.errors[key];
          ++b.total_errors;
        }
      }
      if (!finished) throw Error(ErrorCode::MalformedLog, "session " + sid + " never finished");
      // A completing submission closes the session, so it opens no further segment.
      if (b.final_state == SessionState::Completed && b.steps_after.size() > 1) b.steps_after.pop_back();
      b.time_s = entries.back()->t - first.t;
      if (b.final_state == SessionState::Escaped) {
        stats.escapes.back().distance_walked_m = b.distance_m;
        stats.escapes.back().detections = b.detections;
      }
      const std::string bucket = b.total_errors > 5 ? ">5" : std::to_string(b.total_errors);
      ++stats.error_histogram[bucket];
      stats.sessions.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedLog, std::string("bad payload: ") + ex.what());
  }
  return stats;
}

std::vector<std::vector<Detection>> executions_from_log(std::span<const ActionLogEntry> log) {
  const Grouped grouped = group_by_session(log);
  std::vector<std::vector<Detection>> out;
  try {
    for (const auto& sid : grouped.order) {
      const auto& entries = grouped.by_session.at(sid);
      const std::string worker = entries.front()->payload.value("worker_id", std::string{});
      std::vector<Detection> dets;
      for (const ActionLogEntry* e : entries) {
        if (e->kind != ActionKind::SubmitOk) continue;
        Detection d;
        d.id = e->payload.at("detection_id").get<std::string>();
        d.worker_id = worker;
        d.session_id = sid;
        d.centroid = pos_of(e->payload.at("pos"));
        d.dmax_m = e->payload.at("dmax_m").get<double>();
        d.timestamp = e->t;
        dets.push_back(std::move(d));
      }
      out.push_back(std::move(dets));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedLog, std::string("bad payload: ") + ex.what());
  }
  return out;
}

std::string comparison_csv_header() { return "mapA,mapB,|A|,|B|,union,intersect,AminusB,BminusA,jaccard\n"; }

std::string comparison_csv_row(const std::string& name_a, const std::string& name_b, const MapComparison& c) {
  return name_a + "," + name_b + "," + std::to_string(c.a_size) + "," + std::to_string(c.b_size) + "," +
         std::to_string(c.union_size) + "," + std::to_string(c.intersection) + "," + std::to_string(c.a_minus_b) +
         "," + std::to_string(c.b_minus_a) + "," + io::fixed(c.jaccard, 4) + "\n";
}

std::string sampling_curve_csv(std::span<const double> curve) {
  std::string out = "n,mean_confirmed\n";
  for (std::size_t n = 0; n < curve.size(); ++n) out += std::to_string(n) + "," + io::fixed(curve[n], 4) + "\n";
  return out;
}

std::string cumulative_csv(std::span<const CumulativeRow> rows) {
  std::string out = "workers,detections,confirmed\n";
  for (const auto& r : rows) {
    out += std::to_string(r.workers) + "," + std::to_string(r.detections) + "," + std::to_string(r.confirmed) + "\n";
  }
  return out;
}

std::string detections_per_confirmed_csv(std::span<const std::size_t> sizes) {
  std::string out = "rank,detections\n";
  for (std::size_t i = 0; i < sizes.size(); ++i) out += std::to_string(i + 1) + "," + std::to_string(sizes[i]) + "\n";
  return out;
}

std::string behavior_csv(const BehaviorStats& stats) {
  std::string out = "session_id,worker_id,state,time_s,distance_m,moves,detections,boundary,triangulation,duplicate,taboo\n";
  for (const auto& b : stats.sessions) {
    out += b.session_id + "," + b.worker_id + "," + std::string(to_string(b.final_state)) + "," +
           io::fixed(b.time_s, 3) + "," + io::fixed(b.distance_m, 3) + "," + std::to_string(b.moves) + "," +
           std::to_string(b.detections) + "," + std::to_string(b.errors.at("boundary")) + "," +
           std::to_string(b.errors.at("triangulation")) + "," + std::to_string(b.errors.at("duplicate")) + "," +
           std::to_string(b.errors.at("taboo")) + "\n";
  }
  return out;
}

std::string steps_after_csv(const BehaviorStats& stats) {
  std::string out = "session_id,state,after_detection,steps\n";
  for (const auto& b : stats.sessions) {
    for (std::size_t k = 0; k < b.steps_after.size(); ++k) {
      out += b.session_id + "," + std::string(to_string(b.final_state)) + "," + std::to_string(k) + "," +
             std::to_string(b.steps_after[k]) + "\n";
    }
  }
  return out;
}

std::string error_histogram_csv(const BehaviorStats& stats) {
  std::string out = "errors,sessions\n";
  for (const char* k : {"0", "1", "2", "3", "4", "5", ">5"}) {
    out += std::string(k) + "," + std::to_string(stats.error_histogram.at(k)) + "\n";
  }
  for (const auto& [kind, n] : stats.errors) out += "total_" + kind + "," + std::to_string(n) + "\n";
  return out;
}

std::string escape_scatter_csv(const BehaviorStats& stats) {
  std::string out;
  if (stats.escape_distance_m) out += "# escape_distance_m=" + io::fixed(*stats.escape_distance_m, 3) + "\n";
  if (stats.escape_time_s) out += "# escape_time_s=" + io::fixed(*stats.escape_time_s, 3) + "\n";
  out += "session_id,distance_walked_m,since_last_detection_s,detections\n";
  for (const auto& r : stats.escapes) {
    out += r.session_id + "," + io::fixed(r.distance_walked_m, 3) + "," + io::fixed(r.since_last_detection_s, 3) +
           "," + std::to_string(r.detections) + "\n";
  }
  return out;
}

VisitCounter visits_from_log(std::span<const ActionLogEntry> log) {
  VisitCounter visits;
  for (const auto& e : log) {
    if (e.kind != ActionKind::Move) continue;
    try {
      visits.record(e.payload.at("to").get<NodeId>(), e.session_id);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::MalformedLog, std::string("move entry without target: ") + ex.what());
    }
  }
  return visits;
}

}  // namespace vce
