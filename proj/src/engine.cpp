#include "vce/engine.hpp"

#include "vce/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace vce {

using nlohmann::json;

void TaskConfig::validate() const {
  if (num_executions < 1 || num_instances < 1 || !(delta_m > 0.0) || !(duplicate_radius_m > 0.0) ||
      reward < 0.0) {
    throw Error(ErrorCode::InvalidParams, "invalid task configuration");
  }
}

void TabooConfig::validate() const {
  if (taboo_threshold < 1 || !(escape_distance_m > 0.0) || !(escape_time_s > 0.0) || !(taboo_radius_m > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "invalid taboo configuration");
  }
}

namespace {

constexpr std::array<std::pair<ActionKind, std::string_view>, 11> kKindNames{{
    {ActionKind::Move, "Move"},
    {ActionKind::BoundaryRevert, "BoundaryRevert"},
    {ActionKind::ShotTaken, "ShotTaken"},
    {ActionKind::ShotDiscarded, "ShotDiscarded"},
    {ActionKind::SubmitOk, "SubmitOk"},
    {ActionKind::SubmitFailTriangulation, "SubmitFailTriangulation"},
    {ActionKind::SubmitFailDuplicate, "SubmitFailDuplicate"},
    {ActionKind::SubmitFailTaboo, "SubmitFailTaboo"},
    {ActionKind::Escape, "Escape"},
    {ActionKind::Complete, "Complete"},
    {ActionKind::Abandon, "Abandon"},
}};

json point_json(const GeoPoint& p) { return json::array({p.lat, p.lon}); }

GeoPoint point_from_json(const json& j) { return GeoPoint(j.at(0).get<double>(), j.at(1).get<double>()); }

std::uint64_t trailing_number(const std::string& id) {
  std::size_t pos = id.size();
  while (pos > 0 && std::isdigit(static_cast<unsigned char>(id[pos - 1]))) --pos;
  if (pos == id.size()) return 0;
  return std::stoull(id.substr(pos));
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

ActionKind action_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kKindNames) {
    if (name == s) return k;
  }
  throw Error(ErrorCode::MalformedLog, "unknown action kind '" + std::string(s) + "'");
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::Active: return "Active";
    case SessionState::Completed: return "Completed";
    case SessionState::Escaped: return "Escaped";
    case SessionState::Abandoned: return "Abandoned";
  }
  return "Unknown";
}

std::string_view to_string(Strategy s) { return s == Strategy::Basic ? "basic" : "taboo"; }

std::string_view to_string(MoveOutcome::Kind k) { return k == MoveOutcome::Kind::Moved ? "Moved" : "Reverted"; }

std::string_view to_string(SubmitOutcome::Kind k) {
  switch (k) {
    case SubmitOutcome::Kind::Accepted: return "Accepted";
    case SubmitOutcome::Kind::RejectedTriangulation: return "RejectedTriangulation";
    case SubmitOutcome::Kind::RejectedDuplicate: return "RejectedDuplicate";
    case SubmitOutcome::Kind::RejectedTaboo: return "RejectedTaboo";
  }
  return "Unknown";
}

json to_json(const ActionLogEntry& e) {
  return json{{"session_id", e.session_id}, {"t", e.t}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

ActionLogEntry action_from_json(const json& j) {
  try {
    ActionLogEntry e;
    e.session_id = j.at("session_id").get<std::string>();
    e.t = j.at("t").get<double>();
    e.kind = action_kind_from_string(j.at("kind").get<std::string>());
    e.payload = j.value("payload", json::object());
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedLog, std::string("bad action log entry: ") + ex.what());
  }
}

std::string to_jsonl(std::span<const ActionLogEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<ActionLogEntry> parse_jsonl(const std::string& text) {
  std::vector<ActionLogEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::MalformedLog, "line " + std::to_string(lineno) + " is not JSON");
    }
    out.push_back(action_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------

TriangulationResult triangulate(const std::array<Shot, 3>& shots, double delta_m) {
  TriangulationResult out;
  const std::array<GeoPoint, 3> positions{shots[0].position, shots[1].position, shots[2].position};
  out.frame_origin = mean_position(positions);
  const LocalFrame frame(out.frame_origin);
  std::array<Ray, 3> rays;
  for (std::size_t i = 0; i < 3; ++i) rays[i] = Ray(frame.to_local(shots[i].position), shots[i].heading);

  out.intersections[0] = ray_intersection(rays[0], rays[1]);
  out.intersections[1] = ray_intersection(rays[1], rays[2]);
  out.intersections[2] = ray_intersection(rays[2], rays[0]);
  if (!out.intersections[0] || !out.intersections[1] || !out.intersections[2]) {
    out.verdict = TriangulationVerdict::NoIntersection;
    return out;
  }
  const TriangleSpread spread =
      triangle_centroid_max_side_distance(*out.intersections[0], *out.intersections[1], *out.intersections[2]);
  out.centroid_local = spread.centroid;
  out.dmax_m = spread.dmax;
  try {
    out.centroid = frame.to_geo(spread.centroid);
  } catch (const Error&) {
    // Nearly parallel rays can meet absurdly far away.
    out.verdict = TriangulationVerdict::TooSpread;
    return out;
  }
  out.verdict = spread.dmax < delta_m ? TriangulationVerdict::Ok : TriangulationVerdict::TooSpread;
  return out;
}

// ---------------------------------------------------------------------------

void TabooRegistry::update(std::span<const Detection> detections) {
  for (const auto& d : detections) {
    CandidateCluster* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (auto& c : clusters_) {
      const double dist = haversine_distance(c.centroid, d.centroid);
      if (dist <= radius_m_ && dist < best_dist) {  // strict: ties keep the smaller id
        best = &c;
        best_dist = dist;
      }
    }
    if (best == nullptr) {
      CandidateCluster c;
      c.id = static_cast<std::uint32_t>(clusters_.size());
      c.anchor = d.centroid;
      c.centroid = d.centroid;
      clusters_.push_back(std::move(c));
      best = &clusters_.back();
    }
    best->members.push_back(d.id);
    best->workers.insert(d.worker_id);
    best->offset_sum += project_local(best->anchor, d.centroid);
    best->centroid = unproject_local(best->anchor, best->offset_sum / static_cast<double>(best->members.size()));
    if (static_cast<int>(best->workers.size()) >= threshold_) best->taboo = true;
  }
  ++committed_sessions_;
}

std::vector<GeoPoint> TabooRegistry::taboo_positions() const {
  std::vector<GeoPoint> out;
  for (const auto& c : clusters_) {
    if (c.taboo) out.push_back(c.centroid);
  }
  return out;
}

json TabooRegistry::to_json() const {
  json clusters = json::array();
  for (const auto& c : clusters_) {
    clusters.push_back({{"id", c.id},
                        {"centroid", point_json(c.centroid)},
                        {"anchor", point_json(c.anchor)},
                        {"offset_sum", json::array({c.offset_sum.x(), c.offset_sum.y()})},
                        {"members", c.members},
                        {"workers", std::vector<std::string>(c.workers.begin(), c.workers.end())},
                        {"taboo", c.taboo}});
  }
  return json{{"radius_m", radius_m_},
              {"threshold", threshold_},
              {"committed_sessions", committed_sessions_},
              {"clusters", clusters}};
}

TabooRegistry TabooRegistry::from_json(const json& j) {
  TabooRegistry r;
  try {
    r.radius_m_ = j.at("radius_m").get<double>();
    r.threshold_ = j.at("threshold").get<int>();
    r.committed_sessions_ = j.at("committed_sessions").get<std::size_t>();
    for (const auto& cj : j.at("clusters")) {
      CandidateCluster c;
      c.id = cj.at("id").get<std::uint32_t>();
      c.centroid = point_from_json(cj.at("centroid"));
      c.anchor = point_from_json(cj.at("anchor"));
      c.offset_sum = {cj.at("offset_sum").at(0).get<double>(), cj.at("offset_sum").at(1).get<double>()};
      c.members = cj.at("members").get<std::vector<std::string>>();
      for (const auto& w : cj.at("workers")) c.workers.insert(w.get<std::string>());
      c.taboo = cj.at("taboo").get<bool>();
      r.clusters_.push_back(std::move(c));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("bad registry snapshot: ") + ex.what());
  }
  return r;
}

// ---------------------------------------------------------------------------

Experiment::Experiment(std::shared_ptr<const World> world, TaskConfig task, std::optional<TabooConfig> taboo,
                       std::string session_prefix)
    : world_(std::move(world)), task_(task), taboo_(taboo), prefix_(std::move(session_prefix)) {
  if (!world_) throw Error(ErrorCode::InvalidParams, "experiment needs a world");
  task_.validate();
  if (task_.strategy == Strategy::Taboo && !taboo_) {
    throw Error(ErrorCode::InvalidParams, "taboo strategy requires a taboo configuration");
  }
  if (taboo_) {
    taboo_->validate();
    registry_ = TabooRegistry(*taboo_);
  }
}

const Session& Experiment::session(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + id);
  return it->second;
}

std::span<const ActionLogEntry> Experiment::session_log(const std::string& id) const {
  auto it = live_logs_.find(id);
  if (it == live_logs_.end()) return {};
  return it->second;
}

Session& Experiment::active_session(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + id);
  if (it->second.state != SessionState::Active) {
    throw Error(ErrorCode::SessionNotActive, "session " + id + " is " + std::string(to_string(it->second.state)));
  }
  return it->second;
}

double Experiment::clamp_time(const Session& s, double now) const { return std::max(now, s.last_action_at); }

void Experiment::log(Session& s, double t, ActionKind kind, json payload) {
  ActionLogEntry e{s.id, t, kind, std::move(payload)};
  s.last_action_at = t;
  if (journal_) journal_->on_action(e);
  live_logs_[s.id].push_back(std::move(e));
}

const Session& Experiment::start_session(const std::string& worker_id, std::uint64_t seed, double now) {
  return start_impl(worker_id, seed, now, std::nullopt, std::nullopt, std::nullopt);
}

const Session& Experiment::start_impl(const std::string& worker_id, std::uint64_t seed, double now,
                                      std::optional<std::string> forced_id, std::optional<NodeId> forced_node,
                                      std::optional<std::vector<GeoPoint>> forced_snapshot) {
  if (!is_open()) throw Error(ErrorCode::ExperimentClosed, "experiment is closed");
  if (completed_ + active_ >= task_.num_executions) {
    throw Error(ErrorCode::NoFreeSlot, "all execution slots are taken by active sessions");
  }
  if (!task_.allow_repeat) {
    for (const auto& [id, s] : sessions_) {
      if (s.worker_id == worker_id && s.state != SessionState::Abandoned) {
        throw Error(ErrorCode::WorkerRepeat, "worker " + worker_id + " already took this task");
      }
    }
  }

  Session s;
  if (forced_id) {
    s.id = *forced_id;
    if (sessions_.count(s.id)) throw Error(ErrorCode::InvalidParams, "duplicate session id " + s.id);
    next_session_ = std::max(next_session_, trailing_number(s.id) + 1);
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(next_session_++));
    s.id = prefix_ + buf;
  }
  s.worker_id = worker_id;
  s.seed = seed;
  s.current_node = forced_node ? *forced_node : random_start_point(world_->graph(), seed);
  if (!world_->graph().contains(s.current_node)) throw Error(ErrorCode::UnknownNode, "unknown start node");
  s.last_in_area_node = s.current_node;
  s.started_at = now;
  s.last_detection_at = now;
  s.last_action_at = now;
  if (forced_snapshot) {
    s.taboo_snapshot = *forced_snapshot;
  } else if (task_.strategy == Strategy::Taboo) {
    s.taboo_snapshot = registry_.taboo_positions();
  }

  auto [it, inserted] = sessions_.emplace(s.id, std::move(s));
  Session& ref = it->second;
  ++active_;
  visits_.record(ref.current_node, ref.id);

  json snapshot = json::array();
  for (const auto& p : ref.taboo_snapshot) snapshot.push_back(point_json(p));
  const GeoPoint& pos = world_->graph().node(ref.current_node).position;
  log(ref, now, ActionKind::Move,
      {{"initial", true},
       {"worker_id", ref.worker_id},
       {"seed", ref.seed},
       {"to", ref.current_node},
       {"to_pos", point_json(pos)},
       {"distance_m", 0.0},
       {"taboo_snapshot", snapshot}});
  return ref;
}

MoveOutcome Experiment::move(const std::string& session_id, NodeId target, double now) {
  Session& s = active_session(session_id);
  const auto& g = world_->graph();
  if (!g.contains(target) || !g.can_jump(s.current_node, target)) {
    throw Error(ErrorCode::IllegalTarget, "node " + std::to_string(target) + " is not reachable from " +
                                              std::to_string(s.current_node));
  }
  now = clamp_time(s, now);
  MoveOutcome out;
  const NodeId from = s.current_node;
  const PanoNode& dest = g.node(target);
  if (dest.in_area) {
    const GeoPoint& a = g.node(from).position;
    const double d = haversine_distance(a, dest.position);
    s.distance_walked_m += d;
    s.current_node = target;
    s.last_in_area_node = target;
    visits_.record(target, s.id);
    log(s, now, ActionKind::Move,
        {{"from", from}, {"to", target}, {"from_pos", point_json(a)}, {"to_pos", point_json(dest.position)},
         {"distance_m", d}});
  } else {
    out.kind = MoveOutcome::Kind::Reverted;
    out.explanation = "OutsideBoundary";
    s.current_node = s.last_in_area_node;
    log(s, now, ActionKind::BoundaryRevert,
        {{"from", from}, {"target", target}, {"reverted_to", s.current_node}, {"code", out.explanation}});
  }
  after_action(s, now);
  return out;
}

void Experiment::take_shot(const std::string& session_id, Heading heading, double now) {
  Session& s = active_session(session_id);
  if (s.pending_shots.size() >= 3) throw Error(ErrorCode::TooManyShots, "three shots already pending");
  now = clamp_time(s, now);
  const PanoNode& n = world_->graph().node(s.current_node);
  s.pending_shots.push_back({n.position, heading, n.id, now});
  log(s, now, ActionKind::ShotTaken,
      {{"index", s.pending_shots.size() - 1}, {"node", n.id}, {"pos", point_json(n.position)},
       {"heading", heading.degrees()}});
  after_action(s, now);
}

void Experiment::discard_shot(const std::string& session_id, std::size_t index, double now) {
  Session& s = active_session(session_id);
  if (index >= s.pending_shots.size()) throw Error(ErrorCode::NoSuchShot, "no pending shot " + std::to_string(index));
  now = clamp_time(s, now);
  s.pending_shots.erase(s.pending_shots.begin() + static_cast<std::ptrdiff_t>(index));
  log(s, now, ActionKind::ShotDiscarded, {{"index", index}});
  after_action(s, now);
}

SubmitOutcome Experiment::submit(const std::string& session_id, double now) {
  Session& s = active_session(session_id);
  if (s.pending_shots.size() != 3) {
    throw Error(ErrorCode::WrongShotCount,
                "submit needs exactly 3 shots, have " + std::to_string(s.pending_shots.size()));
  }
  now = clamp_time(s, now);
  const std::array<Shot, 3> shots{s.pending_shots[0], s.pending_shots[1], s.pending_shots[2]};
  SubmitOutcome out;
  out.triangulation = triangulate(shots, task_.delta_m);
  const auto& tri = out.triangulation;

  if (tri.verdict != TriangulationVerdict::Ok) {
    out.kind = SubmitOutcome::Kind::RejectedTriangulation;
    out.reason = tri.verdict == TriangulationVerdict::NoIntersection ? "NoIntersection" : "TooSpread";
    json payload{{"reason", out.reason}};
    if (tri.verdict == TriangulationVerdict::TooSpread) payload["dmax_m"] = tri.dmax_m;
    log(s, now, ActionKind::SubmitFailTriangulation, std::move(payload));
    after_action(s, now);
    return out;
  }

  for (const auto& d : s.detections) {
    if (haversine_distance(d.centroid, tri.centroid) <= task_.duplicate_radius_m) {
      out.kind = SubmitOutcome::Kind::RejectedDuplicate;
      out.reason = "Duplicate";
      log(s, now, ActionKind::SubmitFailDuplicate,
          {{"pos", point_json(tri.centroid)}, {"conflict", d.id}, {"dmax_m", tri.dmax_m}});
      after_action(s, now);
      return out;
    }
  }

  if (task_.strategy == Strategy::Taboo) {
    for (const auto& p : s.taboo_snapshot) {
      if (haversine_distance(p, tri.centroid) <= taboo_->taboo_radius_m) {
        out.kind = SubmitOutcome::Kind::RejectedTaboo;
        out.reason = "Taboo";
        log(s, now, ActionKind::SubmitFailTaboo, {{"pos", point_json(tri.centroid)}, {"taboo", point_json(p)}});
        after_action(s, now);
        return out;
      }
    }
  }

  Detection d;
  d.id = s.id + "#" + std::to_string(s.detections.size() + 1);
  d.worker_id = s.worker_id;
  d.session_id = s.id;
  d.shots = shots;
  d.centroid = tri.centroid;
  d.dmax_m = tri.dmax_m;
  d.timestamp = now;
  s.detections.push_back(d);
  s.pending_shots.clear();
  s.last_detection_at = now;
  out.kind = SubmitOutcome::Kind::Accepted;
  out.detection = d;
  log(s, now, ActionKind::SubmitOk,
      {{"detection_id", d.id}, {"pos", point_json(d.centroid)}, {"dmax_m", d.dmax_m}});

  if (static_cast<int>(s.detections.size()) >= task_.num_instances) {
    s.state = SessionState::Completed;
    s.reward_recorded = task_.reward;
    log(s, now, ActionKind::Complete, {{"n_detections", s.detections.size()}, {"reward", s.reward_recorded}});
    commit(s);
    return out;
  }
  after_action(s, now);
  return out;
}

void Experiment::abandon(const std::string& session_id, double /*now*/) {
  Session& s = active_session(session_id);
  s.state = SessionState::Abandoned;
  s.detections.clear();
  s.pending_shots.clear();
  live_logs_.erase(s.id);
  visits_.forget_session(s.id);
  --active_;
  ++abandoned_;
  if (journal_) journal_->on_abandon(s);
}

bool Experiment::check_escape(const std::string& session_id, double now) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
  Session& s = it->second;
  if (s.state != SessionState::Active || task_.strategy != Strategy::Taboo) return false;
  now = clamp_time(s, now);
  const double idle = now - s.last_detection_at;
  const bool far = s.distance_walked_m >= taboo_->escape_distance_m;
  const bool slow = idle >= taboo_->escape_time_s;
  const bool escape = taboo_->escape_mode == EscapeMode::And ? (far && slow) : (far || slow);
  if (!escape) return false;
  s.state = SessionState::Escaped;
  s.reward_recorded = task_.reward;
  log(s, now, ActionKind::Escape,
      {{"distance_walked_m", s.distance_walked_m},
       {"since_last_detection_s", idle},
       {"n_detections", s.detections.size()},
       {"reward", s.reward_recorded}});
  commit(s);
  return true;
}

void Experiment::after_action(Session& s, double now) { check_escape(s.id, now); }

void Experiment::commit(Session& s) {
  --active_;
  ++completed_;
  auto node = live_logs_.extract(s.id);
  std::vector<ActionLogEntry> log_entries = node.empty() ? std::vector<ActionLogEntry>{} : std::move(node.mapped());
  committed_log_.insert(committed_log_.end(), log_entries.begin(), log_entries.end());
  committed_detections_.insert(committed_detections_.end(), s.detections.begin(), s.detections.end());
  commit_order_.push_back(s.id);
  if (task_.strategy == Strategy::Taboo) registry_.update(s.detections);
  if (journal_) journal_->on_commit(s, log_entries, registry_);
}

std::vector<std::string> Experiment::expire_idle(double now, double max_idle_s) {
  std::vector<std::string> expired;
  for (const auto& [id, s] : sessions_) {
    if (s.state == SessionState::Active && now - s.last_action_at >= max_idle_s) expired.push_back(id);
  }
  for (const auto& id : expired) abandon(id, now);
  return expired;
}

const Session& Experiment::replay_session(std::span<const ActionLogEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::MalformedLog, "empty session transcript");
  const ActionLogEntry& first = entries.front();
  if (first.kind != ActionKind::Move || !first.payload.value("initial", false)) {
    throw Error(ErrorCode::MalformedLog, "transcript must begin with the initial placement");
  }
  const std::string& sid = first.session_id;
  try {
    std::vector<GeoPoint> snapshot;
    for (const auto& p : first.payload.at("taboo_snapshot")) snapshot.push_back(point_from_json(p));
    start_impl(first.payload.at("worker_id").get<std::string>(), first.payload.at("seed").get<std::uint64_t>(),
               first.t, sid, first.payload.at("to").get<NodeId>(), std::move(snapshot));
    for (const auto& e : entries.subspan(1)) {
      if (e.session_id != sid) throw Error(ErrorCode::MalformedLog, "transcript mixes sessions");
      if (sessions_.at(sid).state != SessionState::Active) break;
      switch (e.kind) {
        case ActionKind::Move: move(sid, e.payload.at("to").get<NodeId>(), e.t); break;
        case ActionKind::BoundaryRevert: move(sid, e.payload.at("target").get<NodeId>(), e.t); break;
        case ActionKind::ShotTaken: take_shot(sid, Heading(e.payload.at("heading").get<double>()), e.t); break;
        case ActionKind::ShotDiscarded: discard_shot(sid, e.payload.at("index").get<std::size_t>(), e.t); break;
        case ActionKind::SubmitOk:
        case ActionKind::SubmitFailTriangulation:
        case ActionKind::SubmitFailDuplicate:
        case ActionKind::SubmitFailTaboo: submit(sid, e.t); break;
        case ActionKind::Abandon: abandon(sid, e.t); break;
        case ActionKind::Escape:
        case ActionKind::Complete: break;  // derived; regenerated by the engine
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedLog, std::string("bad transcript payload: ") + ex.what());
  }
  return sessions_.at(sid);
}

json detection_to_json(const Detection& d) {
  json shots = json::array();
  for (const auto& s : d.shots) {
    shots.push_back({{"node", s.node_id}, {"pos", point_json(s.position)}, {"heading", s.heading.degrees()}, {"t", s.timestamp}});
  }
  return json{{"id", d.id},       {"worker_id", d.worker_id}, {"session_id", d.session_id},
              {"pos", point_json(d.centroid)}, {"dmax_m", d.dmax_m}, {"t", d.timestamp}, {"shots", shots}};
}

json session_to_json(const Session& s) {
  json pending = json::array();
  for (const auto& sh : s.pending_shots) {
    pending.push_back({{"node", sh.node_id}, {"pos", point_json(sh.position)}, {"heading", sh.heading.degrees()}, {"t", sh.timestamp}});
  }
  json dets = json::array();
  for (const auto& d : s.detections) dets.push_back(detection_to_json(d));
  json snapshot = json::array();
  for (const auto& p : s.taboo_snapshot) snapshot.push_back(point_json(p));
  return json{{"id", s.id},
              {"worker_id", s.worker_id},
              {"state", to_string(s.state)},
              {"current_node", s.current_node},
              {"last_in_area_node", s.last_in_area_node},
              {"pending_shots", pending},
              {"detections", dets},
              {"distance_walked_m", s.distance_walked_m},
              {"started_at", s.started_at},
              {"last_detection_at", s.last_detection_at},
              {"last_action_at", s.last_action_at},
              {"taboo_snapshot", snapshot},
              {"reward_recorded", s.reward_recorded}};
}

}  // namespace vce
