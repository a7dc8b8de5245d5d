#include "vce/service.hpp"

#include "vce/aggregation.hpp"
#include "vce/error.hpp"
#include "vce/geojson.hpp"
#include "vce/io.hpp"
#include "vce/sim.hpp"

#include <chrono>
#include <cstdio>
#include <regex>

namespace vce::service {

using nlohmann::json;
namespace fs = std::filesystem;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTask:
    case ErrorCode::UnknownSession:
    case ErrorCode::NoSuchShot:
      return 404;
    case ErrorCode::ExperimentClosed:
    case ErrorCode::NoFreeSlot:
    case ErrorCode::WorkerRepeat:
    case ErrorCode::SessionNotActive:
    case ErrorCode::TooManyShots:
    case ErrorCode::WrongShotCount:
      return 409;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

// ---------------------------------------------------------------------------

fs::path FileJournal::live_path(const std::string& session_id) const {
  return dir_ / "sessions" / (session_id + ".jsonl");
}

void FileJournal::on_action(const ActionLogEntry& entry) {
  io::append_file(live_path(entry.session_id), to_json(entry).dump() + "\n");
}

void FileJournal::on_commit(const Session& session, std::span<const ActionLogEntry> log,
                            const TabooRegistry& registry) {
  io::append_file(dir_ / "actions.jsonl", to_jsonl(log));
  io::write_file_atomic(dir_ / "registry.json", registry.to_json().dump() + "\n");
  std::error_code ec;
  fs::remove(live_path(session.id), ec);
}

void FileJournal::on_abandon(const Session& session) {
  std::error_code ec;
  fs::remove(live_path(session.id), ec);
}

// ---------------------------------------------------------------------------

namespace {

double wall_clock() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

json point_json(const GeoPoint& p) { return json::array({p.lat, p.lon}); }

Response error_response(const Error& e) {
  return {http_status(e.code()), json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}};
}

std::string config_text(const json& cfg) {
  if (cfg.is_null()) return {};
  if (cfg.is_string()) return cfg.get<std::string>();
  if (!cfg.is_object()) throw Error(ErrorCode::ParseError, "config must be a string or an object");
  std::string text;
  for (const auto& [key, value] : cfg.items()) {
    std::string v;
    if (value.is_string()) v = value.get<std::string>();
    else if (value.is_boolean()) v = value.get<bool>() ? "true" : "false";
    else if (value.is_number()) v = value.dump();
    else throw Error(ErrorCode::ParseError, "config value for '" + key + "' must be a scalar");
    text += key + " = " + v + "\n";
  }
  return text;
}

std::string session_task_id(const std::string& session_id) {
  const auto dash = session_id.find('-');
  if (dash == std::string::npos) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
  return session_id.substr(0, dash);
}

// Groups entries by session, keeping first-appearance order.
std::vector<std::vector<ActionLogEntry>> by_session(const std::vector<ActionLogEntry>& entries) {
  std::vector<std::vector<ActionLogEntry>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& e : entries) {
    auto [it, inserted] = index.emplace(e.session_id, out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(e);
  }
  return out;
}

// A crash mid-append can leave a torn last line; that action is lost.
std::vector<ActionLogEntry> read_live_journal(const fs::path& path) {
  std::string text = io::read_file(path);
  try {
    return parse_jsonl(text);
  } catch (const Error&) {
    while (!text.empty() && text.back() == '\n') text.pop_back();
    const auto cut = text.rfind('\n');
    text = cut == std::string::npos ? std::string() : text.substr(0, cut + 1);
    io::write_file_atomic(path, text);
    return parse_jsonl(text);
  }
}

}  // namespace

Service::Service(fs::path data_dir, Clock clock) : root_(std::move(data_dir)), clock_(std::move(clock)) {
  if (!clock_) clock_ = wall_clock;
  fs::create_directories(root_ / "tasks");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root_ / "tasks")) {
    if (entry.is_directory() && fs::exists(entry.path() / "task.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) load_task(d);
}

void Service::save_descriptor(const Task& t) const {
  const auto& d = t.descriptor;
  json j{{"id", d.id}, {"config", dump_config(d.config)}, {"instructions", d.instructions}, {"closed", d.closed}};
  io::write_file_atomic(root_ / "tasks" / d.id / "task.json", j.dump(1) + "\n");
}

void Service::load_task(const fs::path& dir) {
  auto t = std::make_unique<Task>();
  json meta;
  try {
    meta = json::parse(io::read_file(dir / "task.json"));
    t->descriptor.id = meta.at("id").get<std::string>();
    t->descriptor.config = parse_config(meta.at("config").get<std::string>());
    t->descriptor.instructions = meta.value("instructions", std::string{});
    t->descriptor.closed = meta.value("closed", false);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, "bad task file in " + dir.string() + ": " + ex.what());
  }
  auto world = std::make_shared<const World>(
      geojson::world_from_geojson(json::parse(io::read_file(dir / "world.geojson"))));
  const auto& cfg = t->descriptor.config;
  t->experiment = std::make_unique<Experiment>(world, cfg.task, cfg.taboo_if_enabled(), t->descriptor.id + "-s");
  t->journal = std::make_unique<FileJournal>(dir);

  if (fs::exists(dir / "actions.jsonl")) {
    for (const auto& transcript : by_session(parse_jsonl(io::read_file(dir / "actions.jsonl")))) {
      t->experiment->replay_session(transcript);
    }
  }
  std::vector<fs::path> live;
  if (fs::exists(dir / "sessions")) {
    for (const auto& entry : fs::directory_iterator(dir / "sessions")) live.push_back(entry.path());
  }
  std::sort(live.begin(), live.end());
  for (const auto& path : live) {
    const std::string sid = path.stem().string();
    if (t->experiment->sessions().count(sid)) {
      // Committed before the journal could be removed.
      fs::remove(path);
      continue;
    }
    const auto entries = read_live_journal(path);
    if (entries.empty()) {
      fs::remove(path);
      continue;
    }
    const Session& s = t->experiment->replay_session(entries);
    if (s.state == SessionState::Completed || s.state == SessionState::Escaped) {
      // Crashed between the final action and the commit append.
      std::vector<ActionLogEntry> log;
      for (const auto& e : t->experiment->committed_log())
        if (e.session_id == sid) log.push_back(e);
      t->journal->on_commit(s, log, t->experiment->registry());
    } else if (s.state == SessionState::Abandoned) {
      fs::remove(path);
    }
  }
  io::write_file_atomic(dir / "registry.json", t->experiment->registry().to_json().dump() + "\n");
  if (t->descriptor.closed) t->experiment->close();
  t->experiment->set_journal(t->journal.get());

  const std::string& id = t->descriptor.id;
  if (id.size() > 1) {
    try {
      next_task_ = std::max<std::uint64_t>(next_task_, std::stoull(id.substr(1)) + 1);
    } catch (const std::exception&) {
    }
  }
  tasks_.emplace(id, std::move(t));
}

std::size_t Service::task_count() const {
  std::lock_guard lock(tasks_mutex_);
  return tasks_.size();
}

Service::Task& Service::task(const std::string& id) const {
  std::lock_guard lock(tasks_mutex_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(ErrorCode::UnknownTask, "unknown task " + id);
  return *it->second;
}

Service::Task& Service::task_of_session(const std::string& session_id) const {
  try {
    return task(session_task_id(session_id));
  } catch (const Error&) {
    throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
  }
}

const Experiment& Service::experiment(const std::string& task_id) const { return *task(task_id).experiment; }

Response Service::create_task(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
  ExperimentConfig cfg = parse_config(config_text(body.value("config", json())));

  World world;
  if (body.contains("world")) {
    world = geojson::world_from_geojson(body.at("world"));
  } else {
    world = generate_synthetic_world(cfg.world);
  }
  if (body.contains("aoi")) {
    AreaOfInterest aoi = geojson::aoi_from_geojson(body.at("aoi"), cfg.world.name);
    world = World(world.graph(), std::move(aoi), world.pois(), world.sight_radius_m());
  }

  auto t = std::make_unique<Task>();
  {
    std::lock_guard lock(tasks_mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%04llu", static_cast<unsigned long long>(next_task_++));
    t->descriptor.id = buf;
  }
  t->descriptor.config = cfg;
  t->descriptor.instructions = body.value("instructions", std::string{});
  const fs::path dir = root_ / "tasks" / t->descriptor.id;
  fs::create_directories(dir / "sessions");
  io::write_file(dir / "world.geojson", geojson::world_to_geojson(world).dump() + "\n");
  save_descriptor(*t);

  auto shared = std::make_shared<const World>(std::move(world));
  t->experiment = std::make_unique<Experiment>(shared, cfg.task, cfg.taboo_if_enabled(), t->descriptor.id + "-s");
  t->journal = std::make_unique<FileJournal>(dir);
  t->experiment->set_journal(t->journal.get());

  json out = describe(*t);
  std::lock_guard lock(tasks_mutex_);
  tasks_.emplace(t->descriptor.id, std::move(t));
  return {201, out};
}

json Service::describe(const Task& t) const {
  const auto& d = t.descriptor;
  const auto& e = *t.experiment;
  json boundary = json::array();
  for (const auto& p : e.world().aoi().boundary()) boundary.push_back(point_json(p));
  return json{{"id", d.id},
              {"status", e.is_open() ? "Open" : "Closed"},
              {"strategy", to_string(d.config.task.strategy)},
              {"num_executions", d.config.task.num_executions},
              {"num_instances", d.config.task.num_instances},
              {"completed_executions", e.completed_count()},
              {"active_sessions", e.active_count()},
              {"abandoned_sessions", e.abandoned_count()},
              {"instructions", d.instructions},
              {"boundary", boundary},
              {"n_nodes", e.world().graph().size()},
              {"config", dump_config(d.config)}};
}

json Service::view(const Task& t, const Session& s) const {
  const World& w = t.experiment->world();
  const auto& node = w.graph().node(s.current_node);
  auto relative = [&](NodeId id) {
    const auto& p = w.graph().node(id).position;
    return json{{"id", id},
                {"pos", point_json(p)},
                {"bearing", bearing(node.position, p).degrees()},
                {"distance_m", haversine_distance(node.position, p)}};
  };
  json neighbors = json::array();
  for (NodeId n : node.neighbors) neighbors.push_back(relative(n));
  json visible = json::array();
  for (NodeId n : node.visible_nodes) visible.push_back(relative(n));

  const auto& taboo = t.experiment->taboo();
  json pois = json::array();
  for (PoiId id : w.pois_visible_at(s.current_node)) {
    const auto& poi = w.pois()[id];
    bool is_taboo = false;
    if (taboo) {
      for (const auto& m : s.taboo_snapshot) is_taboo = is_taboo || haversine_distance(m, poi.position) <= taboo->taboo_radius_m;
    }
    pois.push_back({{"id", id},
                    {"bearing", bearing(node.position, poi.position).degrees()},
                    {"distance_m", haversine_distance(node.position, poi.position)},
                    {"taboo", is_taboo}});
  }
  return json{{"session_id", s.id},
              {"state", to_string(s.state)},
              {"node", {{"id", node.id}, {"pos", point_json(node.position)}, {"in_area", node.in_area}}},
              {"neighbors", neighbors},
              {"visible_nodes", visible},
              {"pois", pois},
              {"pending_shots", s.pending_shots.size()},
              {"detections", s.detections.size()},
              {"num_instances", t.descriptor.config.task.num_instances}};
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body_text) {
  static const std::regex tasks_re("^/tasks/?$");
  static const std::regex task_re("^/tasks/([^/]+)$");
  static const std::regex task_action_re("^/tasks/([^/]+)/(close|sessions|map)$");
  static const std::regex session_re("^/sessions/([^/]+)$");
  static const std::regex session_action_re("^/sessions/([^/]+)/(move|shots|submit|abandon|view)$");
  static const std::regex shot_re("^/sessions/([^/]+)/shots/([0-9]+)$");

  try {
    json body = json::object();
    if (!body_text.empty()) {
      body = json::parse(body_text, nullptr, false);
      if (body.is_discarded()) throw Error(ErrorCode::ParseError, "request body is not valid JSON");
    }
    auto bad_method = [&] { return Response{405, json{{"error", "MethodNotAllowed"}, {"message", method + " " + path}}}; };
    const double now = clock_();
    std::smatch m;

    if (std::regex_match(path, m, tasks_re)) {
      if (method != "POST") return bad_method();
      return create_task(body);
    }
    if (std::regex_match(path, m, task_re)) {
      if (method != "GET") return bad_method();
      Task& t = task(m[1]);
      std::lock_guard lock(t.mutex);
      t.experiment->expire_idle(now, kSessionIdleLimitS);
      return {200, describe(t)};
    }
    if (std::regex_match(path, m, task_action_re)) {
      Task& t = task(m[1]);
      const std::string action = m[2];
      std::lock_guard lock(t.mutex);
      t.experiment->expire_idle(now, kSessionIdleLimitS);
      if (action == "map") {
        if (method != "GET") return bad_method();
        const auto clusters = consolidate(t.experiment->committed_detections(), t.descriptor.config.aggregation);
        return {200, geojson::clusters_to_geojson(clusters)};
      }
      if (method != "POST") return bad_method();
      if (action == "close") {
        t.experiment->close();
        t.descriptor.closed = true;
        save_descriptor(t);
        return {200, describe(t)};
      }
      const std::string worker = body.value("worker_id", std::string("anonymous"));
      const auto seed = derive_seed(t.descriptor.config.seed, t.experiment->sessions().size(), 0);
      const Session& s = t.experiment->start_session(worker, seed, now);
      json markers = json::array();
      for (const auto& p : s.taboo_snapshot) markers.push_back(point_json(p));
      return {201, json{{"task_id", t.descriptor.id},
                        {"session", session_to_json(s)},
                        {"start_node", s.current_node},
                        {"start_position", point_json(t.experiment->world().graph().node(s.current_node).position)},
                        {"instructions", t.descriptor.instructions},
                        {"taboo_markers", markers}}};
    }
    if (std::regex_match(path, m, session_re)) {
      if (method != "GET") return bad_method();
      const std::string sid = m[1];
      Task& t = task_of_session(sid);
      std::lock_guard lock(t.mutex);
      t.experiment->expire_idle(now, kSessionIdleLimitS);
      return {200, session_to_json(t.experiment->session(sid))};
    }
    if (std::regex_match(path, m, shot_re)) {
      if (method != "DELETE") return bad_method();
      const std::string sid = m[1];
      Task& t = task_of_session(sid);
      std::lock_guard lock(t.mutex);
      t.experiment->expire_idle(now, kSessionIdleLimitS);
      t.experiment->discard_shot(sid, std::stoull(m[2].str()), now);
      return {200, json{{"session", session_to_json(t.experiment->session(sid))}}};
    }
    if (std::regex_match(path, m, session_action_re)) {
      const std::string sid = m[1];
      const std::string action = m[2];
      Task& t = task_of_session(sid);
      std::lock_guard lock(t.mutex);
      t.experiment->expire_idle(now, kSessionIdleLimitS);
      Experiment& e = *t.experiment;
      if (action == "view") {
        if (method != "GET") return bad_method();
        return {200, view(t, e.session(sid))};
      }
      if (method != "POST") return bad_method();
      if (action == "move") {
        if (!body.contains("target") || !body.at("target").is_number_unsigned()) {
          throw Error(ErrorCode::InvalidParams, "move needs a non-negative integer 'target'");
        }
        const auto out = e.move(sid, body.at("target").get<NodeId>(), now);
        return {200, json{{"outcome", to_string(out.kind)},
                          {"explanation", out.explanation},
                          {"session", session_to_json(e.session(sid))}}};
      }
      if (action == "shots") {
        if (!body.contains("heading") || !body.at("heading").is_number()) {
          throw Error(ErrorCode::InvalidParams, "shot needs a numeric 'heading'");
        }
        e.take_shot(sid, Heading(body.at("heading").get<double>()), now);
        return {200, json{{"session", session_to_json(e.session(sid))}}};
      }
      if (action == "submit") {
        const auto out = e.submit(sid, now);
        json j{{"outcome", to_string(out.kind)}, {"reason", out.reason}, {"session", session_to_json(e.session(sid))}};
        if (out.detection) j["detection"] = detection_to_json(*out.detection);
        return {200, j};
      }
      e.abandon(sid, now);
      return {200, json{{"session", session_to_json(e.session(sid))}}};
    }
    return {404, json{{"error", "NotFound"}, {"message", "no route for " + path}}};
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return {500, json{{"error", "Internal"}, {"message", e.what()}}};
  }
}

}  // namespace vce::service
