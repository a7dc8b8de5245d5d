#pragma once

#include "vce/geo.hpp"
#include "vce/world.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace vce {

enum class Strategy { Basic, Taboo };
enum class EscapeMode { And, Or };
enum class StartPointPolicy { Random };

struct TaskConfig {
  Strategy strategy = Strategy::Basic;
  int num_executions = 60;
  int num_instances = 5;
  double reward = 0.20;  // recorded, never paid
  double delta_m = 10.0;
  double duplicate_radius_m = 10.0;
  bool allow_repeat = true;
  StartPointPolicy start_point = StartPointPolicy::Random;

  void validate() const;
};

struct TabooConfig {
  int taboo_threshold = 3;
  double escape_distance_m = 1800.0;
  double escape_time_s = 180.0;
  double taboo_radius_m = 10.0;
  EscapeMode escape_mode = EscapeMode::And;

  void validate() const;
};

struct Shot {
  GeoPoint position;
  Heading heading;
  NodeId node_id = 0;
  double timestamp = 0.0;
};

struct Detection {
  std::string id;  // "<session_id>#<k>", stable under replay
  std::string worker_id;
  std::string session_id;
  std::array<Shot, 3> shots;
  GeoPoint centroid;
  double dmax_m = 0.0;
  double timestamp = 0.0;
};

enum class SessionState { Active, Completed, Escaped, Abandoned };

struct Session {
  std::string id;
  std::string worker_id;
  SessionState state = SessionState::Active;
  NodeId current_node = 0;
  NodeId last_in_area_node = 0;
  std::vector<Shot> pending_shots;
  std::vector<Detection> detections;
  double distance_walked_m = 0.0;
  double started_at = 0.0;
  double last_detection_at = 0.0;
  double last_action_at = 0.0;
  std::vector<GeoPoint> taboo_snapshot;
  double reward_recorded = 0.0;
  std::uint64_t seed = 0;
};

enum class ActionKind {
  Move,
  BoundaryRevert,
  ShotTaken,
  ShotDiscarded,
  SubmitOk,
  SubmitFailTriangulation,
  SubmitFailDuplicate,
  SubmitFailTaboo,
  Escape,
  Complete,
  Abandon,
};

std::string_view to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view s);
std::string_view to_string(SessionState state);
std::string_view to_string(Strategy s);

struct ActionLogEntry {
  std::string session_id;
  double t = 0.0;
  ActionKind kind = ActionKind::Move;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json to_json(const ActionLogEntry& e);
ActionLogEntry action_from_json(const nlohmann::json& j);
std::string to_jsonl(std::span<const ActionLogEntry> entries);
// Throws MalformedLog on unparsable lines.
std::vector<ActionLogEntry> parse_jsonl(const std::string& text);

// ---------------------------------------------------------------------------
// Triangulation check applied to a three-shot submission.

enum class TriangulationVerdict { Ok, NoIntersection, TooSpread };

struct TriangulationResult {
  TriangulationVerdict verdict = TriangulationVerdict::NoIntersection;
  GeoPoint frame_origin;  // mean of shot positions
  std::array<std::optional<LocalPoint>, 3> intersections;
  LocalPoint centroid_local = LocalPoint::Zero();
  GeoPoint centroid;
  double dmax_m = 0.0;
};

TriangulationResult triangulate(const std::array<Shot, 3>& shots, double delta_m);

// ---------------------------------------------------------------------------

struct CandidateCluster {
  std::uint32_t id = 0;
  GeoPoint centroid;
  std::vector<std::string> members;
  std::set<std::string> workers;
  bool taboo = false;

  // Running mean of members, kept in a frame anchored at the first member.
  GeoPoint anchor;
  LocalPoint offset_sum = LocalPoint::Zero();
};

class TabooRegistry {
 public:
  TabooRegistry() = default;
  explicit TabooRegistry(const TabooConfig& cfg) : radius_m_(cfg.taboo_radius_m), threshold_(cfg.taboo_threshold) {}

  void update(std::span<const Detection> detections);

  const std::vector<CandidateCluster>& clusters() const { return clusters_; }
  std::vector<GeoPoint> taboo_positions() const;
  std::size_t committed_sessions() const { return committed_sessions_; }

  nlohmann::json to_json() const;
  static TabooRegistry from_json(const nlohmann::json& j);

 private:
  double radius_m_ = 10.0;
  int threshold_ = 3;
  std::vector<CandidateCluster> clusters_;
  std::size_t committed_sessions_ = 0;
};

// ---------------------------------------------------------------------------

struct MoveOutcome {
  enum class Kind { Moved, Reverted } kind = Kind::Moved;
  std::string explanation;  // "OutsideBoundary" when reverted
};

struct SubmitOutcome {
  enum class Kind { Accepted, RejectedTriangulation, RejectedDuplicate, RejectedTaboo } kind = Kind::Accepted;
  std::string reason;
  std::optional<Detection> detection;
  TriangulationResult triangulation;
};

std::string_view to_string(MoveOutcome::Kind k);
std::string_view to_string(SubmitOutcome::Kind k);

// Receives store events; the file-backed implementation lives in the service.
class ExperimentJournal {
 public:
  virtual ~ExperimentJournal() = default;
  virtual void on_action(const ActionLogEntry& entry) = 0;
  virtual void on_commit(const Session& session, std::span<const ActionLogEntry> log,
                         const TabooRegistry& registry) = 0;
  virtual void on_abandon(const Session& session) = 0;
};

struct ClockCosts {
  double move_s = 4.0;
  double shot_s = 3.0;
  double submit_s = 2.0;
  double discard_s = 1.0;
};

// One exploration task: sessions, the action-log store, the detection store and
// the taboo registry. Not internally synchronized; callers serialize access.
class Experiment {
 public:
  Experiment(std::shared_ptr<const World> world, TaskConfig task, std::optional<TabooConfig> taboo,
             std::string session_prefix = "s");

  const World& world() const { return *world_; }
  std::shared_ptr<const World> world_ptr() const { return world_; }
  const TaskConfig& task() const { return task_; }
  const std::optional<TabooConfig>& taboo() const { return taboo_; }
  void set_journal(ExperimentJournal* journal) { journal_ = journal; }

  const Session& start_session(const std::string& worker_id, std::uint64_t seed, double now);
  MoveOutcome move(const std::string& session_id, NodeId target, double now);
  void take_shot(const std::string& session_id, Heading heading, double now);
  void discard_shot(const std::string& session_id, std::size_t index, double now);
  SubmitOutcome submit(const std::string& session_id, double now);
  void abandon(const std::string& session_id, double now);
  // Runs automatically after every action; exposed for the HTTP layer and tests.
  bool check_escape(const std::string& session_id, double now);
  // Abandons every active session idle for at least `max_idle_s`.
  std::vector<std::string> expire_idle(double now, double max_idle_s);
  void close() { closed_ = true; }

  // Re-executes a logged session (as written by the engine) against this experiment.
  const Session& replay_session(std::span<const ActionLogEntry> entries);

  const Session& session(const std::string& id) const;
  const std::map<std::string, Session>& sessions() const { return sessions_; }
  std::span<const ActionLogEntry> session_log(const std::string& id) const;
  const std::vector<ActionLogEntry>& committed_log() const { return committed_log_; }
  const std::vector<Detection>& committed_detections() const { return committed_detections_; }
  const std::vector<std::string>& commit_order() const { return commit_order_; }
  const TabooRegistry& registry() const { return registry_; }
  const VisitCounter& visits() const { return visits_; }
  int completed_count() const { return completed_; }
  int active_count() const { return active_; }
  int abandoned_count() const { return abandoned_; }
  bool is_open() const { return !closed_ && completed_ < task_.num_executions; }

 private:
  Session& active_session(const std::string& id);
  double clamp_time(const Session& s, double now) const;
  void log(Session& s, double t, ActionKind kind, nlohmann::json payload);
  const Session& start_impl(const std::string& worker_id, std::uint64_t seed, double now,
                            std::optional<std::string> forced_id, std::optional<NodeId> forced_node,
                            std::optional<std::vector<GeoPoint>> forced_snapshot);
  void commit(Session& s);
  void after_action(Session& s, double now);

  std::shared_ptr<const World> world_;
  TaskConfig task_;
  std::optional<TabooConfig> taboo_;
  std::string prefix_;
  ExperimentJournal* journal_ = nullptr;

  std::map<std::string, Session> sessions_;
  std::map<std::string, std::vector<ActionLogEntry>> live_logs_;
  std::vector<ActionLogEntry> committed_log_;
  std::vector<Detection> committed_detections_;
  std::vector<std::string> commit_order_;
  TabooRegistry registry_;
  VisitCounter visits_;
  std::uint64_t next_session_ = 1;
  int completed_ = 0;
  int active_ = 0;
  int abandoned_ = 0;
  bool closed_ = false;
};

nlohmann::json session_to_json(const Session& s);
nlohmann::json detection_to_json(const Detection& d);

}  // namespace vce
