#pragma once

#include "vce/aggregation.hpp"
#include "vce/config.hpp"
#include "vce/engine.hpp"
#include "vce/world.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace vce {

struct Action {
  enum class Kind { Move, Shoot, Discard, Submit, Abandon } kind = Kind::Move;
  NodeId target = 0;      // Move
  Heading heading;        // Shoot
  std::size_t index = 0;  // Discard
};

// Synthetic worker. All feedback is read back from the session view, so the
// agent only needs to see the session before each step.
class WorkerAgent {
 public:
  // `taboo_radius_m` is 0 when the strategy has no taboo markers to avoid.
  WorkerAgent(std::shared_ptr<const World> world, WorkerPolicy policy, double taboo_radius_m);

  Action next(const Session& s);

  // PoI currently being captured, if any.
  std::optional<PoiId> target_poi() const;
  const std::set<PoiId>& finished_pois() const { return done_; }

 private:
  struct Capture {
    PoiId poi = 0;
    std::vector<NodeId> waypoints;  // three shot positions, in visiting order
    std::size_t detections_before = 0;
    bool submitted = false;
  };

  void observe(const Session& s);
  void try_sight(const Session& s);
  std::optional<Capture> plan_capture(const Session& s, const GroundTruthPoI& poi) const;
  bool is_taboo(const Session& s, const GroundTruthPoI& poi) const;
  std::optional<NodeId> next_hop(NodeId from, NodeId to) const;
  Action explore(const Session& s);

  std::shared_ptr<const World> world_;
  WorkerPolicy policy_;
  double taboo_radius_m_;
  std::mt19937_64 rng_;

  std::optional<Action> last_action_;
  std::optional<NodeId> last_node_;
  std::optional<NodeId> prev_node_;
  std::set<NodeId> visited_;
  std::set<NodeId> known_outside_;
  std::set<PoiId> done_;
  std::map<PoiId, int> attempts_;
  std::optional<Capture> plan_;
};

// One policy step against the current session view.
inline Action policy_step(WorkerAgent& agent, const Session& s) { return agent.next(s); }

struct ExperimentResult {
  ExperimentConfig config;
  std::shared_ptr<const World> world;
  std::vector<Session> sessions;                   // every started session, final state, start order
  std::vector<ActionLogEntry> log;                 // committed sessions only
  std::vector<Detection> detections;               // commit order
  std::vector<std::vector<Detection>> executions;  // per committed session, commit order
  std::vector<PoICluster> confirmed;
  TabooRegistry registry;
  CoverageReport coverage;
  int completed = 0;
  int escaped = 0;
  int abandoned = 0;
  // True when max_sessions ran out before num_executions sessions finished.
  bool exhausted = false;
};

std::shared_ptr<const World> load_world(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const World> world);

// One run per policy seed: seed, seed + 1, ..., seed + n_policy_seeds - 1.
std::vector<ExperimentResult> run_replicates(const ExperimentConfig& cfg);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t salt);

// Writes the result bundle; output is a pure function of the result.
void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir);

std::string sessions_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);

}  // namespace vce
