#include "vce/sim.hpp"

#include "vce/error.hpp"
#include "vce/evaluation.hpp"
#include "vce/geojson.hpp"
#include "vce/io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace vce {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Acute angle between the lines carried by two headings, in [0, 90].
double line_angle(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
  return std::min(d, 180.0 - d);
}

constexpr double kGoodCrossingDeg = 25.0;

// Hop distances from `from` over in-area nodes not known to be outside.
std::vector<int> bfs_hops(const ExplorableGraph& g, NodeId from, const std::set<NodeId>& blocked) {
  std::vector<int> dist(g.size(), -1);
  std::deque<NodeId> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : g.node(u).neighbors) {
      if (dist[v] >= 0 || !g.node(v).in_area || blocked.count(v)) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t salt) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream * 0x100000001b3ULL + salt));
}

WorkerAgent::WorkerAgent(std::shared_ptr<const World> world, WorkerPolicy policy, double taboo_radius_m)
    : world_(std::move(world)), policy_(policy), taboo_radius_m_(taboo_radius_m), rng_(policy.seed) {
  policy_.validate();
}

std::optional<PoiId> WorkerAgent::target_poi() const {
  if (!plan_) return std::nullopt;
  return plan_->poi;
}

void WorkerAgent::observe(const Session& s) {
  if (last_action_) {
    if (last_action_->kind == Action::Kind::Move && s.current_node != last_action_->target &&
        last_node_ == s.current_node) {
      known_outside_.insert(last_action_->target);
    }
    if (last_action_->kind == Action::Kind::Submit && plan_) {
      if (s.detections.size() > plan_->detections_before) {
        done_.insert(plan_->poi);
      } else if (++attempts_[plan_->poi] >= policy_.max_attempts_per_poi) {
        done_.insert(plan_->poi);
      }
      plan_.reset();
    }
  }
}

bool WorkerAgent::is_taboo(const Session& s, const GroundTruthPoI& poi) const {
  if (taboo_radius_m_ <= 0.0) return false;
  return std::any_of(s.taboo_snapshot.begin(), s.taboo_snapshot.end(), [&](const GeoPoint& m) {
    return haversine_distance(m, poi.position) <= taboo_radius_m_;
  });
}

std::optional<WorkerAgent::Capture> WorkerAgent::plan_capture(const Session& s, const GroundTruthPoI& poi) const {
  const auto& g = world_->graph();
  const auto from_here = bfs_hops(g, s.current_node, known_outside_);

  std::vector<NodeId> cands;
  for (NodeId n : poi.visible_from) {
    if (n == s.current_node || (from_here[n] >= 0 && g.node(n).in_area)) cands.push_back(n);
  }
  if (cands.size() < 3) return std::nullopt;

  std::vector<double> bearings;
  std::vector<std::vector<int>> hops;
  for (NodeId n : cands) {
    bearings.push_back(bearing(g.node(n).position, poi.position).degrees());
    hops.push_back(bfs_hops(g, n, known_outside_));
  }

  // Cheapest tour through the triple, starting from the current node.
  auto tour = [&](std::array<std::size_t, 3> idx, std::vector<NodeId>& order) {
    std::sort(idx.begin(), idx.end());
    int best = std::numeric_limits<int>::max();
    do {
      int cost = from_here[cands[idx[0]]];
      cost += hops[idx[0]][cands[idx[1]]] + hops[idx[1]][cands[idx[2]]];
      if (cost < best) {
        best = cost;
        order = {cands[idx[0]], cands[idx[1]], cands[idx[2]]};
      }
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
  };

  std::optional<Capture> best;
  double best_angle = -1.0;
  int best_cost = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      for (std::size_t k = j + 1; k < cands.size(); ++k) {
        const double angle = std::min({line_angle(bearings[i], bearings[j]), line_angle(bearings[j], bearings[k]),
                                       line_angle(bearings[i], bearings[k])});
        std::vector<NodeId> order;
        const int cost = tour({i, j, k}, order);
        const bool good = angle >= kGoodCrossingDeg;
        const bool best_good = best_angle >= kGoodCrossingDeg;
        bool better;
        if (good != best_good) better = good;
        else if (good) better = cost < best_cost || (cost == best_cost && angle > best_angle);
        else better = angle > best_angle || (angle == best_angle && cost < best_cost);
        if (!best || better) {
          best = Capture{poi.id, order, s.detections.size(), false};
          best_angle = angle;
          best_cost = cost;
        }
      }
    }
  }
  return best;
}

void WorkerAgent::try_sight(const Session& s) {
  const auto& here = world_->graph().node(s.current_node).position;
  std::vector<PoiId> visible = world_->pois_visible_at(s.current_node);
  std::stable_sort(visible.begin(), visible.end(), [&](PoiId a, PoiId b) {
    return haversine_distance(here, world_->pois()[a].position) < haversine_distance(here, world_->pois()[b].position);
  });
  std::bernoulli_distribution detect(policy_.detection_prob);
  for (PoiId id : visible) {
    const auto& poi = world_->pois()[id];
    if (done_.count(id) || is_taboo(s, poi)) continue;
    if (!detect(rng_)) continue;
    plan_ = plan_capture(s, poi);
    if (plan_) return;
    done_.insert(id);
  }
}

std::optional<NodeId> WorkerAgent::next_hop(NodeId from, NodeId to) const {
  if (from == to) return std::nullopt;
  const auto& g = world_->graph();
  const auto dist = bfs_hops(g, to, known_outside_);
  if (dist[from] < 0 && !g.node(from).in_area) {
    // Outside the area we may still walk back in; pick any neighbor that is.
    for (NodeId v : g.node(from).neighbors) {
      if (dist[v] >= 0) return v;
    }
    return std::nullopt;
  }
  for (NodeId v : g.node(from).neighbors) {
    if (dist[v] >= 0 && dist[v] + 1 == dist[from]) return v;
  }
  return std::nullopt;
}

Action WorkerAgent::explore(const Session& s) {
  const auto& g = world_->graph();
  const NodeId here = s.current_node;

  if (policy_.kind == PolicyKind::GreedyExplorer) {
    const auto dist = bfs_hops(g, here, known_outside_);
    int nearest = std::numeric_limits<int>::max();
    std::vector<NodeId> frontier;
    for (NodeId n = 0; n < g.size(); ++n) {
      if (dist[n] <= 0 || visited_.count(n)) continue;
      if (dist[n] < nearest) {
        nearest = dist[n];
        frontier.clear();
      }
      if (dist[n] == nearest) frontier.push_back(n);
    }
    if (!frontier.empty()) {
      const NodeId goal = frontier[std::uniform_int_distribution<std::size_t>(0, frontier.size() - 1)(rng_)];
      if (auto hop = next_hop(here, goal)) return Action{Action::Kind::Move, *hop, {}, 0};
    }
  }

  std::vector<NodeId> options;
  for (NodeId v : g.node(here).neighbors) {
    if (!known_outside_.count(v)) options.push_back(v);
  }
  if (options.empty()) options = g.node(here).neighbors;
  if (options.empty()) return Action{Action::Kind::Abandon, 0, {}, 0};
  if (options.size() > 1 && prev_node_ &&
      std::find(options.begin(), options.end(), *prev_node_) != options.end() &&
      std::bernoulli_distribution(policy_.backtrack_avoid_prob)(rng_)) {
    std::erase(options, *prev_node_);
  }
  const NodeId pick = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng_)];
  return Action{Action::Kind::Move, pick, {}, 0};
}

Action WorkerAgent::next(const Session& s) {
  observe(s);
  const bool arrived = !last_node_ || *last_node_ != s.current_node;
  if (arrived) {
    prev_node_ = last_node_;
    last_node_ = s.current_node;
    visited_.insert(s.current_node);
  }

  Action a;
  if (!plan_ && !s.pending_shots.empty()) {
    a = Action{Action::Kind::Discard, 0, {}, s.pending_shots.size() - 1};
  } else {
    if (!plan_ && arrived) try_sight(s);
    if (plan_) {
      const auto& poi = world_->pois()[plan_->poi];
      const std::size_t k = s.pending_shots.size();
      if (k >= 3) {
        plan_->detections_before = s.detections.size();
        a = Action{Action::Kind::Submit, 0, {}, 0};
      } else if (plan_->waypoints[k] == s.current_node) {
        std::normal_distribution<double> noise(0.0, policy_.heading_noise_deg);
        const double exact = bearing(world_->graph().node(s.current_node).position, poi.position).degrees();
        const double err = policy_.heading_noise_deg > 0.0 ? noise(rng_) : 0.0;
        a = Action{Action::Kind::Shoot, 0, Heading(exact + err), 0};
      } else if (auto hop = next_hop(s.current_node, plan_->waypoints[k])) {
        a = Action{Action::Kind::Move, *hop, {}, 0};
      } else {
        done_.insert(plan_->poi);
        plan_.reset();
        a = s.pending_shots.empty() ? explore(s) : Action{Action::Kind::Discard, 0, {}, s.pending_shots.size() - 1};
      }
    } else {
      a = explore(s);
    }
  }
  last_action_ = a;
  return a;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const World> load_world(const ExperimentConfig& cfg) {
  if (cfg.world_file) {
    auto j = nlohmann::json::parse(io::read_file(*cfg.world_file), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ParseError, "world file is not valid JSON: " + *cfg.world_file);
    return std::make_shared<const World>(geojson::world_from_geojson(j));
  }
  return std::make_shared<const World>(generate_synthetic_world(cfg.world));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_world(cfg)); }

namespace {

struct Slot {
  std::string session_id;
  WorkerAgent agent;
  double clock = 0.0;
  int steps = 0;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const World> world) {
  cfg.validate();
  const auto taboo = cfg.taboo_if_enabled();
  Experiment exp(world, cfg.task, taboo, "s");
  const int max_sessions = cfg.sim.max_sessions > 0 ? cfg.sim.max_sessions : 4 * cfg.task.num_executions;
  const int width = cfg.schedule.kind == Schedule::Kind::Interleaved ? cfg.schedule.width : 1;
  const auto& costs = cfg.sim.costs;

  int started = 0;
  std::vector<std::string> start_order;
  std::vector<Slot> active;

  auto can_start = [&] {
    return started < max_sessions && exp.completed_count() + exp.active_count() < cfg.task.num_executions;
  };
  auto start = [&](double now) {
    const auto k = static_cast<std::uint64_t>(started++);
    char worker[32];
    std::snprintf(worker, sizeof worker, "w%04llu", static_cast<unsigned long long>(k + 1));
    WorkerPolicy policy = cfg.policy;
    policy.seed = derive_seed(cfg.seed ^ cfg.policy.seed, k, 1);
    const Session& s = exp.start_session(worker, derive_seed(cfg.seed, k, 0), now);
    start_order.push_back(s.id);
    active.push_back(Slot{s.id, WorkerAgent(world, policy, taboo ? taboo->taboo_radius_m : 0.0), now, 0});
  };

  // One action for the slot; returns false once its session has ended.
  auto step = [&](Slot& slot) {
    const Session& s = exp.session(slot.session_id);
    if (slot.steps >= cfg.sim.step_cap) {
      exp.abandon(slot.session_id, slot.clock);
      return false;
    }
    const Action a = policy_step(slot.agent, s);
    ++slot.steps;
    switch (a.kind) {
      case Action::Kind::Move:
        slot.clock += costs.move_s;
        exp.move(slot.session_id, a.target, slot.clock);
        break;
      case Action::Kind::Shoot:
        slot.clock += costs.shot_s;
        exp.take_shot(slot.session_id, a.heading, slot.clock);
        break;
      case Action::Kind::Discard:
        slot.clock += costs.discard_s;
        exp.discard_shot(slot.session_id, a.index, slot.clock);
        break;
      case Action::Kind::Submit:
        slot.clock += costs.submit_s;
        exp.submit(slot.session_id, slot.clock);
        break;
      case Action::Kind::Abandon:
        exp.abandon(slot.session_id, slot.clock);
        return false;
    }
    return exp.session(slot.session_id).state == SessionState::Active;
  };

  while (can_start() && static_cast<int>(active.size()) < width) start(0.0);
  while (!active.empty()) {
    for (std::size_t i = 0; i < active.size();) {
      if (step(active[i])) {
        ++i;
        continue;
      }
      const double ended = active[i].clock;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
      if (can_start()) {
        start(ended);
        // Keep the newcomer in the finished session's turn position.
        std::rotate(active.begin() + static_cast<std::ptrdiff_t>(i), active.end() - 1, active.end());
        ++i;
      }
    }
  }

  ExperimentResult r;
  r.config = cfg;
  r.world = world;
  for (const auto& id : start_order) {
    const Session& s = exp.session(id);
    r.sessions.push_back(s);
    if (s.state == SessionState::Completed) ++r.completed;
    if (s.state == SessionState::Escaped) ++r.escaped;
    if (s.state == SessionState::Abandoned) ++r.abandoned;
  }
  r.log = exp.committed_log();
  r.detections = exp.committed_detections();
  for (const auto& id : exp.commit_order()) r.executions.push_back(exp.session(id).detections);
  r.confirmed = consolidate(r.detections, cfg.aggregation);
  r.registry = exp.registry();
  r.coverage = coverage(world->graph(), exp.visits());
  r.exhausted = r.completed + r.escaped < cfg.task.num_executions;
  return r;
}

std::vector<ExperimentResult> run_replicates(const ExperimentConfig& cfg) {
  auto world = load_world(cfg);
  std::vector<ExperimentResult> out;
  for (int i = 0; i < cfg.sim.n_policy_seeds; ++i) {
    ExperimentConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    c.sim.n_policy_seeds = 1;
    out.push_back(run_experiment(c, world));
  }
  return out;
}

std::string sessions_csv(const ExperimentResult& r) {
  std::string out = "session_id,worker_id,state,detections,distance_m,started_at,ended_at\n";
  for (const auto& s : r.sessions) {
    out += s.id + "," + s.worker_id + "," + std::string(to_string(s.state)) + "," +
           std::to_string(s.detections.size()) + "," + io::fixed(s.distance_walked_m, 3) + "," +
           io::fixed(s.started_at, 3) + "," + io::fixed(s.last_action_at, 3) + "\n";
  }
  return out;
}

std::string summary_csv(const ExperimentResult& r) {
  const auto truth = geojson::truth_map(*r.world);
  const auto found = map_from_clusters("confirmed", r.confirmed);
  const auto cmp = match_maps(found, truth, 10.0);
  std::string out = "key,value\n";
  out += "strategy," + std::string(to_string(r.config.task.strategy)) + "\n";
  out += "seed," + std::to_string(r.config.seed) + "\n";
  out += "schedule," + to_string(r.config.schedule) + "\n";
  out += "sessions_started," + std::to_string(r.sessions.size()) + "\n";
  out += "completed," + std::to_string(r.completed) + "\n";
  out += "escaped," + std::to_string(r.escaped) + "\n";
  out += "abandoned," + std::to_string(r.abandoned) + "\n";
  out += "exhausted," + std::string(r.exhausted ? "true" : "false") + "\n";
  out += "total_detections," + std::to_string(r.detections.size()) + "\n";
  out += "confirmed," + std::to_string(r.confirmed.size()) + "\n";
  out += "truth_pois," + std::to_string(truth.points.size()) + "\n";
  out += "matched_truth," + std::to_string(cmp.intersection) + "\n";
  out += "jaccard_vs_truth," + io::fixed(cmp.jaccard, 6) + "\n";
  out += "coverage_percent," + io::fixed(r.coverage.percent, 4) + "\n";
  return out;
}

void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / "config.cfg", dump_config(r.config));
  io::write_file(dir / "world.geojson", geojson::world_to_geojson(*r.world).dump(1) + "\n");
  io::write_file(dir / "truth.geojson", geojson::map_to_geojson(geojson::truth_map(*r.world)).dump(1) + "\n");
  io::write_file(dir / "actions.jsonl", to_jsonl(r.log));
  io::write_file(dir / "detections.geojson", geojson::detections_to_geojson(r.detections).dump(1) + "\n");
  io::write_file(dir / "confirmed.geojson", geojson::clusters_to_geojson(r.confirmed).dump(1) + "\n");
  io::write_file(dir / "registry.json", r.registry.to_json().dump(1) + "\n");
  io::write_file(dir / "sessions.csv", sessions_csv(r));
  io::write_file(dir / "summary.csv", summary_csv(r));
  io::write_file(dir / "heatmap.csv", geojson::heatmap_csv(r.world->graph(), r.coverage.heatmap));
}

}  // namespace vce
