#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "vce/evaluation.hpp"
#include "vce/geojson.hpp"
#include "vce/io.hpp"
#include "vce/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace vce;

namespace {

// Drives one session with the agent until it ends or `until` returns true.
template <class Stop>
std::vector<Action> drive(Experiment& ex, WorkerAgent& agent, const std::string& sid, Stop until, int cap = 2000) {
  std::vector<Action> done;
  double t = 0;
  for (int i = 0; i < cap && ex.session(sid).state == SessionState::Active; ++i) {
    const Action a = policy_step(agent, ex.session(sid));
    done.push_back(a);
    t += 1;
    switch (a.kind) {
      case Action::Kind::Move: ex.move(sid, a.target, t); break;
      case Action::Kind::Shoot: ex.take_shot(sid, a.heading, t); break;
      case Action::Kind::Discard: ex.discard_shot(sid, a.index, t); break;
      case Action::Kind::Submit: ex.submit(sid, t); break;
      case Action::Kind::Abandon: ex.abandon(sid, t); break;
    }
    if (until(a)) break;
  }
  return done;
}

WorkerPolicy perfect(std::uint64_t seed) {
  WorkerPolicy p;
  p.detection_prob = 1.0;
  p.heading_noise_deg = 0.0;
  p.seed = seed;
  return p;
}

ExperimentConfig small_config(Strategy s) {
  ExperimentConfig c;
  c.task.strategy = s;
  c.task.num_executions = 10;
  c.world.grid_rows = 4;
  c.world.grid_cols = 4;
  c.world.n_pois = 15;
  return c;
}

// A PoI with three shot nodes 5 m away at bearings 0, 120 and 240 from it.
std::shared_ptr<const World> tripod_world() {
  fixture::Layout s;
  for (double a : {0.0, 120.0, 240.0}) {
    const double r = a * kPi / 180.0;
    s.nodes.emplace_back(50 + 5 * std::sin(r), 50 + 5 * std::cos(r));
  }
  s.edges = {{0, 1}, {1, 2}, {0, 2}};
  s.pois = {{50, 50}};
  s.aoi = fixture::rect(0, 0, 100, 100);
  return fixture::build(s);
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("perfect worker captures a visible PoI with three shots") {
  const auto world = fixture::triad_world();
  TaskConfig task;
  task.num_instances = 2;
  Experiment ex(world, task, std::nullopt);
  const auto sid = ex.start_session("w1", 3, 0).id;
  WorkerAgent agent(world, perfect(1), 0.0);
  const auto actions = drive(ex, agent, sid, [](const Action& a) { return a.kind == Action::Kind::Submit; });
  REQUIRE(!actions.empty());
  CHECK(actions.back().kind == Action::Kind::Submit);
  const auto shots = std::count_if(actions.begin(), actions.end(), [](const Action& a) { return a.kind == Action::Kind::Shoot; });
  CHECK(shots == 3);
  for (const auto& a : actions) CHECK(a.kind != Action::Kind::Discard);
  REQUIRE(ex.session(sid).detections.size() == 1);
  CHECK(ex.session(sid).detections[0].dmax_m < 1e-3);
  // The agent learns the outcome on its next step.
  CHECK(agent.finished_pois().empty());
  agent.next(ex.session(sid));
  CHECK(agent.finished_pois().size() == 1);
}

TEST_CASE("perfect worker completes one execution with five detections") {
  ExperimentConfig c;
  c.task.num_executions = 1;
  c.policy = perfect(0);
  const auto r = run_experiment(c);
  CHECK(r.completed == 1);
  CHECK(r.abandoned == 0);
  CHECK(r.detections.size() == 5);
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].state == SessionState::Completed);
}

TEST_CASE("a worker who never detects walks to the cap or escapes") {
  SUBCASE("basic") {
    auto c = small_config(Strategy::Basic);
    c.policy.detection_prob = 0.0;
    c.task.num_executions = 2;
    c.sim.step_cap = 300;
    c.sim.max_sessions = 2;
    const auto r = run_experiment(c);
    CHECK(r.abandoned == 2);
    CHECK(r.exhausted);
    CHECK(r.detections.empty());
    CHECK(r.log.empty());
    for (const auto& s : r.sessions) CHECK(s.pending_shots.empty());
  }
  SUBCASE("taboo") {
    auto c = small_config(Strategy::Taboo);
    c.policy.detection_prob = 0.0;
    c.task.num_executions = 3;
    const auto r = run_experiment(c);
    CHECK(r.escaped == 3);
    CHECK(r.detections.empty());
    for (const auto& s : r.sessions) CHECK(s.distance_walked_m >= c.taboo.escape_distance_m);
  }
}

TEST_CASE("aiming noise: rejection rate matches the geometric oracle") {
  const auto world = tripod_world();
  const double noise_deg = 15.0;
  TaskConfig task;
  task.num_instances = 1;

  int rejected = 0;
  const int trials = 500;
  for (int i = 0; i < trials; ++i) {
    Experiment ex(world, task, std::nullopt);
    const auto sid = ex.start_session("w", static_cast<std::uint64_t>(i), 0).id;
    WorkerPolicy p = perfect(derive_seed(99, static_cast<std::uint64_t>(i), 7));
    p.heading_noise_deg = noise_deg;
    WorkerAgent agent(world, p, 0.0);
    drive(ex, agent, sid, [](const Action& a) { return a.kind == Action::Kind::Submit; });
    rejected += ex.session(sid).detections.empty();
  }
  const double measured = static_cast<double>(rejected) / trials;

  // Prediction: the oracle applied to independently drawn noisy triads.
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> noise(0.0, noise_deg);
  const auto& g = world->graph();
  const auto& poi = world->pois()[0].position;
  int predicted_rejections = 0;
  const int oracle_trials = 2000;
  for (int i = 0; i < oracle_trials; ++i) {
    std::array<Shot, 3> shots;
    for (NodeId n = 0; n < 3; ++n) {
      shots[n].position = g.node(n).position;
      shots[n].heading = Heading(oracle::initial_bearing_deg(g.node(n).position, poi) + noise(rng));
    }
    predicted_rejections += !oracle::triangulate(shots, task.delta_m).accepted;
  }
  const double predicted = static_cast<double>(predicted_rejections) / oracle_trials;
  INFO("measured " << measured << " predicted " << predicted);
  CHECK(std::abs(measured - predicted) <= 0.05);
}

TEST_CASE("sixty perfect workers confirm nearly every reachable PoI") {
  ExperimentConfig c;
  c.policy = perfect(0);
  const auto world = load_world(c);

  // Reachable: three in-area, outdoor, connected vision nodes whose exact rays pass the oracle check.
  const auto& g = world->graph();
  std::vector<int> comp(g.size(), -1);
  for (NodeId s = 0; s < g.size(); ++s) {
    if (comp[s] >= 0 || !g.node(s).in_area) continue;
    std::vector<NodeId> stack{s};
    comp[s] = static_cast<int>(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.node(u).neighbors)
        if (comp[v] < 0 && g.node(v).in_area) comp[v] = static_cast<int>(s), stack.push_back(v);
    }
  }
  std::vector<GeoPoint> reachable;
  for (const auto& poi : world->pois()) {
    std::vector<NodeId> ok;
    for (NodeId n : poi.visible_from)
      if (g.node(n).in_area && !g.node(n).indoor) ok.push_back(n);
    bool found = false;
    for (std::size_t i = 0; i < ok.size() && !found; ++i)
      for (std::size_t j = i + 1; j < ok.size() && !found; ++j)
        for (std::size_t k = j + 1; k < ok.size() && !found; ++k) {
          if (comp[ok[i]] != comp[ok[j]] || comp[ok[j]] != comp[ok[k]]) continue;
          std::array<Shot, 3> shots;
          const NodeId tri[3] = {ok[i], ok[j], ok[k]};
          for (int m = 0; m < 3; ++m) {
            shots[m].position = g.node(tri[m]).position;
            shots[m].heading = Heading(oracle::initial_bearing_deg(shots[m].position, poi.position));
          }
          found = oracle::triangulate(shots, c.task.delta_m).accepted;
        }
    if (found) reachable.push_back(poi.position);
  }
  REQUIRE(reachable.size() >= 30);

  const auto r = run_experiment(c, world);
  CHECK(r.completed == 60);
  CHECK(r.detections.size() == 300);
  PoIMap truth;
  for (std::size_t i = 0; i < reachable.size(); ++i) truth.points.push_back({std::to_string(i), reachable[i]});
  const auto cmp = match_maps(map_from_clusters("crowd", r.confirmed), truth, 10.0);
  INFO("confirmed " << cmp.intersection << " of " << reachable.size());
  CHECK(static_cast<double>(cmp.intersection) >= 0.95 * static_cast<double>(reachable.size()));
}

TEST_CASE("totals and cluster bounds per schedule") {
  int basic_runs = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ExperimentConfig c;
    c.seed = seed;
    const auto world = load_world(c);

    if (seed <= 3) {
      const auto basic = run_experiment(c, world);
      CHECK_FALSE(basic.exhausted);
      CHECK(basic.detections.size() == 300);
      ++basic_runs;
    }

    c.task.strategy = Strategy::Taboo;
    const auto seq = run_experiment(c, world);
    CHECK(seq.detections.size() <= 300);
    for (const auto& cl : seq.registry.clusters()) CHECK(cl.workers.size() <= 3);
    for (auto n : detections_per_confirmed(seq.confirmed)) CHECK(n <= 3);

    c.schedule = parse_schedule("interleaved:2");
    const auto k2 = run_experiment(c, world);
    for (auto n : detections_per_confirmed(k2.confirmed)) CHECK(n <= 3 + 2);
    for (const auto& cl : k2.registry.clusters()) CHECK(cl.workers.size() <= 3 + 2 - 1);
  }
  CHECK(basic_runs == 3);
}

TEST_CASE("interleaving lets concurrent workers push a cluster past the threshold") {
  std::size_t largest = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig c;
    c.seed = seed;
    c.task.strategy = Strategy::Taboo;
    c.schedule = parse_schedule("interleaved:3");
    const auto r = run_experiment(c);
    for (auto n : detections_per_confirmed(r.confirmed)) {
      CHECK(n <= 5);
      largest = std::max(largest, n);
    }
  }
  CHECK(largest > 3);
}

TEST_CASE("runs are reproducible and seeds matter") {
  auto c = small_config(Strategy::Taboo);
  c.schedule = parse_schedule("interleaved:2");
  const auto a = run_experiment(c), b = run_experiment(c);
  CHECK(to_jsonl(a.log) == to_jsonl(b.log));
  CHECK(summary_csv(a) == summary_csv(b));
  c.seed = 2;
  const auto d = run_experiment(c);
  CHECK(to_jsonl(a.log) != to_jsonl(d.log));

  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("bundles are byte-identical across runs") {
  auto c = small_config(Strategy::Basic);
  fixture::TempDir a("bundle-a"), b("bundle-b");
  write_bundle(run_experiment(c), a.path());
  write_bundle(run_experiment(c), b.path());
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    const auto other = b.path() / e.path().filename();
    REQUIRE(std::filesystem::exists(other));
    CHECK(io::read_file(e.path()) == io::read_file(other));
    ++files;
  }
  CHECK(files >= 10);
  for (const char* name : {"config.cfg", "world.geojson", "truth.geojson", "actions.jsonl", "detections.geojson",
                           "confirmed.geojson", "registry.json", "sessions.csv", "summary.csv", "heatmap.csv"}) {
    CHECK(std::filesystem::exists(a.path() / name));
  }
}

TEST_CASE("result bookkeeping") {
  auto c = small_config(Strategy::Basic);
  const auto r = run_experiment(c);
  CHECK(r.completed + r.escaped == c.task.num_executions);
  CHECK(r.executions.size() == static_cast<std::size_t>(r.completed + r.escaped));
  std::size_t total = 0;
  for (const auto& e : r.executions) total += e.size();
  CHECK(total == r.detections.size());
  CHECK(executions_from_log(r.log).size() == r.executions.size());
  const auto summary = summary_csv(r);
  for (const char* key : {"strategy,basic", "sessions_started,", "total_detections,50", "confirmed,", "jaccard_vs_truth,",
                          "coverage_percent,"}) {
    CHECK(summary.find(key) != std::string::npos);
  }
  CHECK(sessions_csv(r).rfind("session_id,worker_id,state,", 0) == 0);
  // Abandoned sessions are purged from both the visit counter and the log.
  const auto rebuilt = coverage(r.world->graph(), visits_from_log(r.log));
  CHECK(rebuilt.percent == r.coverage.percent);
}

TEST_CASE("greedy explorers also finish") {
  auto c = small_config(Strategy::Basic);
  c.policy.kind = PolicyKind::GreedyExplorer;
  const auto r = run_experiment(c);
  CHECK(r.completed == c.task.num_executions);
  CHECK(r.detections.size() == 50);
}

TEST_CASE("replicates use consecutive seeds") {
  auto c = small_config(Strategy::Basic);
  c.task.num_executions = 3;
  c.sim.n_policy_seeds = 3;
  c.seed = 10;
  const auto rs = run_replicates(c);
  REQUIRE(rs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rs[i].config.seed == 10 + i);
  CHECK(to_jsonl(rs[0].log) != to_jsonl(rs[1].log));
}

}  // TEST_SUITE
