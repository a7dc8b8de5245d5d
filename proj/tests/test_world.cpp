#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vce/error.hpp"
#include "vce/geojson.hpp"
#include "vce/world.hpp"

#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace vce;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("world") {

TEST_CASE("area of interest rejects rings without area") {
  CHECK(code_of([] { AreaOfInterest({fixture::at(0, 0), fixture::at(10, 0)}, "x"); }) == ErrorCode::DegeneratePolygon);
  CHECK_THROWS_AS(AreaOfInterest({fixture::at(0, 0), fixture::at(10, 0), fixture::at(20, 0)}, "line"), Error);
  const AreaOfInterest ok(fixture::rect(0, 0, 10, 10), "sq");
  CHECK(ok.boundary().size() == 4);
  CHECK(ok.contains(fixture::at(5, 5)));
}

TEST_CASE("graph structure: symmetric neighbors, edge lengths, no self loops") {
  fixture::Layout s;
  s.nodes = {{0, 0}, {30, 0}, {30, 40}, {0, 40}};
  s.edges = {{0, 1}, {1, 2}, {2, 3}};
  s.aoi = fixture::rect(-5, -5, 35, 45);
  const auto w = fixture::build(s);
  const auto& g = w->graph();
  for (const auto& n : g.nodes()) {
    for (NodeId m : n.neighbors) {
      const auto& back = g.node(m).neighbors;
      CHECK(std::find(back.begin(), back.end(), n.id) != back.end());
    }
  }
  for (const auto& e : g.edges()) {
    CHECK(std::abs(e.length_m - haversine_distance(g.node(e.a).position, g.node(e.b).position)) < 1e-6);
  }
  CHECK(g.adjacent(1, 2));
  CHECK_FALSE(g.adjacent(0, 2));

  // Independently hand-summed: 30 + 40 + 30 with the oracle metric.
  double hand = 0.0;
  for (auto [a, b] : s.edges) hand += oracle::great_circle_m(g.node(a).position, g.node(b).position);
  CHECK(std::abs(explorable_distance(g) - hand) < 1e-6);
  CHECK(explorable_distance(g) == doctest::Approx(100.0).epsilon(1e-5));

  std::vector<PanoNode> loop(2);
  loop[0].id = 0;
  loop[1].id = 1;
  loop[0].position = fixture::at(0, 0);
  loop[1].position = fixture::at(10, 0);
  CHECK_THROWS_AS(ExplorableGraph(loop, {{0, 0}}), Error);
  CHECK(code_of([&] { ExplorableGraph(loop, {{0, 5}}); }) == ErrorCode::UnknownNode);
}

TEST_CASE("explorable distance of trivial graphs") {
  fixture::Layout s;
  s.nodes = {{0, 0}, {100, 0}};
  s.edges = {{0, 1}};
  s.aoi = fixture::rect(-5, -5, 105, 5);
  CHECK(explorable_distance(fixture::build(s)->graph()) == doctest::Approx(100.0).epsilon(1e-9));
  s.edges.clear();
  CHECK(explorable_distance(fixture::build(s)->graph()) == 0.0);
}

TEST_CASE("random start point") {
  SUBCASE("single node") {
    fixture::Layout s;
    s.nodes = {{0, 0}};
    s.aoi = fixture::rect(-5, -5, 5, 5);
    CHECK(random_start_point(fixture::build(s)->graph(), 99) == 0);
  }
  SUBCASE("deterministic and only in-area") {
    const auto w = fixture::line_world(3, 10, 2);
    const NodeId first = random_start_point(w->graph(), 5);
    for (int i = 0; i < 5; ++i) CHECK(random_start_point(w->graph(), 5) == first);
    for (std::uint64_t seed = 0; seed < 200; ++seed) CHECK(random_start_point(w->graph(), seed) != 2);
  }
  SUBCASE("no eligible node") {
    fixture::Layout s;
    s.nodes = {{100, 100}};
    s.aoi = fixture::rect(-5, -5, 5, 5);
    CHECK(code_of([&] { random_start_point(fixture::build(s)->graph(), 1); }) == ErrorCode::EmptyGraph);
    CHECK(code_of([] { random_start_point(ExplorableGraph{}, 1); }) == ErrorCode::EmptyGraph);
  }
  SUBCASE("indoor nodes are never drawn") {
    std::vector<PanoNode> nodes(3);
    for (NodeId i = 0; i < 3; ++i) {
      nodes[i].id = i;
      nodes[i].position = fixture::at(i * 10.0, 0);
    }
    nodes[1].indoor = true;
    ExplorableGraph g(nodes, {{0, 1}, {1, 2}});
    for (std::uint64_t seed = 0; seed < 200; ++seed) CHECK(random_start_point(g, seed) != 1);
  }
  SUBCASE("uniform over 10 nodes") {
    const auto w = fixture::line_world(10, 10, 10);
    std::map<NodeId, int> freq;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++freq[random_start_point(w->graph(), 1000 + i)];
    const double expect = draws / 10.0;
    const double sigma = std::sqrt(draws * 0.1 * 0.9);
    CHECK(freq.size() == 10);
    for (const auto& [node, count] : freq) CHECK(std::abs(count - expect) < 4 * sigma);
  }
}

TEST_CASE("synthetic world: perimeter-only 2x2 grid") {
  WorldParams p;
  p.grid_rows = 2;
  p.grid_cols = 2;
  p.spacing_m = 50;
  p.segments_per_block = 1;
  p.n_pois = 0;
  const World w = generate_synthetic_world(p);
  CHECK(w.graph().size() == 4);
  CHECK(w.graph().edges().size() == 4);
  CHECK(explorable_distance(w.graph()) == doctest::Approx(200.0).epsilon(1e-4));
  CHECK(w.pois().empty());
}

TEST_CASE("synthetic world: intermediate nodes and invariants") {
  WorldParams p;  // defaults: 6x6 intersections, 8 segments per block, 10 m spacing
  const World w = generate_synthetic_world(p);
  // 6 horizontal + 6 vertical streets of 40 segments, shared intersections counted once.
  const std::size_t per_street = 5 * 8 + 1;
  CHECK(w.graph().size() == 12 * per_street - 36);
  CHECK(explorable_distance(w.graph()) == doctest::Approx(12 * 400.0).epsilon(1e-4));
  CHECK(w.pois().size() == 40);

  for (const auto& n : w.graph().nodes()) CHECK(n.in_area);
  for (const auto& poi : w.pois()) {
    // visible_from is exactly the brute-force sight set.
    std::vector<NodeId> brute;
    for (const auto& n : w.graph().nodes()) {
      if (oracle::great_circle_m(n.position, poi.position) <= w.sight_radius_m()) brute.push_back(n.id);
    }
    CHECK(poi.visible_from == brute);
    // Offset 2-8 m from its street node.
    double nearest = 1e9;
    for (const auto& n : w.graph().nodes()) nearest = std::min(nearest, haversine_distance(n.position, poi.position));
    CHECK(nearest >= 2.0 - 1e-6);
    CHECK(nearest <= 8.0 + 1e-6);
  }
  for (std::size_t a = 0; a < w.pois().size(); ++a) {
    for (std::size_t b = a + 1; b < w.pois().size(); ++b) {
      CHECK(haversine_distance(w.pois()[a].position, w.pois()[b].position) >= p.min_poi_separation_m - 1e-6);
    }
  }
  // visible_nodes reach along straight streets only.
  for (const auto& n : w.graph().nodes()) {
    for (NodeId v : n.visible_nodes) {
      CHECK(haversine_distance(n.position, w.graph().node(v).position) <= p.jump_range_m + 1e-6);
      CHECK(w.graph().can_jump(n.id, v));
    }
  }
}

TEST_CASE("synthetic world is a pure function of its parameters") {
  WorldParams p;
  p.seed = 77;
  p.outer_blocks = 1;
  const auto a = geojson::world_to_geojson(generate_synthetic_world(p)).dump();
  const auto b = geojson::world_to_geojson(generate_synthetic_world(p)).dump();
  CHECK(a == b);
  p.seed = 78;
  CHECK(geojson::world_to_geojson(generate_synthetic_world(p)).dump() != a);
}

TEST_CASE("synthetic world with outer blocks has out-of-area nodes and in-area PoIs") {
  WorldParams p;
  p.outer_blocks = 1;
  const World w = generate_synthetic_world(p);
  std::size_t outside = 0;
  for (const auto& n : w.graph().nodes()) outside += !n.in_area;
  CHECK(outside > 0);
  for (const auto& poi : w.pois()) CHECK(w.aoi().contains(poi.position));
}

TEST_CASE("synthetic world parameter validation") {
  WorldParams p;
  p.grid_rows = 1;
  CHECK(code_of([&] { generate_synthetic_world(p); }) == ErrorCode::InvalidParams);
  p = WorldParams{};
  p.spacing_m = 0;
  CHECK(code_of([&] { generate_synthetic_world(p); }) == ErrorCode::InvalidParams);
  p = WorldParams{};
  p.n_pois = -1;
  CHECK(code_of([&] { generate_synthetic_world(p); }) == ErrorCode::InvalidParams);
}

TEST_CASE("coverage and heatmap") {
  const auto w = fixture::line_world(10, 10, 10);
  VisitCounter all;
  for (NodeId n = 0; n < 10; ++n) all.record(n, "s1");
  auto r = coverage(w->graph(), all);
  CHECK(r.percent == 100.0);
  CHECK(r.heatmap.size() == 10);

  VisitCounter half;
  for (NodeId n = 0; n < 5; ++n) {
    half.record(n, "s1");
    half.record(n, "s1");
    half.record(n, "s2");
  }
  r = coverage(w->graph(), half);
  CHECK(r.percent == 50.0);
  CHECK(r.heatmap[0] == 3);
  CHECK(r.heatmap_dedup[0] == 2);
  CHECK(half.total() == 15);

  half.forget_session("s1");
  CHECK(half.total() == 5);
  CHECK(coverage(w->graph(), half).heatmap[0] == 1);

  VisitCounter bad;
  bad.record(42);
  CHECK(code_of([&] { coverage(w->graph(), bad); }) == ErrorCode::UnknownNode);

  const std::string csv = geojson::heatmap_csv(w->graph(), coverage(w->graph(), all).heatmap);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(csv.rfind("node_id,lat,lon,visits\n", 0) == 0);
}

TEST_CASE("coverage percent never decreases as visits accumulate") {
  WorldParams p;
  const World w = generate_synthetic_world(p);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(w.graph().size() - 1));
  VisitCounter v;
  double last = 0.0;
  for (int i = 0; i < 2000; ++i) {
    v.record(pick(rng), "s" + std::to_string(i % 7));
    const double now = coverage(w.graph(), v).percent;
    REQUIRE(now >= last);
    last = now;
  }
}

TEST_CASE("world GeoJSON round trip") {
  WorldParams p;
  p.outer_blocks = 1;
  p.n_pois = 12;
  const World w = generate_synthetic_world(p);
  const auto j = geojson::world_to_geojson(w);
  const World back = geojson::world_from_geojson(j);
  CHECK(back.graph().size() == w.graph().size());
  CHECK(back.graph().edges().size() == w.graph().edges().size());
  CHECK(back.pois().size() == w.pois().size());
  for (std::size_t i = 0; i < w.pois().size(); ++i) CHECK(back.pois()[i].visible_from == w.pois()[i].visible_from);
  for (std::size_t i = 0; i < w.graph().size(); ++i) {
    CHECK(back.graph().node(static_cast<NodeId>(i)).in_area == w.graph().node(static_cast<NodeId>(i)).in_area);
  }
  CHECK(geojson::world_to_geojson(back).dump() == j.dump());

  CHECK(code_of([] { geojson::world_from_geojson(nlohmann::json::object()); }) == ErrorCode::ParseError);
  auto no_boundary = j;
  auto& feats = no_boundary["features"];
  feats.erase(feats.begin());
  CHECK(code_of([&] { geojson::world_from_geojson(no_boundary); }) == ErrorCode::InvalidGeometry);
}

}  // TEST_SUITE
