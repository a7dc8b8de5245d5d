#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "vce/aggregation.hpp"
#include "vce/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

using namespace vce;

namespace {

std::vector<GeoPoint> random_patch(std::mt19937_64& rng, int n, double side) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(fixture::at(u(rng), u(rng)));
  return pts;
}

// Clustered points: a few tight blobs plus uniform background.
std::vector<GeoPoint> blobby_patch(std::mt19937_64& rng, int n, double side) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::normal_distribution<double> g(0.0, 4.0);
  std::vector<std::pair<double, double>> centers;
  for (int k = 0; k < 8; ++k) centers.emplace_back(u(rng), u(rng));
  std::vector<GeoPoint> pts;
  for (int i = 0; i < n; ++i) {
    if (i % 3 == 0) {
      pts.push_back(fixture::at(u(rng), u(rng)));
    } else {
      const auto& c = centers[rng() % centers.size()];
      pts.push_back(fixture::at(c.first + g(rng), c.second + g(rng)));
    }
  }
  return pts;
}

// Partition as sorted sets of original indices.
std::vector<std::vector<std::size_t>> canonical(const DbscanResult& r, const std::vector<std::size_t>& perm) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& c : r.clusters) {
    std::vector<std::size_t> m;
    for (auto i : c) m.push_back(perm[i]);
    std::sort(m.begin(), m.end());
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Per point: the core component of its cluster, -1 for noise.
std::vector<int> core_label(const std::vector<std::vector<std::size_t>>& part, const oracle::DbscanTruth& truth) {
  std::vector<int> out(truth.core.size(), -1);
  for (const auto& c : part) {
    int comp = -1;
    for (auto i : c)
      if (truth.core[i]) comp = truth.core_component[i];
    for (auto i : c) out[i] = comp;
  }
  return out;
}

}  // namespace

TEST_SUITE("aggregation") {

TEST_CASE("dbscan small examples") {
  AggregationParams p;
  SUBCASE("three points within 3 m form one cluster") {
    const std::vector pts{fixture::at(0, 0), fixture::at(2, 0), fixture::at(1, 2)};
    const auto r = dbscan(pts, p);
    REQUIRE(r.clusters.size() == 1);
    CHECK(r.clusters[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(r.noise.empty());
  }
  SUBCASE("two isolated points are noise") {
    const std::vector pts{fixture::at(0, 0), fixture::at(100, 0)};
    const auto r = dbscan(pts, p);
    CHECK(r.clusters.empty());
    CHECK(r.noise == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("eps is inclusive") {
    const std::vector pts{fixture::at(0, 0), fixture::at(0, 5), fixture::at(0, 9.999)};
    CHECK(dbscan(pts, p).clusters.size() == 1);
  }
  SUBCASE("empty input") {
    const auto r = dbscan(std::vector<GeoPoint>{}, p);
    CHECK(r.clusters.empty());
    CHECK(r.noise.empty());
  }
  SUBCASE("a border point between two clusters goes to the first") {
    // Cores around x = 0 and x = 18; the point at x = 9 reaches both but has only 3 neighbors.
    p.min_pts = 4;
    const std::vector pts{fixture::at(0, 0),  fixture::at(-1, 1),  fixture::at(-1, -1), fixture::at(-2, 0),
                          fixture::at(9, 0),  fixture::at(18, 0), fixture::at(19, 1),  fixture::at(19, -1),
                          fixture::at(20, 0)};
    const auto r = dbscan(pts, p);
    REQUIRE(r.clusters.size() == 2);
    CHECK(std::count(r.clusters[0].begin(), r.clusters[0].end(), 4u) == 1);
    const auto truth = oracle::brute_dbscan(pts, p.eps_m, p.min_pts);
    std::size_t ties = 0;
    CHECK(oracle::audit_partition(truth, r.clusters, r.noise, &ties) == "");
    CHECK(ties == 1);
  }
  SUBCASE("invalid parameters") {
    AggregationParams bad;
    bad.min_pts = 0;
    CHECK_THROWS_AS(dbscan(std::vector<GeoPoint>{}, bad), Error);
    bad = {};
    bad.eps_m = 0;
    CHECK_THROWS_AS(dbscan(std::vector<GeoPoint>{}, bad), Error);
  }
}

TEST_CASE("dbscan matches the brute-force oracle") {
  AggregationParams p;
  std::size_t clusters = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pts = seed % 2 ? random_patch(rng, 150, 300) : blobby_patch(rng, 150, 300);
    const auto r = dbscan(pts, p);
    const auto truth = oracle::brute_dbscan(pts, p.eps_m, p.min_pts);
    INFO("seed " << seed);
    CHECK(oracle::audit_partition(truth, r.clusters, r.noise) == "");
    clusters += r.clusters.size();
  }
  CHECK(clusters > 30);
}

TEST_CASE("dbscan is order independent up to labels and border ties") {
  AggregationParams p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto pts = blobby_patch(rng, 150, 200);
    const auto truth = oracle::brute_dbscan(pts, p.eps_m, p.min_pts);
    std::vector<std::size_t> id(pts.size());
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
    const auto base = canonical(dbscan(pts, p), id);

    for (int shuffle = 0; shuffle < 10; ++shuffle) {
      auto perm = id;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<GeoPoint> shuffled;
      for (auto i : perm) shuffled.push_back(pts[i]);
      const auto r = dbscan(shuffled, p);
      const auto got = canonical(r, perm);
      if (got == base) continue;
      // Any divergence must come from border points reachable from two clusters.
      REQUIRE(got.size() == base.size());
      const auto a = core_label(base, truth), b = core_label(got, truth);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (a[i] != b[i]) CHECK(truth.reachable_components[i].size() > 1);
      }
    }
  }
}

TEST_CASE("min_pts of one leaves no noise") {
  AggregationParams p;
  p.min_pts = 1;
  std::mt19937_64 rng(9);
  const auto pts = random_patch(rng, 80, 500);
  const auto r = dbscan(pts, p);
  CHECK(r.noise.empty());
  std::size_t total = 0;
  for (const auto& c : r.clusters) total += c.size();
  CHECK(total == pts.size());
}

TEST_CASE("spreading points past eps makes them all noise") {
  AggregationParams p;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    std::vector<std::pair<double, double>> xy;
    for (int i = 0; i < 40; ++i) xy.emplace_back(u(rng), u(rng));
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xy.size(); ++i)
      for (std::size_t j = i + 1; j < xy.size(); ++j)
        dmin = std::min(dmin, std::hypot(xy[i].first - xy[j].first, xy[i].second - xy[j].second));
    const double scale = 2.0 * p.eps_m / dmin;
    std::vector<GeoPoint> pts;
    for (auto [x, y] : xy) pts.push_back(fixture::at(x * scale, y * scale));
    const auto r = dbscan(pts, p);
    CHECK(r.clusters.empty());
    CHECK(r.noise.size() == pts.size());
  }
}

TEST_CASE("far-flung points fall back to pairwise scanning") {
  AggregationParams p;
  std::vector<GeoPoint> pts{GeoPoint(46.0, 11.0), GeoPoint(46.00001, 11.0), GeoPoint(46.00002, 11.0),
                            GeoPoint(10.0, 100.0), GeoPoint(10.00001, 100.0)};
  const auto r = dbscan(pts, p);
  CHECK(r.clusters.size() == 1);
  CHECK(r.noise == std::vector<std::size_t>{3, 4});
  CHECK(oracle::audit_partition(oracle::brute_dbscan(pts, p.eps_m, p.min_pts), r.clusters, r.noise) == "");
}

TEST_CASE("consolidate") {
  AggregationParams p;
  SUBCASE("empty input gives an empty map") { CHECK(consolidate(std::vector<Detection>{}, p).empty()); }
  SUBCASE("five workers within 6 m make one cluster") {
    std::vector<Detection> ds;
    const double xy[5][2] = {{0, 0}, {3, 0}, {0, 3}, {-3, 0}, {0, -3}};
    for (int i = 0; i < 5; ++i) {
      ds.push_back(fixture::detection("d" + std::to_string(i), "w" + std::to_string(i), fixture::at(xy[i][0], xy[i][1])));
    }
    const auto cs = consolidate(ds, p);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].distinct_workers == 5);
    CHECK(cs[0].members.size() == 5);
    CHECK(haversine_distance(cs[0].centroid, fixture::at(0, 0)) < 1e-6);
  }
  SUBCASE("noise is dropped and workers are counted once") {
    std::vector<Detection> ds{fixture::detection("a", "w1", fixture::at(0, 0)),
                              fixture::detection("b", "w1", fixture::at(1, 0)),
                              fixture::detection("c", "w2", fixture::at(0, 1)),
                              fixture::detection("x", "w3", fixture::at(200, 0))};
    const auto cs = consolidate(ds, p);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].distinct_workers == 2);
    CHECK(cs[0].members == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("confirmed set equals the oracle's on synthetic detections") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 10; ++round) {
      const auto pts = blobby_patch(rng, 120, 300);
      std::vector<Detection> ds;
      for (std::size_t i = 0; i < pts.size(); ++i)
        ds.push_back(fixture::detection("d" + std::to_string(i), "w" + std::to_string(i % 17), pts[i]));
      const auto cs = consolidate(ds, p);
      const auto truth = oracle::brute_dbscan(pts, p.eps_m, p.min_pts);
      int components = 0;
      for (int c : truth.core_component) components = std::max(components, c + 1);
      // Each component keeps all its cores, so it always has at least min_pts members.
      CHECK(static_cast<int>(cs.size()) == components);
      for (const auto& c : cs) {
        CHECK(c.members.size() >= static_cast<std::size_t>(p.min_pts));
        // Centroid is the plain mean of the members.
        LocalPoint sum = LocalPoint::Zero();
        const GeoPoint first = pts[std::stoul(c.members.front().substr(1))];
        for (const auto& m : c.members) sum += project_local(first, pts[std::stoul(m.substr(1))]);
        CHECK(haversine_distance(c.centroid, unproject_local(first, sum / double(c.members.size()))) < 1e-6);
      }
    }
  }
}

}  // TEST_SUITE
