#include "vce/geo.hpp"

#include "vce/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vce {
namespace {

double to_rad(double deg) { return deg * kPi / 180.0; }
double to_deg(double rad) { return rad * 180.0 / kPi; }

double wrap_lon_delta(double d) {
  if (d > 180.0) d -= 360.0;
  if (d < -180.0) d += 360.0;
  return d;
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

constexpr double kMaxProjectionRangeM = 50000.0;
constexpr double kParallelEpsilon = 1e-9;
constexpr double kBoundaryToleranceM = 1e-7;

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 ||
      lon < -180.0 || lon > 180.0) {
    throw Error(ErrorCode::InvalidCoordinate,
                "coordinate out of range: (" + std::to_string(lat_deg) + ", " +
                    std::to_string(lon_deg) + ")");
  }
}

bool operator==(const GeoPoint& a, const GeoPoint& b) {
  return std::abs(a.lat - b.lat) <= kGeoEpsilonDeg && std::abs(a.lon - b.lon) <= kGeoEpsilonDeg;
}

Heading::Heading(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d = 0.0;  // -1e-17 + 360 rounds up to 360
  degrees_ = d;
}

Eigen::Vector2d Heading::direction() const {
  const double r = to_rad(degrees_);
  return {std::sin(r), std::cos(r)};
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = to_rad(b.lat - a.lat);
  const double dlon = to_rad(b.lon - a.lon);
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(to_rad(a.lat)) * std::cos(to_rad(b.lat)) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

Heading bearing(const GeoPoint& from, const GeoPoint& to) {
  const double phi1 = to_rad(from.lat);
  const double phi2 = to_rad(to.lat);
  const double dlon = to_rad(to.lon - from.lon);
  const double y = std::sin(dlon) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlon);
  return Heading(to_deg(std::atan2(y, x)));
}

LocalPoint project_local(const GeoPoint& origin, const GeoPoint& p) {
  if (haversine_distance(origin, p) >= kMaxProjectionRangeM) {
    throw Error(ErrorCode::OutOfProjectionRange, "point too far from projection origin");
  }
  const double x = wrap_lon_delta(p.lon - origin.lon) * std::cos(to_rad(origin.lat)) * kMetersPerDegree;
  const double y = (p.lat - origin.lat) * kMetersPerDegree;
  return {x, y};
}

GeoPoint unproject_local(const GeoPoint& origin, const LocalPoint& q) {
  const double lat = origin.lat + q.y() / kMetersPerDegree;
  double lon = origin.lon + q.x() / (std::cos(to_rad(origin.lat)) * kMetersPerDegree);
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return GeoPoint(lat, lon);
}

GeoPoint mean_position(std::span<const GeoPoint> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidParams, "mean of empty point set");
  const GeoPoint& ref = points.front();
  double lat = 0.0;
  double dlon = 0.0;
  for (const auto& p : points) {
    lat += p.lat;
    dlon += wrap_lon_delta(p.lon - ref.lon);
  }
  const double n = static_cast<double>(points.size());
  double lon = ref.lon + dlon / n;
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return GeoPoint(lat / n, lon);
}

std::optional<LocalPoint> ray_intersection(const Ray& r1, const Ray& r2) {
  const double denom = cross2(r1.direction, r2.direction);
  if (std::abs(denom) < kParallelEpsilon) return std::nullopt;
  const Eigen::Vector2d w = r2.origin - r1.origin;
  const double t1 = cross2(w, r2.direction) / denom;
  const double t2 = cross2(w, r1.direction) / denom;
  if (t1 < 0.0 || t2 < 0.0) return std::nullopt;
  // Averaging the two parametrisations keeps the result symmetric in (r1, r2).
  const LocalPoint a = r1.origin + t1 * r1.direction;
  const LocalPoint b = r2.origin + t2 * r2.direction;
  return LocalPoint((a + b) / 2.0);
}

double point_segment_distance(const LocalPoint& p, const LocalPoint& a, const LocalPoint& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

TriangleSpread triangle_centroid_max_side_distance(const LocalPoint& p1, const LocalPoint& p2,
                                                   const LocalPoint& p3) {
  TriangleSpread out;
  out.centroid = (p1 + p2 + p3) / 3.0;
  out.dmax = std::max({point_segment_distance(out.centroid, p1, p2),
                       point_segment_distance(out.centroid, p2, p3),
                       point_segment_distance(out.centroid, p3, p1)});
  return out;
}

std::vector<GeoPoint> open_ring(std::span<const GeoPoint> ring) {
  std::vector<GeoPoint> out(ring.begin(), ring.end());
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  std::vector<GeoPoint> distinct;
  for (const auto& p : out) {
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
  }
  if (distinct.size() < 3) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 distinct vertices");
  }
  return out;
}

bool point_in_polygon(std::span<const GeoPoint> ring, const GeoPoint& p) {
  const std::vector<GeoPoint> verts = open_ring(ring);
  const LocalFrame frame(mean_position(verts));
  std::vector<LocalPoint> poly;
  poly.reserve(verts.size());
  for (const auto& v : verts) poly.push_back(frame.to_local(v));
  if (haversine_distance(frame.origin(), p) >= kMaxProjectionRangeM) return false;
  const LocalPoint q = frame.to_local(p);

  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (point_segment_distance(q, poly[j], poly[i]) <= kBoundaryToleranceM) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const LocalPoint& a = poly[i];
    const LocalPoint& b = poly[j];
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double x_cross = a.x() + (q.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (q.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polygon_area_m2(std::span<const GeoPoint> ring) {
  const std::vector<GeoPoint> verts = open_ring(ring);
  const LocalFrame frame(mean_position(verts));
  double twice = 0.0;
  for (std::size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++) {
    twice += cross2(frame.to_local(verts[j]), frame.to_local(verts[i]));
  }
  return std::abs(twice) / 2.0;
}

}  // namespace vce
