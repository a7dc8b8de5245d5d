#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace vce {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;
// Meters per degree of latitude (and of longitude at the equator).
inline constexpr double kMetersPerDegree = kPi * kEarthRadiusM / 180.0;
inline constexpr double kGeoEpsilonDeg = 1e-9;

// WGS84 coordinate in degrees. Ranges are checked on construction.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg);

  friend bool operator==(const GeoPoint& a, const GeoPoint& b);
};

// Meters east (x) and north (y) of a declared origin.
using LocalPoint = Eigen::Vector2d;

// Degrees clockwise from true north, always in [0, 360).
class Heading {
 public:
  Heading() = default;
  explicit Heading(double degrees);

  double degrees() const { return degrees_; }
  // Unit vector in the local east-north frame.
  Eigen::Vector2d direction() const;

 private:
  double degrees_ = 0.0;
};

struct Ray {
  LocalPoint origin = LocalPoint::Zero();
  Eigen::Vector2d direction = Eigen::Vector2d::UnitY();

  Ray() = default;
  Ray(const LocalPoint& o, const Heading& h) : origin(o), direction(h.direction()) {}
};

double haversine_distance(const GeoPoint& a, const GeoPoint& b);

// Initial great-circle bearing from `from` to `to`.
Heading bearing(const GeoPoint& from, const GeoPoint& to);

// Equirectangular projection around `origin`. Throws OutOfProjectionRange when
// `p` is 50 km or more away from the origin.
LocalPoint project_local(const GeoPoint& origin, const GeoPoint& p);
GeoPoint unproject_local(const GeoPoint& origin, const LocalPoint& q);

// A fixed projection origin; convenience wrapper over the two functions above.
class LocalFrame {
 public:
  explicit LocalFrame(const GeoPoint& origin) : origin_(origin) {}

  const GeoPoint& origin() const { return origin_; }
  LocalPoint to_local(const GeoPoint& p) const { return project_local(origin_, p); }
  GeoPoint to_geo(const LocalPoint& q) const { return unproject_local(origin_, q); }

 private:
  GeoPoint origin_;
};

// Arithmetic mean of the coordinates (small-extent use only).
GeoPoint mean_position(std::span<const GeoPoint> points);

// Point where both forward half-lines meet, or nullopt when the rays are
// parallel or the meeting point lies behind either origin.
std::optional<LocalPoint> ray_intersection(const Ray& r1, const Ray& r2);

double point_segment_distance(const LocalPoint& p, const LocalPoint& a, const LocalPoint& b);

struct TriangleSpread {
  LocalPoint centroid;
  double dmax = 0.0;
};

// Centroid of the triangle and the largest centroid-to-side (segment) distance.
TriangleSpread triangle_centroid_max_side_distance(const LocalPoint& p1, const LocalPoint& p2,
                                                   const LocalPoint& p3);

// Ray casting in a local frame centered on the ring. Points on the boundary
// count as inside. The ring may be explicitly closed or not.
bool point_in_polygon(std::span<const GeoPoint> ring, const GeoPoint& p);

// Ring without the closing duplicate. Throws DegeneratePolygon when fewer than
// three distinct vertices remain.
std::vector<GeoPoint> open_ring(std::span<const GeoPoint> ring);

// Shoelace area of the ring in square meters.
double polygon_area_m2(std::span<const GeoPoint> ring);

}  // namespace vce
