#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "spmm/error.hpp"

namespace spmm {

/// Mean Earth radius in meters, used by every geodetic formula here.
inline constexpr double kEarthRadiusM = 6371000.0;

/// Largest |Δlat| or |Δlon| in degrees a point may have from a projection
/// origin.
inline constexpr double kMaxProjectionSpanDeg = 5.0;

template <typename Scalar>
using Planar = Eigen::Matrix<Scalar, 2, 1>;

/// Planar coordinates in meters (x east, y north) relative to a projection
/// origin.
using PlanarPoint = Planar<double>;

/// WGS-84 position in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline void require_valid(const GeoPoint& p) {
  if (!is_valid(p)) {
    throw InvalidCoordinate("invalid coordinate lat=" + std::to_string(p.lat) +
                            " lon=" + std::to_string(p.lon));
  }
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Great-circle distance in meters.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  require_valid(a);
  require_valid(b);
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg_to_rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Local equirectangular projection around a fixed origin. Accurate to well
/// under a meter for study areas spanning less than a degree.
class Projection {
 public:
  Projection() = default;
  explicit Projection(const GeoPoint& origin) : origin_(origin) {
    require_valid(origin);
    cos_lat_ = std::cos(deg_to_rad(origin.lat));
  }

  const GeoPoint& origin() const { return origin_; }

  PlanarPoint project(const GeoPoint& p) const {
    require_valid(p);
    const double dlat = p.lat - origin_.lat;
    const double dlon = p.lon - origin_.lon;
    if (std::abs(dlat) >= kMaxProjectionSpanDeg ||
        std::abs(dlon) >= kMaxProjectionSpanDeg) {
      throw InvalidCoordinate("point too far from projection origin");
    }
    return {dlon * cos_lat_ * kMetersPerDegree, dlat * kMetersPerDegree};
  }

  GeoPoint unproject(const PlanarPoint& p) const {
    return {origin_.lat + p.y() / kMetersPerDegree,
            origin_.lon + p.x() / (cos_lat_ * kMetersPerDegree)};
  }

  static constexpr double kMetersPerDegree =
      kEarthRadiusM * std::numbers::pi / 180.0;

 private:
  GeoPoint origin_{};
  double cos_lat_ = 1.0;
};

inline PlanarPoint project(const GeoPoint& origin, const GeoPoint& p) {
  return Projection(origin).project(p);
}

/// Compass bearing from a to b in degrees: 0 = north, clockwise, in [0, 360).
template <typename Scalar>
Scalar bearing(const Planar<Scalar>& a, const Planar<Scalar>& b) {
  const Planar<Scalar> d = b - a;
  if (d.x() == Scalar(0) && d.y() == Scalar(0)) {
    throw DomainError("bearing undefined for coincident points");
  }
  Scalar deg = std::atan2(d.x(), d.y()) * Scalar(180) / std::numbers::pi_v<Scalar>;
  if (deg < Scalar(0)) deg += Scalar(360);
  if (deg >= Scalar(360)) deg -= Scalar(360);
  return deg;
}

/// Wraps any angle into [0, 360).
template <typename Scalar>
Scalar normalize_degrees(Scalar deg) {
  Scalar r = std::fmod(deg, Scalar(360));
  if (r < Scalar(0)) r += Scalar(360);
  if (r >= Scalar(360)) r -= Scalar(360);
  return r;
}

/// Smallest angle between two headings, in [0, 180].
template <typename Scalar>
Scalar heading_error(Scalar h1, Scalar h2) {
  const Scalar d = std::abs(normalize_degrees(h1) - normalize_degrees(h2));
  return std::min(d, Scalar(360) - d);
}

template <typename Scalar>
struct Segment {
  Segment(const Planar<Scalar>& a_, const Planar<Scalar>& b_) : a(a_), b(b_) {
    if (a == b) throw DomainError("zero-length segment");
  }
  Planar<Scalar> a;
  Planar<Scalar> b;

  Scalar length() const { return (b - a).norm(); }
};

template <typename Scalar>
struct SegmentProjection {
  Scalar distance;
  Planar<Scalar> foot;
  Scalar t;
};

/// Closest point of a segment to p, clamped to the endpoints.
template <typename Scalar>
SegmentProjection<Scalar> point_segment_distance(const Planar<Scalar>& p,
                                                 const Segment<Scalar>& s) {
  const Planar<Scalar> ab = s.b - s.a;
  Scalar t = (p - s.a).dot(ab) / ab.squaredNorm();
  t = std::clamp(t, Scalar(0), Scalar(1));
  // t == 1 must land exactly on b, not on a + ab.
  const Planar<Scalar> foot = t == Scalar(1) ? Planar<Scalar>(s.b)
                                              : Planar<Scalar>(s.a + t * ab);
  return {(p - foot).norm(), foot, t};
}

template <typename Scalar>
struct PolylineProjection {
  Scalar distance;
  Planar<Scalar> foot;
  std::size_t segment_index;
  Scalar arc_offset;
};

/// Ordered vertex chain of at least two points with no repeated consecutive
/// vertices. Cumulative arc length is cached.
template <typename Scalar>
class BasicPolyline {
 public:
  using Point = Planar<Scalar>;

  BasicPolyline() = default;
  explicit BasicPolyline(std::vector<Point> vertices)
      : vertices_(std::move(vertices)) {
    if (vertices_.size() < 2) {
      throw DomainError("polyline needs at least two vertices");
    }
    cumulative_.resize(vertices_.size());
    cumulative_[0] = Scalar(0);
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      const Scalar len = (vertices_[i] - vertices_[i - 1]).norm();
      if (!(len > Scalar(0))) {
        throw DomainError("polyline has repeated consecutive vertices");
      }
      cumulative_[i] = cumulative_[i - 1] + len;
    }
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t segment_count() const { return vertices_.size() - 1; }
  Segment<Scalar> segment(std::size_t i) const {
    return {vertices_[i], vertices_[i + 1]};
  }
  /// Arc length from vertex 0 to vertex i.
  Scalar offset_of_vertex(std::size_t i) const { return cumulative_[i]; }
  Scalar length() const { return cumulative_.back(); }

  Eigen::AlignedBox<Scalar, 2> bounds() const {
    Eigen::AlignedBox<Scalar, 2> box;
    for (const auto& v : vertices_) box.extend(v);
    return box;
  }

 private:
  std::vector<Point> vertices_;
  std::vector<Scalar> cumulative_;
};

using Polyline = BasicPolyline<double>;

/// Closest point on a polyline. Equal distances resolve to the lowest
/// segment index.
template <typename Scalar>
PolylineProjection<Scalar> project_onto_polyline(
    const Planar<Scalar>& p, const BasicPolyline<Scalar>& line) {
  PolylineProjection<Scalar> best{std::numeric_limits<Scalar>::infinity(),
                                  line.vertices().front(), 0, Scalar(0)};
  for (std::size_t i = 0; i < line.segment_count(); ++i) {
    const auto seg = line.segment(i);
    const auto sp = point_segment_distance(p, seg);
    if (sp.distance < best.distance) {
      best = {sp.distance, sp.foot, i,
              line.offset_of_vertex(i) + sp.t * seg.length()};
    }
  }
  return best;
}

/// Point at a given arc offset along the polyline, clamped to its ends.
template <typename Scalar>
Planar<Scalar> point_at_offset(const BasicPolyline<Scalar>& line, Scalar offset) {
  if (offset <= Scalar(0)) return line.vertices().front();
  if (offset >= line.length()) return line.vertices().back();
  std::size_t i = 0;
  while (i + 1 < line.segment_count() && line.offset_of_vertex(i + 1) < offset) ++i;
  const auto seg = line.segment(i);
  const Scalar t = (offset - line.offset_of_vertex(i)) / seg.length();
  return seg.a + t * (seg.b - seg.a);
}

}  // namespace spmm
