#pragma once

// Exact constant-curvature geometry of the upper half-plane with the modular
// group acting by Moebius maps.

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>

#include "cusped/errors.hpp"
#include "cusped/unimodular.hpp"

namespace cusped {

inline constexpr double kTolGeom = 1e-9;

// Point of the upper half-plane, y > 0.
struct HalfPlanePoint {
  double x = 0.0;
  double y = 1.0;

  HalfPlanePoint() = default;
  HalfPlanePoint(double x_, double y_);
  explicit HalfPlanePoint(std::complex<double> z) : HalfPlanePoint(z.real(), z.imag()) {}

  std::complex<double> z() const { return {x, y}; }
  bool operator==(const HalfPlanePoint&) const = default;
};

// Point of the extended real line. A rational flag is only ever set from exact
// integers supplied by the caller.
struct BoundaryPoint {
  bool infinite = false;
  double value = 0.0;
  std::optional<std::pair<std::int64_t, std::int64_t>> rational;  // (p, q), q > 0, lowest terms

  static BoundaryPoint infinity();
  static BoundaryPoint real(double v);
  // p/q in lowest terms; q == 0 gives infinity (the cusp 1/0).
  static BoundaryPoint from_rational(std::int64_t p, std::int64_t q);

  bool is_rational() const { return infinite || rational.has_value(); }
};

// Unit tangent stored by direction: angle measured counterclockwise from the
// upward vertical, normalized to (-pi, pi].
struct UnitTangent {
  HalfPlanePoint base;
  double dir = 0.0;

  UnitTangent() = default;
  UnitTangent(HalfPlanePoint b, double d);

  // Chart (Euclidean) components of the hyperbolic unit vector.
  std::complex<double> chart_vector() const;
  UnitTangent reversed() const;
};

double normalize_angle(double a);

enum class GeodesicKind { vertical_line, semicircle };

// Unit-speed geodesic arc from start to end.
struct GeodesicSegment {
  GeodesicKind kind = GeodesicKind::vertical_line;
  double center = 0.0;  // semicircle center; x coordinate of a vertical line
  double radius = 0.0;  // semicircle only
  HalfPlanePoint start;
  HalfPlanePoint end;
  double length = 0.0;

  HalfPlanePoint point_at(double s) const;
  UnitTangent tangent_at(double s) const;
  UnitTangent start_tangent() const { return tangent_at(0.0); }
  UnitTangent end_tangent() const { return tangent_at(length); }
};

// Complete geodesic oriented from `from` to `to`. Singular when both ideal
// endpoints are cusps (exact rationals or infinity).
struct CompleteGeodesic {
  BoundaryPoint from;
  BoundaryPoint to;

  bool singular() const { return from.is_rational() && to.is_rational(); }
  GeodesicKind kind() const;
};

struct Projection {
  HalfPlanePoint foot;
  UnitTangent fiber_dir;  // at the projected point, pointing away from the foot
  double distance = 0.0;
  double along = 0.0;  // signed arclength coordinate of the foot
};

double dist(const HalfPlanePoint& p, const HalfPlanePoint& q);
GeodesicSegment geodesic_between(const HalfPlanePoint& p, const HalfPlanePoint& q);
// Exact unit-speed flow: the segment of the given length leaving v.
GeodesicSegment geodesic_from(const UnitTangent& v, double length);
CompleteGeodesic complete(const GeodesicSegment& s);
// Arc of a complete geodesic between two of its points.
GeodesicSegment segment_on(const CompleteGeodesic& g, const HalfPlanePoint& p, const HalfPlanePoint& q);

double angle_between(const UnitTangent& u, const UnitTangent& v);

Projection project_to_geodesic(const HalfPlanePoint& p, const CompleteGeodesic& g);
// Point of g with the given arclength coordinate (inverse of Projection::along).
HalfPlanePoint point_on_geodesic(const CompleteGeodesic& g, double along);
// Nearest point projection to a closed segment; the foot may be an endpoint.
Projection project_to_segment(const HalfPlanePoint& p, const GeodesicSegment& s);

// Hyperbolic law of cosines for angles, curvature kappa < 0.
double triangle_opposite_side(double alpha, double beta, double gamma, double kappa = -1.0);

HalfPlanePoint apply(const MappingClassElement& g, const HalfPlanePoint& p);
UnitTangent apply(const MappingClassElement& g, const UnitTangent& v);
BoundaryPoint apply(const MappingClassElement& g, const BoundaryPoint& b);
GeodesicSegment apply(const MappingClassElement& g, const GeodesicSegment& s);

struct Reduction {
  HalfPlanePoint point;
  MappingClassElement g;  // point = g * input
};

// Standard fundamental domain |Re z| <= 1/2, |z| >= 1; boundary ties go to the
// Re <= 0 side.
Reduction reduce_to_fundamental_domain(const HalfPlanePoint& p, int max_iterations = 10000);
UnitTangent reduce_tangent(const UnitTangent& v);

// Fenchel-Nielsen pair. The twist is kept as tau0 + twist_index * ell so that
// Dehn twists compose exactly.
struct FNPoint {
  double ell = 1.0;
  double tau0 = 0.0;
  std::int64_t twist_index = 0;

  FNPoint() = default;
  FNPoint(double ell_, double tau_);

  double tau() const { return tau0 + static_cast<double>(twist_index) * ell; }
  bool operator==(const FNPoint&) const = default;
};

FNPoint dehn_twist_fn(const FNPoint& p, std::int64_t n);

}  // namespace cusped
