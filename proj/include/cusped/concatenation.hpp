#pragma once

// Piecewise geodesics with exterior-angle bookkeeping, and the twisting
// construction that splices two cusp-bound geodesics through a Dehn twist.

#include <cstdint>
#include <variant>
#include <vector>

#include "cusped/hyp_geometry.hpp"
#include "cusped/metric_engine.hpp"

namespace cusped {

// One geodesic piece: exact half-plane segment or an integrated path.
struct ConcatSegment {
  std::variant<GeodesicSegment, GeodesicPath> geom;

  ConcatSegment() = default;
  ConcatSegment(GeodesicSegment s) : geom(std::move(s)) {}
  ConcatSegment(GeodesicPath p) : geom(std::move(p)) {}

  double length() const;
  ChartPoint start() const;
  ChartPoint end() const;
  ChartPoint point_at(double s) const;
  // Chart components of the unit tangent.
  ChartVector tangent_at(double s) const;
  ChartVector start_tangent() const { return tangent_at(0.0); }
  ChartVector end_tangent() const { return tangent_at(length()); }
};

struct Concatenation {
  BackendId backend = BackendId::hyperbolic;
  std::vector<ConcatSegment> segments;
  std::vector<double> exterior_angles;  // one per interior vertex
  double ea_total = 0.0;

  double length() const;
  // Global arclength parameterization across the pieces.
  ChartPoint point_at(double s) const;
};

// Validates endpoint matching and fills the exterior angles.
Concatenation make_concatenation(const MetricBackend& b, std::vector<ConcatSegment> segments);
double exterior_angle_total(const MetricBackend& b, const Concatenation& c);

struct TwistAnalysis {
  std::int64_t n = 0;
  double initial_angle_gap = 0.0;
  double terminal_angle_gap = 0.0;
  // Smallest cusp-model length along the chord; on the half-plane the
  // reciprocal of the largest height, matching the horocycle level 1/delta.
  double min_ell = 0.0;
  double max_height = 0.0;  // half-plane only
  double chord_length = 0.0;
  // Shortest sub-arc of the chord whose twist coordinate moves by one unit;
  // zero when the chord moves less than that.
  double unit_twist_length = 0.0;
  double L0 = 0.0;
  std::int64_t n0 = 0;
  double chord_initial_angle = 0.0;
};

struct TwistOptions {
  ChordOptions chord{};
};

TwistAnalysis twist_spiral_analysis(const MetricBackend& b, ChartPoint p1, ChartPoint p2, std::int64_t n,
                                    const TwistOptions& opts = {});

struct TwistScan {
  std::vector<TwistAnalysis> rows;
  double L0 = 0.0;
  std::int64_t n0 = 0;
  // Least-squares slope of log gap against log n over the upper half of the scan.
  double gap_exponent = 0.0;
};

// Runs n = n_min..n_max with warm starts, then fills L0, n0 in every row.
TwistScan twist_scan(const MetricBackend& b, ChartPoint p1, ChartPoint p2, std::int64_t n_min, std::int64_t n_max,
                     const TwistOptions& opts = {});

// Geodesic ray from `base` into the cusp. On the half-plane the cusp must be
// the point at infinity (the fixed point of the translation twist).
struct CuspRay {
  ChartPoint base;
  BoundaryPoint cusp = BoundaryPoint::infinity();
};

// Cusp distance delta mapped to a horocycle height on the half-plane.
double horocycle_level(double delta);
// Point of the ray at distance delta from the cusp (horocycle level on the
// half-plane).
ChartPoint truncation_point(const MetricBackend& b, const CuspRay& ray, double delta);

struct TwistConcatenation {
  Concatenation concat;
  TwistAnalysis analysis;
  ChartPoint p1, p2_twisted;
};

// [ray1 truncated at delta] + [chord p1 -> T^n p2] + [T^n (ray2 truncated), run
// away from the cusp].
TwistConcatenation twist_concatenate(const MetricBackend& b, const CuspRay& g1, const CuspRay& g2, double delta,
                                     std::int64_t n, const TwistOptions& opts = {});

}  // namespace cusped
