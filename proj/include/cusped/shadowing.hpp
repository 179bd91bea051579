#pragma once

// Distance from a concatenation to a chord, the exterior-angle bound on its
// derivative, and the comparison-triangle bound on its size. Half-plane
// backend (exact nearest-point projection).

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cusped/concatenation.hpp"

namespace cusped {

struct ProfileSample {
  double s = 0.0;   // arclength along the concatenation
  double F = 0.0;   // distance to the chord
  double dF = 0.0;  // derivative along the piece the sample belongs to
  std::size_t segment = 0;
};

struct DerivativeJump {
  std::size_t vertex = 0;
  double s = 0.0;
  double jump = 0.0;  // dF after the vertex minus dF before it
  double exterior_angle = 0.0;
};

struct DistanceProfile {
  std::vector<ProfileSample> samples;
  std::vector<DerivativeJump> jumps;
  double max_F = 0.0;
  double max_F_at = 0.0;
  int samples_per_unit = 0;
  // Largest gap between dF and a centered difference of F.
  double fd_mismatch = 0.0;
};

struct ProfileOptions {
  int samples_per_unit = 512;
  double stabilize_tol = 1e-4;
  int max_doublings = 3;
};

DistanceProfile distance_profile(const Concatenation& c, const GeodesicSegment& chord,
                                 const ProfileOptions& opts = {});

struct DerivativeReport {
  bool pass = true;
  double max_abs_dF = 0.0;
  double at = 0.0;
  double bound = 0.0;
};

DerivativeReport verify_derivative_bound(const DistanceProfile& prof, double ea_total, double tol_deriv = 1e-3);

// Most negative second difference of F over segment interiors (0 if convex).
double convexity_defect(const DistanceProfile& prof);

// phi = ea + asin(ea); B = acosh((sin^2 phi + 1) / cos^2 phi) / sqrt(|kappa|).
double bound_from_ea(double ea, double kappa = -1.0);

// For every interior vertex r: the interior angle at r of the polygon formed by
// the sub-concatenation from the start to r and the chord back to the start,
// minus the exterior-angle total accumulated before r. Returns the largest
// value (non-positive when the angle bound holds).
double polygon_angle_excess(const Concatenation& c);

// True when every interior vertex projects strictly inside the chord.
bool vertices_project_inside(const Concatenation& c, const GeodesicSegment& chord);

enum class FamilyKind { random_polyline, twisting };

struct FamilySpec {
  FamilyKind kind = FamilyKind::random_polyline;
  double ea_max = 0.1;
  double ea_min = 1e-4;
  int min_segments = 2;
  int max_segments = 6;
  double min_length = 0.2;
  double max_length = 2.0;
};

struct ShadowRow {
  std::int64_t trial = 0;
  int segments = 0;
  double ea_total = 0.0;
  double max_F = 0.0;
  double bound = 0.0;
  double max_abs_dF = 0.0;
  bool pass = false;        // max_F <= bound
  bool deriv_pass = false;  // max |F'| <= ea_total + tol_deriv
  std::string error;        // non-empty when the trial could not be built
};

struct Quantiles {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

struct ShadowTable {
  std::vector<ShadowRow> rows;
  Quantiles max_F;
  Quantiles ratio;  // max_F / bound
  double pass_rate = 0.0;
  double deriv_pass_rate = 0.0;
  // Least-squares slope of log max_F against log ea_total.
  double slope = 0.0;
};

Concatenation random_concatenation(const FamilySpec& spec, std::mt19937_64& rng);

ShadowTable shadowing_experiment(const FamilySpec& spec, std::int64_t trials, std::uint64_t seed,
                                 unsigned workers = 1);

Quantiles quantiles(std::vector<double> values);

}  // namespace cusped
