#pragma once

// Riemannian surface backends in a single chart, geodesic initial-value
// integration and the chord boundary-value solver.
//
// Charts: hyperbolic uses (x, y) on the upper half-plane; the Weil-Petersson
// cusp model uses Fenchel-Nielsen (ell, tau) with 0 < ell <= ell_max. The cusp
// model is the surface of revolution
//     g = (pi / 2 ell) d ell^2 + (ell^3 / 2 pi) d theta^2,   theta = tau / ell,
// i.e. dr^2 + r^6 d theta^2 / (16 pi^4) with r = sqrt(2 pi ell). Its area form
// is (1/2) d ell ^ d tau, its curvature is -3 / (pi ell) and the Dehn twist
// (ell, tau) -> (ell, tau + ell) is an isometry.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cusped/errors.hpp"

namespace cusped {

struct ChartPoint {
  double c1 = 0.0;
  double c2 = 0.0;
};

struct ChartVector {
  double v1 = 0.0;
  double v2 = 0.0;
};

struct Metric2 {
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;
  double det() const { return g11 * g22 - g12 * g12; }
  double inner(ChartVector u, ChartVector v) const {
    return g11 * u.v1 * v.v1 + g12 * (u.v1 * v.v2 + u.v2 * v.v1) + g22 * u.v2 * v.v2;
  }
};

// gamma[k][i][j] = Christoffel symbol of the second kind.
struct Christoffel {
  double gamma[2][2][2] = {};
};

enum class BackendId { hyperbolic, wp_cusp_model };

// twist_invariant is the default cusp model described above. leading_order is
// the literal diagonal form (pi / 2 ell) d ell^2 + (ell / 2 pi) d tau^2, which
// is flat and not twist invariant; kept for comparison only.
enum class WpProfile { twist_invariant, leading_order };

struct BackendParams {
  double ell_max = 4.0;
  WpProfile profile = WpProfile::twist_invariant;
};

class MetricBackend {
 public:
  static MetricBackend hyperbolic();
  static MetricBackend wp_cusp_model(BackendParams params = {});
  // "hyperbolic" or "wp_cusp_model".
  static MetricBackend from_id(std::string_view id);

  BackendId id() const { return id_; }
  std::string name() const;
  const BackendParams& params() const { return params_; }

  bool inside(ChartPoint p) const;
  Metric2 metric_at(ChartPoint p) const;
  Christoffel christoffel_at(ChartPoint p) const;
  double curvature_at(ChartPoint p) const;

  double norm(ChartPoint p, ChartVector v) const;
  ChartVector normalized(ChartPoint p, ChartVector v) const;
  // Metric angle in [0, pi].
  double angle(ChartPoint p, ChartVector u, ChartVector v) const;
  // Unit vector at angle `a` counterclockwise from the second coordinate axis,
  // measured in an orthonormal frame (hyperbolic: the UnitTangent convention).
  ChartVector unit_vector(ChartPoint p, double a) const;
  double direction_angle(ChartPoint p, ChartVector v) const;

  // The parabolic / Dehn twist fixing the cusp and its differential.
  ChartPoint twist(ChartPoint p, std::int64_t n) const;
  ChartVector twist_vector(ChartPoint p, ChartVector v, std::int64_t n) const;
  // Unit tangent of the geodesic from p into the cusp (cusp at infinity for
  // the hyperbolic backend, ell = 0 for the cusp model).
  ChartVector special_tangent(ChartPoint p) const;
  // ell for the cusp model; y for the half-plane (large y = deep in the cusp).
  double cusp_coordinate(ChartPoint p) const;
  // tau for the cusp model; x for the half-plane.
  double twist_coordinate(ChartPoint p) const;
  // Cusp model: sqrt(2 pi ell). Throws DomainError on the hyperbolic backend.
  double distance_to_cusp(ChartPoint p) const;

 private:
  BackendId id_ = BackendId::hyperbolic;
  BackendParams params_{};
};

struct PathSample {
  double s = 0.0;
  ChartPoint p;
  ChartVector t;
};

struct GeodesicPath {
  BackendId backend = BackendId::hyperbolic;
  std::vector<PathSample> samples;
  double total_length = 0.0;
  bool terminated_at_cusp = false;
  bool exited_chart = false;

  const PathSample& front() const { return samples.front(); }
  const PathSample& back() const { return samples.back(); }
  // Cubic Hermite interpolation between samples.
  PathSample at(double s) const;
};

struct IntegrationOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double h_min = 1e-12;
  double h_init = 1e-3;
  double max_step = 0.05;
};

// Integrates the geodesic from `start` with initial direction `dir` (rescaled
// to unit speed) for arclength max_length. On the cusp model the run stops
// early with terminated_at_cusp when ell drops below cusp_stop, and with
// exited_chart when ell exceeds ell_max.
GeodesicPath integrate_geodesic(const MetricBackend& b, ChartPoint start, ChartVector dir,
                                double max_length, double cusp_stop = 1e-9,
                                const IntegrationOptions& opts = {});

// Maximum |g(v, v) - 1| over the samples.
double unit_speed_defect(const MetricBackend& b, const GeodesicPath& path);

struct ChordOptions {
  double tol_bvp = 1e-8;
  int max_iterations = 80;
  double cusp_stop = 1e-9;
  // Warm start for the shooting fast path.
  std::optional<double> initial_angle;
  std::optional<double> initial_length;
  // Added to the naive initial angle; used to check independence of the answer
  // from initialization.
  double angle_offset = 0.0;
  bool force_subdivision = false;
  // Also run the subdivision path and prefer it if the answers disagree.
  bool verify_with_subdivision = false;
  IntegrationOptions integration{};
};

struct ChordResult {
  GeodesicPath segment;
  double endpoint_error = 0.0;
  int iterations = 0;
  double initial_angle = 0.0;  // direction_angle of the solved initial tangent
  bool used_subdivision = false;
};

ChordResult chord_bvp(const MetricBackend& b, ChartPoint p, ChartPoint q, const ChordOptions& opts = {});

// Discrete geodesic by iterated midpoint straightening of a chart polyline with
// `points` vertices (including endpoints). Exposed for testing.
std::vector<ChartPoint> subdivision_geodesic(const MetricBackend& b, ChartPoint p, ChartPoint q,
                                             int points = 129);

}  // namespace cusped
