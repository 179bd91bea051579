#include "cusped/hyp_geometry.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace cusped {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Moebius map with real coefficients and positive determinant.
struct RealMoebius {
  double a, b, c, d;
  cd operator()(cd z) const { return (a * z + b) / (c * z + d); }
  RealMoebius inverse() const { return {d, -b, -c, a}; }
};

// Orientation-preserving map sending g.from -> 0 and g.to -> infinity.
RealMoebius normalizing_map(const CompleteGeodesic& g) {
  if (g.to.infinite) return {1.0, -g.from.value, 0.0, 1.0};
  if (g.from.infinite) return {0.0, -1.0, 1.0, -g.to.value};
  const double a = g.from.value;
  const double b = g.to.value;
  if (a > b) return {1.0, -a, 1.0, -b};
  return {1.0, -a, -1.0, b};
}

}  // namespace

HalfPlanePoint::HalfPlanePoint(double x_, double y_) : x(x_), y(y_) {
  if (!(y_ > 0.0) || !std::isfinite(x_) || !std::isfinite(y_))
    throw InvalidPoint("half-plane point requires finite x and y > 0");
}

BoundaryPoint BoundaryPoint::infinity() {
  BoundaryPoint b;
  b.infinite = true;
  return b;
}

BoundaryPoint BoundaryPoint::real(double v) {
  BoundaryPoint b;
  b.value = v;
  return b;
}

BoundaryPoint BoundaryPoint::from_rational(std::int64_t p, std::int64_t q) {
  if (q == 0) {
    if (p == 0) throw InvalidPoint("0/0 is not a boundary point");
    return infinity();
  }
  const std::int64_t g = std::gcd(p, q);
  p /= g;
  q /= g;
  if (q < 0) {
    p = -p;
    q = -q;
  }
  BoundaryPoint b;
  b.value = static_cast<double>(p) / static_cast<double>(q);
  b.rational = std::make_pair(p, q);
  return b;
}

double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

UnitTangent::UnitTangent(HalfPlanePoint b, double d) : base(b), dir(normalize_angle(d)) {}

std::complex<double> UnitTangent::chart_vector() const {
  return base.y * cd(-std::sin(dir), std::cos(dir));
}

UnitTangent UnitTangent::reversed() const { return UnitTangent(base, dir + kPi); }

HalfPlanePoint GeodesicSegment::point_at(double s) const {
  if (kind == GeodesicKind::vertical_line) {
    const double sign = end.y >= start.y ? 1.0 : -1.0;
    return {center, start.y * std::exp(sign * s)};
  }
  const double t0 = std::atan2(start.y, start.x - center);
  const double t1 = std::atan2(end.y, end.x - center);
  const double sign = t1 > t0 ? 1.0 : -1.0;
  const double t = 2.0 * std::atan(std::exp(std::log(std::tan(0.5 * t0)) + sign * s));
  return {center + radius * std::cos(t), radius * std::sin(t)};
}

UnitTangent GeodesicSegment::tangent_at(double s) const {
  const HalfPlanePoint p = point_at(s);
  if (kind == GeodesicKind::vertical_line) return {p, end.y >= start.y ? 0.0 : kPi};
  const double t0 = std::atan2(start.y, start.x - center);
  const double t1 = std::atan2(end.y, end.x - center);
  const double t = std::atan2(p.y, p.x - center);
  return {p, t1 > t0 ? t : t - kPi};
}

GeodesicKind CompleteGeodesic::kind() const {
  return (from.infinite || to.infinite) ? GeodesicKind::vertical_line : GeodesicKind::semicircle;
}

double dist(const HalfPlanePoint& p, const HalfPlanePoint& q) {
  const double chord = std::abs(p.z() - q.z());
  return 2.0 * std::asinh(chord / (2.0 * std::sqrt(p.y * q.y)));
}

GeodesicSegment geodesic_between(const HalfPlanePoint& p, const HalfPlanePoint& q) {
  if (p == q) throw DegenerateChord("geodesic_between: coincident endpoints");
  GeodesicSegment s;
  s.start = p;
  s.end = q;
  s.length = dist(p, q);
  if (p.x == q.x) {
    s.kind = GeodesicKind::vertical_line;
    s.center = p.x;
    return s;
  }
  s.kind = GeodesicKind::semicircle;
  s.center = (std::norm(q.z()) - std::norm(p.z())) / (2.0 * (q.x - p.x));
  s.radius = std::abs(p.z() - s.center);
  return s;
}

CompleteGeodesic complete(const GeodesicSegment& s) {
  CompleteGeodesic g;
  if (s.kind == GeodesicKind::vertical_line) {
    if (s.end.y >= s.start.y) {
      g.from = BoundaryPoint::real(s.center);
      g.to = BoundaryPoint::infinity();
    } else {
      g.from = BoundaryPoint::infinity();
      g.to = BoundaryPoint::real(s.center);
    }
    return g;
  }
  const double t0 = std::atan2(s.start.y, s.start.x - s.center);
  const double t1 = std::atan2(s.end.y, s.end.x - s.center);
  const double right = s.center + s.radius;
  const double left = s.center - s.radius;
  g.from = BoundaryPoint::real(t1 > t0 ? right : left);
  g.to = BoundaryPoint::real(t1 > t0 ? left : right);
  return g;
}

GeodesicSegment segment_on(const CompleteGeodesic&, const HalfPlanePoint& p, const HalfPlanePoint& q) {
  return geodesic_between(p, q);
}

double angle_between(const UnitTangent& u, const UnitTangent& v) {
  if (std::abs(u.base.x - v.base.x) > kTolGeom * std::max(1.0, std::abs(u.base.x)) ||
      std::abs(u.base.y - v.base.y) > kTolGeom * std::max(1.0, u.base.y))
    throw BaseMismatch("angle_between: tangents at different base points");
  return std::abs(normalize_angle(u.dir - v.dir));
}

Projection project_to_geodesic(const HalfPlanePoint& p, const CompleteGeodesic& g) {
  const RealMoebius m = normalizing_map(g);
  const cd w = m(p.z());
  const double r = std::abs(w);
  Projection out;
  out.distance = std::asinh(std::abs(w.real()) / w.imag());
  out.along = std::log(r);
  out.foot = HalfPlanePoint(m.inverse()(cd(0.0, r)));
  // In the normalized picture the fiber is the circle |w| = r, run away from
  // the imaginary axis (left normal when on it); pull the direction back by m.
  const double side = w.real() > 0.0 ? 1.0 : -1.0;
  const cd dw = -side * cd(0.0, 1.0) * w / r;
  const cd denom = m.c * p.z() + m.d;
  const double arg_dz = std::arg(dw) + 2.0 * std::arg(denom);
  out.fiber_dir = UnitTangent(p, arg_dz - 0.5 * kPi);
  return out;
}

HalfPlanePoint point_on_geodesic(const CompleteGeodesic& g, double along) {
  return HalfPlanePoint(normalizing_map(g).inverse()(cd(0.0, std::exp(along))));
}

GeodesicSegment geodesic_from(const UnitTangent& v, double length) {
  if (!(length > 0.0)) throw DegenerateChord("geodesic_from: length must be positive");
  // Rotate the upward vertical geodesic about i, then move i to the base point.
  const double th = v.dir / 2;
  const std::complex<double> w(0.0, std::exp(length));
  const std::complex<double> k = (std::cos(th) * w + std::sin(th)) / (-std::sin(th) * w + std::cos(th));
  const HalfPlanePoint end(v.base.x + v.base.y * k.real(), v.base.y * k.imag());
  return geodesic_between(v.base, end);
}

Projection project_to_segment(const HalfPlanePoint& p, const GeodesicSegment& s) {
  const CompleteGeodesic g = complete(s);
  const RealMoebius m = normalizing_map(g);
  const double a0 = std::log(std::abs(m(s.start.z())));
  const double a1 = std::log(std::abs(m(s.end.z())));
  Projection full = project_to_geodesic(p, g);
  if (full.along >= a0 && full.along <= a1) return full;
  const HalfPlanePoint& endpoint = full.along < a0 ? s.start : s.end;
  Projection out;
  out.foot = endpoint;
  out.along = full.along < a0 ? a0 : a1;
  out.distance = dist(p, endpoint);
  if (p == endpoint || out.distance < 1e-9) {
    out.fiber_dir = full.fiber_dir;
  } else {
    out.fiber_dir = geodesic_between(endpoint, p).end_tangent();
  }
  return out;
}

double triangle_opposite_side(double alpha, double beta, double gamma, double kappa) {
  if (!(alpha > 0.0 && alpha < kPi && beta > 0.0 && beta < kPi))
    throw InvalidTriangle("triangle_opposite_side: alpha, beta must lie in (0, pi)");
  if (!(kappa < 0.0)) throw InvalidTriangle("triangle_opposite_side: curvature must be negative");
  const double rhs =
      (std::cos(alpha) * std::cos(beta) + std::cos(gamma)) / (std::sin(alpha) * std::sin(beta));
  if (rhs < 1.0 - 1e-12) throw InvalidTriangle("triangle_opposite_side: no triangle with these angles");
  return std::acosh(std::max(rhs, 1.0)) / std::sqrt(-kappa);
}

HalfPlanePoint apply(const MappingClassElement& g, const HalfPlanePoint& p) {
  return HalfPlanePoint(g.apply(p.z()));
}

UnitTangent apply(const MappingClassElement& g, const UnitTangent& v) {
  return {apply(g, v.base), v.dir + std::arg(g.derivative(v.base.z()))};
}

BoundaryPoint apply(const MappingClassElement& g, const BoundaryPoint& b) {
  if (b.infinite) return BoundaryPoint::from_rational(g.a, g.c);
  if (b.rational) {
    const auto [p, q] = *b.rational;
    using detail::checked_add;
    using detail::checked_mul;
    return BoundaryPoint::from_rational(checked_add(checked_mul(g.a, p), checked_mul(g.b, q)),
                                        checked_add(checked_mul(g.c, p), checked_mul(g.d, q)));
  }
  const double den = static_cast<double>(g.c) * b.value + static_cast<double>(g.d);
  if (den == 0.0) return BoundaryPoint::infinity();
  return BoundaryPoint::real((static_cast<double>(g.a) * b.value + static_cast<double>(g.b)) / den);
}

GeodesicSegment apply(const MappingClassElement& g, const GeodesicSegment& s) {
  return geodesic_between(apply(g, s.start), apply(g, s.end));
}

Reduction reduce_to_fundamental_domain(const HalfPlanePoint& p, int max_iterations) {
  constexpr double eps = 1e-13;
  MappingClassElement g;
  cd z = p.z();
  for (int it = 0; it < max_iterations; ++it) {
    const double n = std::floor(z.real() + 0.5);
    if (n != 0.0) {
      if (std::abs(n) > 9.0e18) throw Overflow("reduce_to_fundamental_domain: translation too large");
      const auto k = static_cast<std::int64_t>(n);
      g = MappingClassElement::translation(-k) * g;
      z -= n;
    }
    const double r2 = std::norm(z);
    if (r2 < 1.0 - eps) {
      g = MappingClassElement::inversion() * g;
      z = -1.0 / z;
      continue;
    }
    if (r2 <= 1.0 + eps && z.real() > 0.0) {
      g = MappingClassElement::inversion() * g;
      z = -1.0 / z;
    }
    return {HalfPlanePoint(z), g};
  }
  throw NonTermination("reduce_to_fundamental_domain: iteration cap reached");
}

UnitTangent reduce_tangent(const UnitTangent& v) {
  const Reduction r = reduce_to_fundamental_domain(v.base);
  return {r.point, v.dir + std::arg(r.g.derivative(v.base.z()))};
}

FNPoint::FNPoint(double ell_, double tau_) : ell(ell_), tau0(tau_) {
  if (!(ell_ > 0.0) || !std::isfinite(ell_) || !std::isfinite(tau_))
    throw InvalidPoint("FN point requires ell > 0 (ell = 0 is a cusp)");
}

FNPoint dehn_twist_fn(const FNPoint& p, std::int64_t n) {
  FNPoint q = p;
  q.twist_index = detail::checked_add(p.twist_index, n);
  return q;
}

}  // namespace cusped
