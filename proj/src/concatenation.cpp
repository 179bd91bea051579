#include "cusped/concatenation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cusped {

namespace {

constexpr double kPi = std::numbers::pi;

ChartPoint chart(const HalfPlanePoint& p) { return {p.x, p.y}; }

bool near(ChartPoint a, ChartPoint b) {
  const double scale = std::max({1.0, std::abs(a.c1), std::abs(a.c2)});
  return std::hypot(a.c1 - b.c1, a.c2 - b.c2) <= kTolGeom * scale;
}

ChartVector negate(ChartVector v) { return {-v.v1, -v.v2}; }

}  // namespace

double ConcatSegment::length() const {
  return std::visit(
      [](const auto& g) {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, GeodesicSegment>) return g.length;
        else return g.total_length;
      },
      geom);
}

ChartPoint ConcatSegment::start() const {
  if (const auto* s = std::get_if<GeodesicSegment>(&geom)) return chart(s->start);
  return std::get<GeodesicPath>(geom).front().p;
}

ChartPoint ConcatSegment::end() const {
  if (const auto* s = std::get_if<GeodesicSegment>(&geom)) return chart(s->end);
  return std::get<GeodesicPath>(geom).back().p;
}

ChartPoint ConcatSegment::point_at(double s) const {
  if (const auto* g = std::get_if<GeodesicSegment>(&geom)) return chart(g->point_at(s));
  return std::get<GeodesicPath>(geom).at(s).p;
}

ChartVector ConcatSegment::tangent_at(double s) const {
  if (const auto* g = std::get_if<GeodesicSegment>(&geom)) {
    const auto v = g->tangent_at(s).chart_vector();
    return {v.real(), v.imag()};
  }
  return std::get<GeodesicPath>(geom).at(s).t;
}

double Concatenation::length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length();
  return total;
}

ChartPoint Concatenation::point_at(double s) const {
  if (segments.empty()) throw DomainError("empty concatenation");
  for (const auto& seg : segments) {
    const double len = seg.length();
    if (s <= len) return seg.point_at(std::max(s, 0.0));
    s -= len;
  }
  return segments.back().end();
}

Concatenation make_concatenation(const MetricBackend& b, std::vector<ConcatSegment> segments) {
  if (segments.empty()) throw DomainError("a concatenation needs at least one segment");
  Concatenation c;
  c.backend = b.id();
  c.segments = std::move(segments);
  c.ea_total = exterior_angle_total(b, c);
  for (std::size_t i = 0; i + 1 < c.segments.size(); ++i)
    c.exterior_angles.push_back(
        b.angle(c.segments[i].end(), c.segments[i].end_tangent(), c.segments[i + 1].start_tangent()));
  return c;
}

double exterior_angle_total(const MetricBackend& b, const Concatenation& c) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < c.segments.size(); ++i) {
    const ChartPoint e = c.segments[i].end(), s = c.segments[i + 1].start();
    if (!near(e, s))
      throw EndpointMismatch("segment " + std::to_string(i) + " ends away from the start of segment " +
                             std::to_string(i + 1));
    total += b.angle(e, c.segments[i].end_tangent(), c.segments[i + 1].start_tangent());
  }
  return total;
}

namespace {

// Golden-section refinement of an extremum of f on [a, b].
template <class F>
double golden_min(F f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80 && b - a > 1e-13; ++i) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - r * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + r * (b - a), f2 = f(x2);
    }
  }
  return std::min(f1, f2);
}

// Minimum over the path of sign * cusp_coordinate.
double path_extremum(const MetricBackend& b, const GeodesicPath& path, double sign) {
  auto f = [&](double s) { return sign * b.cusp_coordinate(path.at(s).p); };
  std::size_t best = 0;
  for (std::size_t i = 1; i < path.samples.size(); ++i)
    if (sign * b.cusp_coordinate(path.samples[i].p) < sign * b.cusp_coordinate(path.samples[best].p)) best = i;
  const double lo = path.samples[best == 0 ? 0 : best - 1].s;
  const double hi = path.samples[std::min(best + 1, path.samples.size() - 1)].s;
  return std::min(f(path.samples[best].s), golden_min(f, lo, hi));
}

double unit_twist_length(const MetricBackend& b, const GeodesicPath& path) {
  const double len = path.total_length;
  const int m = static_cast<int>(std::clamp(len / 1e-3, 16.0, 200000.0));
  std::vector<double> tau(m + 1);
  for (int i = 0; i <= m; ++i) tau[i] = b.twist_coordinate(path.at(len * i / m).p);
  const double ds = len / m;
  double best = 0.0;
  int j = 0;
  for (int i = 0; i <= m; ++i) {
    j = std::max(j, i);
    while (j <= m && std::abs(tau[j] - tau[i]) < 1.0) ++j;
    if (j > m) break;
    // Interpolate inside the last step for the exact crossing of |dtau| = 1.
    const double prev = std::abs(tau[j - 1] - tau[i]), cur = std::abs(tau[j] - tau[i]);
    const double frac = cur > prev ? (1.0 - prev) / (cur - prev) : 1.0;
    const double l = (j - 1 - i + frac) * ds;
    if (best == 0.0 || l < best) best = l;
  }
  return best;
}

}  // namespace

TwistAnalysis twist_spiral_analysis(const MetricBackend& b, ChartPoint p1, ChartPoint p2, std::int64_t n,
                                    const TwistOptions& opts) {
  TwistAnalysis out;
  out.n = n;
  const ChartPoint q = b.twist(p2, n);
  const bool hyp = b.id() == BackendId::hyperbolic;
  if (p1.c1 == q.c1 && p1.c2 == q.c2) {
    // Degenerate chord: it leaves toward and returns from opposite directions.
    out.initial_angle_gap = kPi;
    out.terminal_angle_gap = kPi;
    out.chord_length = 0.0;
    out.min_ell = hyp ? 1.0 / p1.c2 : p1.c1;
    out.max_height = hyp ? p1.c2 : 0.0;
    return out;
  }
  const ChordResult chord = chord_bvp(b, p1, q, opts.chord);
  const GeodesicPath& path = chord.segment;
  out.chord_initial_angle = chord.initial_angle;
  out.chord_length = path.total_length;
  out.initial_angle_gap = b.angle(p1, path.front().t, b.special_tangent(p1));
  out.terminal_angle_gap = b.angle(q, path.back().t, negate(b.special_tangent(q)));
  if (hyp) {
    out.max_height = -path_extremum(b, path, -1.0);
    out.min_ell = 1.0 / out.max_height;
  } else {
    out.min_ell = path_extremum(b, path, 1.0);
  }
  out.unit_twist_length = unit_twist_length(b, path);
  return out;
}

TwistScan twist_scan(const MetricBackend& b, ChartPoint p1, ChartPoint p2, std::int64_t n_min, std::int64_t n_max,
                     const TwistOptions& opts) {
  if (n_max < n_min) throw DomainError("empty twist range");
  TwistScan scan;
  TwistOptions local = opts;
  for (std::int64_t n = n_min; n <= n_max; ++n) {
    TwistAnalysis row = twist_spiral_analysis(b, p1, p2, n, local);
    if (row.chord_length > 0.0) {
      local.chord.initial_angle = row.chord_initial_angle;
      local.chord.initial_length = row.chord_length;
      if (scan.rows.size() >= 1 && scan.rows.back().chord_length > 0.0)
        local.chord.initial_length = 2 * row.chord_length - scan.rows.back().chord_length;
    }
    scan.rows.push_back(row);
  }
  // n0: start of the final run over which both gaps are non-increasing.
  std::size_t k = scan.rows.size() - 1;
  while (k > 0) {
    const auto& a = scan.rows[k - 1];
    const auto& c = scan.rows[k];
    if (c.initial_angle_gap <= a.initial_angle_gap + 1e-12 && c.terminal_angle_gap <= a.terminal_angle_gap + 1e-12)
      --k;
    else
      break;
  }
  scan.n0 = scan.rows[k].n;
  double l0 = 0.0;
  for (const auto& r : scan.rows)
    if (r.unit_twist_length > 0.0 && (l0 == 0.0 || r.unit_twist_length < l0)) l0 = r.unit_twist_length;
  scan.L0 = l0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& r : scan.rows) {
    if (r.n <= 0 || 2 * r.n < n_max || r.initial_angle_gap <= 0.0) continue;
    const double x = std::log(static_cast<double>(r.n)), y = std::log(r.initial_angle_gap);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
  }
  if (cnt >= 2 && cnt * sxx - sx * sx > 0) scan.gap_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  for (auto& r : scan.rows) {
    r.L0 = scan.L0;
    r.n0 = scan.n0;
  }
  return scan;
}

double horocycle_level(double delta) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  return 1.0 / delta;
}

ChartPoint truncation_point(const MetricBackend& b, const CuspRay& ray, double delta) {
  if (b.id() == BackendId::hyperbolic) {
    if (!ray.cusp.infinite) throw CuspMismatch("the half-plane twist fixes the cusp at infinity");
    const double h = horocycle_level(delta);
    if (!(h > ray.base.c2)) throw DomainError("ray base lies inside the delta cusp region");
    return {ray.base.c1, h};
  }
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  const double d = b.distance_to_cusp(ray.base);
  if (!(delta < d)) throw DomainError("ray base lies inside the delta cusp region");
  // Meridians are rays through the origin of the (ell, tau) chart.
  const double ell = delta * delta / (2.0 * kPi);
  const double scale = ell / ray.base.c1;
  return {ell, ray.base.c2 * scale};
}

TwistConcatenation twist_concatenate(const MetricBackend& b, const CuspRay& g1, const CuspRay& g2, double delta,
                                     std::int64_t n, const TwistOptions& opts) {
  if (g1.cusp.infinite != g2.cusp.infinite || (!g1.cusp.infinite && g1.cusp.value != g2.cusp.value))
    throw CuspMismatch("the two rays end at different cusps");
  TwistConcatenation out;
  out.p1 = truncation_point(b, g1, delta);
  const ChartPoint p2 = truncation_point(b, g2, delta);
  out.p2_twisted = b.twist(p2, n);
  const ChartPoint base2 = b.twist(g2.base, n);
  out.analysis = twist_spiral_analysis(b, out.p1, p2, n, opts);
  if (out.analysis.chord_length == 0.0) throw DegenerateChord("twisted endpoints coincide");

  std::vector<ConcatSegment> segs;
  const ChordResult chord = chord_bvp(b, out.p1, out.p2_twisted, [&] {
    ChordOptions o = opts.chord;
    o.initial_angle = out.analysis.chord_initial_angle;
    o.initial_length = out.analysis.chord_length;
    return o;
  }());
  if (b.id() == BackendId::hyperbolic) {
    segs.emplace_back(geodesic_between({g1.base.c1, g1.base.c2}, {out.p1.c1, out.p1.c2}));
    segs.emplace_back(chord.segment);
    segs.emplace_back(geodesic_between({out.p2_twisted.c1, out.p2_twisted.c2}, {base2.c1, base2.c2}));
  } else {
    const double d1 = b.distance_to_cusp(g1.base) - delta;
    GeodesicPath in = integrate_geodesic(b, g1.base, b.special_tangent(g1.base), d1, 0.0);
    in.samples.back().p = out.p1;
    const double d2 = b.distance_to_cusp(g2.base) - delta;
    GeodesicPath away = integrate_geodesic(b, out.p2_twisted, negate(b.special_tangent(out.p2_twisted)), d2, 0.0);
    away.samples.back().p = base2;
    segs.emplace_back(std::move(in));
    segs.emplace_back(chord.segment);
    segs.emplace_back(std::move(away));
  }
  out.concat = make_concatenation(b, std::move(segs));
  return out;
}

}  // namespace cusped
