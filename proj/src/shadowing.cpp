#include "cusped/shadowing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cusped/parallel.hpp"

namespace cusped {

namespace {

constexpr double kPi = std::numbers::pi;

HalfPlanePoint hp(ChartPoint p) { return {p.c1, p.c2}; }

UnitTangent tangent_of(ChartPoint p, ChartVector v) { return {hp(p), std::atan2(-v.v1, v.v2)}; }

struct PointEval {
  double F;
  double dF;
};

PointEval evaluate(ChartPoint p, ChartVector t, const GeodesicSegment& chord) {
  const Projection pr = project_to_segment(hp(p), chord);
  const double c = std::cos(angle_between(tangent_of(p, t), pr.fiber_dir));
  if (pr.distance < 1e-10) return {pr.distance, std::abs(c)};
  return {pr.distance, c};
}

template <class F>
double golden_max(F f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 100 && b - a > 1e-12; ++i) {
    if (f1 > f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - r * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + r * (b - a), f2 = f(x2);
    }
  }
  return std::max(f1, f2);
}

DistanceProfile build_profile(const Concatenation& c, const GeodesicSegment& chord, int spu) {
  DistanceProfile prof;
  prof.samples_per_unit = spu;
  double offset = 0.0;
  std::size_t best = 0;
  for (std::size_t k = 0; k < c.segments.size(); ++k) {
    const ConcatSegment& seg = c.segments[k];
    const double len = seg.length();
    const int m = std::max(2, static_cast<int>(std::ceil(len * spu)));
    const std::size_t first = prof.samples.size();
    for (int j = 0; j <= m; ++j) {
      const double s = len * j / m;
      const PointEval e = evaluate(seg.point_at(s), seg.tangent_at(s), chord);
      prof.samples.push_back({offset + s, e.F, e.dF, k});
      if (e.F > prof.samples[best].F) best = prof.samples.size() - 1;
    }
    const double h = len / m;
    for (std::size_t j = first + 1; j + 1 < prof.samples.size(); ++j) {
      const auto& a = prof.samples[j - 1];
      const auto& b = prof.samples[j + 1];
      // Skip the kink where the curve crosses the chord.
      if (a.dF * b.dF < 0.0 && std::min({a.F, b.F, prof.samples[j].F}) < 2 * h) continue;
      if (a.F < 1e-9 || b.F < 1e-9 || prof.samples[j].F < 1e-9) continue;
      prof.fd_mismatch = std::max(prof.fd_mismatch, std::abs((b.F - a.F) / (2 * h) - prof.samples[j].dF));
    }
    if (k > 0) {
      DerivativeJump jump;
      jump.vertex = k - 1;
      jump.s = offset;
      jump.jump = prof.samples[first].dF - prof.samples[first - 1].dF;
      jump.exterior_angle = k - 1 < c.exterior_angles.size() ? c.exterior_angles[k - 1] : 0.0;
      prof.jumps.push_back(jump);
    }
    offset += len;
  }
  // Refine the maximum between the neighbouring samples on the same piece.
  const ProfileSample& top = prof.samples[best];
  const ConcatSegment& seg = c.segments[top.segment];
  double seg_start = 0.0;
  for (std::size_t k = 0; k < top.segment; ++k) seg_start += c.segments[k].length();
  const double step = seg.length() / std::max(2, static_cast<int>(std::ceil(seg.length() * spu)));
  const double lo = std::max(0.0, top.s - seg_start - step), hi = std::min(seg.length(), top.s - seg_start + step);
  auto f = [&](double s) { return project_to_segment(hp(seg.point_at(s)), chord).distance; };
  prof.max_F = std::max(top.F, golden_max(f, lo, hi));
  prof.max_F_at = top.s;
  return prof;
}

}  // namespace

DistanceProfile distance_profile(const Concatenation& c, const GeodesicSegment& chord, const ProfileOptions& opts) {
  if (c.backend != BackendId::hyperbolic)
    throw ProjectionFailure("distance profiles use exact half-plane projection");
  if (c.segments.empty()) throw DomainError("empty concatenation");
  DistanceProfile prof = build_profile(c, chord, opts.samples_per_unit);
  int spu = opts.samples_per_unit;
  for (int d = 0; d < opts.max_doublings; ++d) {
    spu *= 2;
    DistanceProfile next = build_profile(c, chord, spu);
    const bool stable = std::abs(next.max_F - prof.max_F) <= opts.stabilize_tol;
    prof = std::move(next);
    if (stable) break;
  }
  return prof;
}

DerivativeReport verify_derivative_bound(const DistanceProfile& prof, double ea_total, double tol_deriv) {
  DerivativeReport r;
  r.bound = ea_total;
  for (const auto& s : prof.samples) {
    if (std::abs(s.dF) > r.max_abs_dF) {
      r.max_abs_dF = std::abs(s.dF);
      r.at = s.s;
    }
  }
  r.pass = r.max_abs_dF <= ea_total + tol_deriv;
  return r;
}

double convexity_defect(const DistanceProfile& prof) {
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < prof.samples.size(); ++j) {
    const auto& a = prof.samples[j - 1];
    const auto& b = prof.samples[j];
    const auto& c = prof.samples[j + 1];
    if (a.segment != b.segment || b.segment != c.segment) continue;
    worst = std::max(worst, -(a.F - 2 * b.F + c.F));
  }
  return worst;
}

double bound_from_ea(double ea, double kappa) {
  if (!(ea >= 0.0)) throw DomainError("exterior angle total must be non-negative");
  if (ea > 0.5) throw DomainError("the shadowing bound needs ea <= 1/2");
  if (!(kappa < 0.0)) throw DomainError("curvature bound must be negative");
  const double phi = ea + std::asin(ea);
  const double s = std::sin(phi), c = std::cos(phi);
  return std::acosh((s * s + 1.0) / (c * c)) / std::sqrt(-kappa);
}

double polygon_angle_excess(const Concatenation& c) {
  if (c.backend != BackendId::hyperbolic) throw ProjectionFailure("polygon angles use exact half-plane geometry");
  double worst = -HUGE_VAL;
  const HalfPlanePoint start = hp(c.segments.front().start());
  double ea_before = 0.0;
  for (std::size_t k = 0; k + 1 < c.segments.size(); ++k) {
    const ChartPoint r = c.segments[k].end();
    const ChartVector in = c.segments[k].end_tangent();
    if (!(hp(r) == start)) {
      const UnitTangent back = tangent_of(r, {-in.v1, -in.v2});
      const double beta = angle_between(back, geodesic_between(hp(r), start).start_tangent());
      worst = std::max(worst, beta - ea_before);
    }
    ea_before += c.exterior_angles[k];
  }
  return worst == -HUGE_VAL ? 0.0 : worst;
}

bool vertices_project_inside(const Concatenation& c, const GeodesicSegment& chord) {
  const CompleteGeodesic line = complete(chord);
  for (std::size_t k = 0; k + 1 < c.segments.size(); ++k) {
    const HalfPlanePoint foot = project_to_geodesic(hp(c.segments[k].end()), line).foot;
    const double d0 = dist(chord.start, foot), d1 = dist(foot, chord.end);
    if (!(d0 > 1e-12 && d1 > 1e-12 && std::abs(d0 + d1 - chord.length) < 1e-9 * (1 + chord.length))) return false;
  }
  return true;
}

namespace {

Concatenation random_polyline(const FamilySpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(spec.min_segments, spec.max_segments);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> weight(1.0);
  const int k = count(rng);
  const double ea = std::exp(std::log(spec.ea_min) + unit(rng) * (std::log(spec.ea_max) - std::log(spec.ea_min)));
  std::vector<double> w(std::max(k - 1, 0));
  double total = 0.0;
  for (double& v : w) total += (v = weight(rng));
  UnitTangent t(HalfPlanePoint(2.0 * unit(rng) - 1.0, std::exp(2.0 * unit(rng) - 1.0)), kPi * (2.0 * unit(rng) - 1.0));
  const MetricBackend b = MetricBackend::hyperbolic();
  std::vector<ConcatSegment> segs;
  for (int i = 0; i < k; ++i) {
    const double len = spec.min_length + unit(rng) * (spec.max_length - spec.min_length);
    const GeodesicSegment s = geodesic_from(t, len);
    segs.emplace_back(s);
    if (i + 1 < k) {
      const double turn = ea * w[i] / total * (unit(rng) < 0.5 ? -1.0 : 1.0);
      t = UnitTangent(s.end, s.end_tangent().dir + turn);
    }
  }
  return make_concatenation(b, std::move(segs));
}

Concatenation random_twisting(const FamilySpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ea = std::exp(std::log(spec.ea_min) + unit(rng) * (std::log(spec.ea_max) - std::log(spec.ea_min)));
  const double delta = 0.4 + 0.6 * unit(rng);
  const double h = horocycle_level(delta);
  const CuspRay r1{{unit(rng) - 0.5, 0.2 + 0.6 * unit(rng)}};
  const CuspRay r2{{unit(rng) - 0.5, 0.2 + 0.6 * unit(rng)}};
  // Each gap is arctan(2h / |n + x2 - x1|); pick n so the two gaps fit in ea.
  const double need = 2.0 * h / std::tan(ea / 2.0) + std::abs(r2.base.c1 - r1.base.c1) + 1.0;
  const auto n = static_cast<std::int64_t>(std::ceil(need * (1.0 + unit(rng))));
  const MetricBackend b = MetricBackend::hyperbolic();
  return twist_concatenate(b, r1, r2, delta, n).concat;
}

}  // namespace

Concatenation random_concatenation(const FamilySpec& spec, std::mt19937_64& rng) {
  if (!(spec.ea_min > 0.0 && spec.ea_min <= spec.ea_max && spec.ea_max <= 0.5))
    throw ConfigError("family needs 0 < ea_min <= ea_max <= 1/2");
  if (spec.min_segments < 1 || spec.max_segments < spec.min_segments) throw ConfigError("bad segment counts");
  return spec.kind == FamilyKind::twisting ? random_twisting(spec, rng) : random_polyline(spec, rng);
}

Quantiles quantiles(std::vector<double> v) {
  Quantiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double f) {
    const double pos = f * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
  };
  q.min = v.front();
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  q.max = v.back();
  return q;
}

ShadowTable shadowing_experiment(const FamilySpec& spec, std::int64_t trials, std::uint64_t seed,
                                 unsigned workers) {
  ShadowTable table;
  if (trials <= 0) return table;
  table.rows.resize(static_cast<std::size_t>(trials));
  parallel_for(table.rows.size(), workers, [&](std::size_t i) {
    ShadowRow& row = table.rows[i];
    row.trial = static_cast<std::int64_t>(i);
    try {
      std::mt19937_64 rng = trial_rng(seed, i);
      const Concatenation c = random_concatenation(spec, rng);
      const GeodesicSegment chord =
          geodesic_between(hp(c.segments.front().start()), hp(c.segments.back().end()));
      const DistanceProfile prof = distance_profile(c, chord);
      row.segments = static_cast<int>(c.segments.size());
      row.ea_total = c.ea_total;
      row.max_F = prof.max_F;
      row.bound = bound_from_ea(std::min(c.ea_total, 0.5));
      row.max_abs_dF = verify_derivative_bound(prof, c.ea_total).max_abs_dF;
      row.pass = row.max_F <= row.bound;
      row.deriv_pass = verify_derivative_bound(prof, c.ea_total).pass;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  std::vector<double> maxf, ratio;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int ok = 0, pass = 0, dpass = 0, fit = 0;
  for (const auto& r : table.rows) {
    if (!r.error.empty()) continue;
    ++ok;
    pass += r.pass;
    dpass += r.deriv_pass;
    maxf.push_back(r.max_F);
    if (r.bound > 0) ratio.push_back(r.max_F / r.bound);
    if (r.max_F > 0 && r.ea_total > 0) {
      const double x = std::log(r.ea_total), y = std::log(r.max_F);
      sx += x, sy += y, sxx += x * x, sxy += x * y, ++fit;
    }
  }
  table.max_F = quantiles(maxf);
  table.ratio = quantiles(ratio);
  if (ok > 0) {
    table.pass_rate = static_cast<double>(pass) / ok;
    table.deriv_pass_rate = static_cast<double>(dpass) / ok;
  }
  const double n = fit;
  if (n >= 2 && n * sxx - sx * sx > 0) table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return table;
}

}  // namespace cusped
