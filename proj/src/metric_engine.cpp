#include "cusped/metric_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace cusped {

namespace {

constexpr double kPi = std::numbers::pi;

Christoffel raw_christoffel(const MetricBackend& b, ChartPoint p) {
  Christoffel c;
  auto& G = c.gamma;
  if (b.id() == BackendId::hyperbolic) {
    const double y = p.c2;
    G[0][0][1] = G[0][1][0] = -1.0 / y;
    G[1][0][0] = 1.0 / y;
    G[1][1][1] = -1.0 / y;
    return c;
  }
  const double l = p.c1;
  if (b.params().profile == WpProfile::leading_order) {
    G[0][0][0] = -1.0 / (2.0 * l);
    G[0][1][1] = -l / (2.0 * kPi * kPi);
    G[1][0][1] = G[1][1][0] = 1.0 / (2.0 * l);
    return c;
  }
  const double t = p.c2;
  const double pi2 = kPi * kPi;
  G[0][0][0] = -(3.0 * t * t + pi2) / (2.0 * pi2 * l);
  G[0][0][1] = G[0][1][0] = 3.0 * t / (2.0 * pi2);
  G[0][1][1] = -3.0 * l / (2.0 * pi2);
  G[1][0][0] = -3.0 * t * (t * t + pi2) / (2.0 * pi2 * l * l);
  G[1][0][1] = G[1][1][0] = (3.0 * t * t + pi2) / (2.0 * pi2 * l);
  G[1][1][1] = -3.0 * t / (2.0 * pi2);
  return c;
}

Metric2 raw_metric(const MetricBackend& b, ChartPoint p) {
  if (b.id() == BackendId::hyperbolic) {
    const double w = 1.0 / (p.c2 * p.c2);
    return {w, 0.0, w};
  }
  const double l = p.c1;
  if (b.params().profile == WpProfile::leading_order) return {kPi / (2.0 * l), 0.0, l / (2.0 * kPi)};
  const double t = p.c2;
  return {kPi / (2.0 * l) + t * t / (2.0 * kPi * l), -t / (2.0 * kPi), l / (2.0 * kPi)};
}

void require_inside(const MetricBackend& b, ChartPoint p) {
  if (!b.inside(p)) throw OutsideChart("point (" + std::to_string(p.c1) + ", " + std::to_string(p.c2) +
                                       ") outside the " + b.name() + " chart");
}

}  // namespace

MetricBackend MetricBackend::hyperbolic() {
  MetricBackend b;
  b.id_ = BackendId::hyperbolic;
  return b;
}

MetricBackend MetricBackend::wp_cusp_model(BackendParams params) {
  if (!(params.ell_max > 0.0)) throw ConfigError("ell_max must be positive");
  MetricBackend b;
  b.id_ = BackendId::wp_cusp_model;
  b.params_ = params;
  return b;
}

MetricBackend MetricBackend::from_id(std::string_view id) {
  if (id == "hyperbolic") return hyperbolic();
  if (id == "wp_cusp_model") return wp_cusp_model();
  throw ConfigError("unknown backend '" + std::string(id) + "'");
}

std::string MetricBackend::name() const { return id_ == BackendId::hyperbolic ? "hyperbolic" : "wp_cusp_model"; }

bool MetricBackend::inside(ChartPoint p) const {
  if (!std::isfinite(p.c1) || !std::isfinite(p.c2)) return false;
  if (id_ == BackendId::hyperbolic) return p.c2 > 0.0;
  return p.c1 > 0.0 && p.c1 <= params_.ell_max * (1.0 + 1e-12);
}

Metric2 MetricBackend::metric_at(ChartPoint p) const {
  require_inside(*this, p);
  return raw_metric(*this, p);
}

Christoffel MetricBackend::christoffel_at(ChartPoint p) const {
  require_inside(*this, p);
  return raw_christoffel(*this, p);
}

double MetricBackend::curvature_at(ChartPoint p) const {
  require_inside(*this, p);
  if (id_ == BackendId::hyperbolic) return -1.0;
  if (params_.profile == WpProfile::leading_order) return 0.0;
  return -3.0 / (kPi * p.c1);
}

double MetricBackend::norm(ChartPoint p, ChartVector v) const { return std::sqrt(metric_at(p).inner(v, v)); }

ChartVector MetricBackend::normalized(ChartPoint p, ChartVector v) const {
  const double n = norm(p, v);
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero tangent vector");
  return {v.v1 / n, v.v2 / n};
}

double MetricBackend::angle(ChartPoint p, ChartVector u, ChartVector v) const {
  const Metric2 g = metric_at(p);
  const double c = g.inner(u, v) / std::sqrt(g.inner(u, u) * g.inner(v, v));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

ChartVector MetricBackend::unit_vector(ChartPoint p, double a) const {
  const Metric2 g = metric_at(p);
  const double s22 = std::sqrt(g.g22);
  const double sperp = std::sqrt(g.det() / g.g22);
  // E2 = d2 / |d2|, Eperp = -(d1 - (g12/g22) d2) / |.|
  const ChartVector e2{0.0, 1.0 / s22};
  const ChartVector ep{-1.0 / sperp, (g.g12 / g.g22) / sperp};
  const double c = std::cos(a), s = std::sin(a);
  return {c * e2.v1 + s * ep.v1, c * e2.v2 + s * ep.v2};
}

double MetricBackend::direction_angle(ChartPoint p, ChartVector v) const {
  const Metric2 g = metric_at(p);
  const double along = (g.g12 * v.v1 + g.g22 * v.v2) / std::sqrt(g.g22);
  const double perp = -v.v1 * std::sqrt(g.det() / g.g22);
  return std::atan2(perp, along);
}

ChartPoint MetricBackend::twist(ChartPoint p, std::int64_t n) const {
  if (id_ == BackendId::hyperbolic) return {p.c1 + static_cast<double>(n), p.c2};
  return {p.c1, p.c2 + static_cast<double>(n) * p.c1};
}

ChartVector MetricBackend::twist_vector(ChartPoint, ChartVector v, std::int64_t n) const {
  if (id_ == BackendId::hyperbolic) return v;
  return {v.v1, v.v2 + static_cast<double>(n) * v.v1};
}

ChartVector MetricBackend::special_tangent(ChartPoint p) const {
  if (id_ == BackendId::hyperbolic) return normalized(p, {0.0, 1.0});
  if (params_.profile == WpProfile::leading_order) return normalized(p, {-1.0, 0.0});
  return normalized(p, {-p.c1, -p.c2});
}

double MetricBackend::cusp_coordinate(ChartPoint p) const { return id_ == BackendId::hyperbolic ? p.c2 : p.c1; }

double MetricBackend::twist_coordinate(ChartPoint p) const { return id_ == BackendId::hyperbolic ? p.c1 : p.c2; }

double MetricBackend::distance_to_cusp(ChartPoint p) const {
  if (id_ == BackendId::hyperbolic) throw DomainError("the hyperbolic cusp is at infinite distance");
  require_inside(*this, p);
  return std::sqrt(2.0 * kPi * p.c1);
}

namespace {

using State = std::array<double, 4>;

State rhs(const MetricBackend& b, const State& y) {
  const Christoffel c = raw_christoffel(b, {y[0], y[1]});
  const double v[2] = {y[2], y[3]};
  State f{y[2], y[3], 0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) acc += c.gamma[k][i][j] * v[i] * v[j];
    f[2 + k] = -acc;
  }
  return f;
}

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [coef, k] : terms)
    for (int i = 0; i < 4; ++i) out[i] += h * coef * (*k)[i];
  return out;
}

bool finite(const State& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

struct StepResult {
  State y;
  State err;
};

// Dormand-Prince 5(4).
StepResult dp45_step(const MetricBackend& b, const State& y, double h) {
  const State k1 = rhs(b, y);
  const State k2 = rhs(b, axpy(y, h, {{1.0 / 5, &k1}}));
  const State k3 = rhs(b, axpy(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
  const State k4 = rhs(b, axpy(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
  const State k5 = rhs(b, axpy(y, h,
                               {{19372.0 / 6561, &k1},
                                {-25360.0 / 2187, &k2},
                                {64448.0 / 6561, &k3},
                                {-212.0 / 729, &k4}}));
  const State k6 = rhs(b, axpy(y, h,
                               {{9017.0 / 3168, &k1},
                                {-355.0 / 33, &k2},
                                {46732.0 / 5247, &k3},
                                {49.0 / 176, &k4},
                                {-5103.0 / 18656, &k5}}));
  const State y5 = axpy(y, h,
                        {{35.0 / 384, &k1},
                         {500.0 / 1113, &k3},
                         {125.0 / 192, &k4},
                         {-2187.0 / 6784, &k5},
                         {11.0 / 84, &k6}});
  const State k7 = rhs(b, y5);
  State err{};
  for (int i = 0; i < 4; ++i) {
    err[i] = h * (71.0 / 57600 * k1[i] - 71.0 / 16695 * k3[i] + 71.0 / 1920 * k4[i] -
                  17253.0 / 339200 * k5[i] + 22.0 / 525 * k6[i] - 1.0 / 40 * k7[i]);
  }
  return {y5, err};
}

double error_norm(const State& y0, const StepResult& r, const IntegrationOptions& o) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(r.y[i]));
    acc += (r.err[i] / sc) * (r.err[i] / sc);
  }
  return std::sqrt(acc / 4.0);
}

PathSample sample_of(double s, const State& y) { return {s, {y[0], y[1]}, {y[2], y[3]}}; }

}  // namespace

PathSample GeodesicPath::at(double s) const {
  if (samples.empty()) throw DomainError("empty geodesic path");
  if (s <= samples.front().s) return samples.front();
  if (s >= samples.back().s) return samples.back();
  auto it = std::upper_bound(samples.begin(), samples.end(), s,
                             [](double v, const PathSample& ps) { return v < ps.s; });
  const PathSample& a = *(it - 1);
  const PathSample& b = *it;
  const double h = b.s - a.s;
  if (h <= 0.0) return a;
  const double u = (s - a.s) / h;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  const double d00 = 6 * u * u - 6 * u, d10 = 3 * u * u - 4 * u + 1;
  const double d01 = -6 * u * u + 6 * u, d11 = 3 * u * u - 2 * u;
  PathSample out;
  out.s = s;
  out.p.c1 = h00 * a.p.c1 + h10 * h * a.t.v1 + h01 * b.p.c1 + h11 * h * b.t.v1;
  out.p.c2 = h00 * a.p.c2 + h10 * h * a.t.v2 + h01 * b.p.c2 + h11 * h * b.t.v2;
  out.t.v1 = (d00 * a.p.c1 + d01 * b.p.c1) / h + d10 * a.t.v1 + d11 * b.t.v1;
  out.t.v2 = (d00 * a.p.c2 + d01 * b.p.c2) / h + d10 * a.t.v2 + d11 * b.t.v2;
  return out;
}

GeodesicPath integrate_geodesic(const MetricBackend& b, ChartPoint start, ChartVector dir, double max_length,
                                double cusp_stop, const IntegrationOptions& opts) {
  require_inside(b, start);
  if (!(max_length >= 0.0)) throw DomainError("max_length must be non-negative");
  const ChartVector u = b.normalized(start, dir);
  const bool wp = b.id() == BackendId::wp_cusp_model;

  GeodesicPath path;
  path.backend = b.id();
  State y{start.c1, start.c2, u.v1, u.v2};
  path.samples.push_back(sample_of(0.0, y));

  // Event functions are positive inside the allowed region.
  auto cusp_event = [&](const State& st) { return st[0] - cusp_stop; };
  auto exit_event = [&](const State& st) { return b.params().ell_max - st[0]; };

  double s = 0.0;
  double h = std::min(opts.h_init, opts.max_step);
  while (max_length - s > 1e-14 * std::max(1.0, max_length)) {
    const double remaining = max_length - s;
    const double step = std::min({h, opts.max_step, remaining});
    const StepResult r = dp45_step(b, y, step);
    const double err = finite(r.y) && finite(r.err) ? error_norm(y, r, opts) : HUGE_VAL;
    const bool out_of_domain = wp && !(r.y[0] > 0.0);
    if (err > 1.0 || out_of_domain) {
      const double factor = std::isfinite(err) && !out_of_domain ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      h = step * factor;
      if (h < opts.h_min) throw StepUnderflow("adaptive step fell below " + std::to_string(opts.h_min));
      continue;
    }
    if (wp) {
      int kind = 0;
      if (cusp_stop > 0.0 && cusp_event(r.y) < 0.0) kind = 1;
      else if (exit_event(r.y) < 0.0) kind = 2;
      if (kind != 0) {
        auto ev = [&](const State& st) { return kind == 1 ? cusp_event(st) : exit_event(st); };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && (hi - lo) * step > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          const State ym = dp45_step(b, y, mid * step).y;
          if (ev(ym) < 0.0 || !finite(ym)) hi = mid;
          else lo = mid;
        }
        const State yl = lo > 0.0 ? dp45_step(b, y, lo * step).y : y;
        path.samples.push_back(sample_of(s + lo * step, yl));
        if (kind == 1) path.terminated_at_cusp = true;
        else path.exited_chart = true;
        break;
      }
    }
    y = r.y;
    s = step == remaining ? max_length : s + step;
    path.samples.push_back(sample_of(s, y));
    h = step * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-300), -0.2)));
  }
  path.total_length = path.samples.back().s;
  return path;
}

double unit_speed_defect(const MetricBackend& b, const GeodesicPath& path) {
  double worst = 0.0;
  for (const auto& ps : path.samples) {
    if (!b.inside(ps.p)) continue;
    worst = std::max(worst, std::abs(raw_metric(b, ps.p).inner(ps.t, ps.t) - 1.0));
  }
  return worst;
}

namespace {

struct Shot {
  bool ok = false;
  bool hit_cusp = false;
  GeodesicPath path;
  double r1 = 0.0, r2 = 0.0;
  double norm() const { return std::hypot(r1, r2); }
};

Shot shoot(const MetricBackend& b, ChartPoint p, ChartPoint q, double phi, double len, const ChordOptions& o) {
  Shot out;
  if (!(len > 0.0) || !std::isfinite(phi)) return out;
  try {
    out.path = integrate_geodesic(b, p, b.unit_vector(p, phi), len, o.cusp_stop, o.integration);
  } catch (const StepUnderflow&) {
    out.hit_cusp = b.id() == BackendId::wp_cusp_model;
    return out;
  }
  if (out.path.terminated_at_cusp) {
    out.hit_cusp = true;
    return out;
  }
  if (out.path.exited_chart) return out;
  out.r1 = out.path.back().p.c1 - q.c1;
  out.r2 = out.path.back().p.c2 - q.c2;
  out.ok = std::isfinite(out.r1) && std::isfinite(out.r2);
  return out;
}

struct NewtonOutcome {
  std::optional<ChordResult> result;
  double best_residual = HUGE_VAL;
  int attempts = 0;
  int cusp_hits = 0;
};

NewtonOutcome newton_shoot(const MetricBackend& b, ChartPoint p, ChartPoint q, double phi, double len,
                           const ChordOptions& o) {
  NewtonOutcome out;
  auto track = [&](const Shot& s) {
    ++out.attempts;
    if (s.hit_cusp) ++out.cusp_hits;
    if (s.ok) out.best_residual = std::min(out.best_residual, s.norm());
  };
  Shot cur = shoot(b, p, q, phi, len, o);
  track(cur);
  if (!cur.ok) return out;
  auto finish = [&](int it) {
    if (cur.norm() > o.tol_bvp) return;
    ChordResult r;
    r.segment = std::move(cur.path);
    r.endpoint_error = cur.norm();
    r.iterations = it;
    r.initial_angle = phi;
    out.result = std::move(r);
  };
  for (int it = 0; it < o.max_iterations; ++it) {
    if (cur.norm() <= 0.01 * o.tol_bvp) {
      finish(it);
      return out;
    }
    const double dh = 1e-6;
    const Shot sp = shoot(b, p, q, phi + dh, len, o);
    const Shot sm = shoot(b, p, q, phi - dh, len, o);
    track(sp);
    track(sm);
    if (!sp.ok || !sm.ok) {
      finish(it);
      return out;
    }
    const double j11 = (sp.r1 - sm.r1) / (2 * dh), j21 = (sp.r2 - sm.r2) / (2 * dh);
    const double j12 = cur.path.back().t.v1, j22 = cur.path.back().t.v2;
    const double det = j11 * j22 - j12 * j21;
    if (!(std::abs(det) > 0.0)) {
      finish(it);
      return out;
    }
    const double dphi = -(j22 * cur.r1 - j12 * cur.r2) / det;
    const double dlen = -(-j21 * cur.r1 + j11 * cur.r2) / det;
    bool accepted = false;
    double lambda = 1.0;
    for (int k = 0; k < 30 && !accepted; ++k, lambda *= 0.5) {
      const double nphi = phi + lambda * std::clamp(dphi, -1.0, 1.0);
      const double nlen = std::max(len + lambda * dlen, 0.25 * len);
      Shot trial = shoot(b, p, q, nphi, nlen, o);
      track(trial);
      if (trial.ok && trial.norm() < cur.norm()) {
        phi = nphi;
        len = nlen;
        cur = std::move(trial);
        accepted = true;
      }
    }
    if (!accepted) {
      finish(it + 1);
      return out;
    }
  }
  finish(o.max_iterations);
  return out;
}

double chord_length_guess(const MetricBackend& b, ChartPoint p, ChartPoint q) {
  const ChartPoint mid{0.5 * (p.c1 + q.c1), 0.5 * (p.c2 + q.c2)};
  const ChartVector d{q.c1 - p.c1, q.c2 - p.c2};
  const ChartPoint at = b.inside(mid) ? mid : p;
  return std::sqrt(raw_metric(b, at).inner(d, d));
}

}  // namespace

namespace {

// Q^k(x, d) = Gamma^k_ab(x) d^a d^b
std::array<double, 2> quad(const MetricBackend& b, ChartPoint x, const double d[2]) {
  const Christoffel c = raw_christoffel(b, x);
  std::array<double, 2> out{};
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[k] += c.gamma[k][i][j] * d[i] * d[j];
  return out;
}

bool all_inside(const MetricBackend& b, const std::vector<ChartPoint>& xs) {
  return std::all_of(xs.begin(), xs.end(), [&](ChartPoint x) { return b.inside(x); });
}

// Residual of the second-order discretization x'' + Gamma(x)[x', x'] = 0.
Eigen::VectorXd discrete_residual(const MetricBackend& b, const std::vector<ChartPoint>& xs) {
  const int m = static_cast<int>(xs.size()) - 2;
  Eigen::VectorXd r(2 * m);
  for (int i = 1; i <= m; ++i) {
    const double d[2] = {0.5 * (xs[i + 1].c1 - xs[i - 1].c1), 0.5 * (xs[i + 1].c2 - xs[i - 1].c2)};
    const auto q = quad(b, xs[i], d);
    r[2 * (i - 1)] = xs[i + 1].c1 - 2 * xs[i].c1 + xs[i - 1].c1 + q[0];
    r[2 * (i - 1) + 1] = xs[i + 1].c2 - 2 * xs[i].c2 + xs[i - 1].c2 + q[1];
  }
  return r;
}

bool relax_polyline(const MetricBackend& b, std::vector<ChartPoint>& xs) {
  const int m = static_cast<int>(xs.size()) - 2;
  if (m <= 0) return true;
  Eigen::VectorXd r = discrete_residual(b, xs);
  for (int iter = 0; iter < 100; ++iter) {
    if (r.lpNorm<Eigen::Infinity>() < 1e-14) return true;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int i = 1; i <= m; ++i) {
      const int row = 2 * (i - 1);
      const double d[2] = {0.5 * (xs[i + 1].c1 - xs[i - 1].c1), 0.5 * (xs[i + 1].c2 - xs[i - 1].c2)};
      const Christoffel c = raw_christoffel(b, xs[i]);
      double dq[2][2];  // dQ^k / dd^a = 2 Gamma^k_ab d^b
      for (int k = 0; k < 2; ++k)
        for (int a = 0; a < 2; ++a) dq[k][a] = 2.0 * (c.gamma[k][a][0] * d[0] + c.gamma[k][a][1] * d[1]);
      double dx[2][2];
      for (int a = 0; a < 2; ++a) {
        const double h = 1e-7 * std::max(1.0, std::abs(a == 0 ? xs[i].c1 : xs[i].c2));
        ChartPoint xp = xs[i], xm = xs[i];
        (a == 0 ? xp.c1 : xp.c2) += h;
        (a == 0 ? xm.c1 : xm.c2) -= h;
        if (!b.inside(xm)) xm = xs[i];
        const double span = (a == 0 ? xp.c1 - xm.c1 : xp.c2 - xm.c2);
        const auto qp = quad(b, xp, d), qm = quad(b, xm, d);
        for (int k = 0; k < 2; ++k) dx[k][a] = (qp[k] - qm[k]) / span;
      }
      for (int k = 0; k < 2; ++k) {
        for (int a = 0; a < 2; ++a) {
          J(row + k, row + a) = (k == a ? -2.0 : 0.0) + dx[k][a];
          if (i < m) J(row + k, row + 2 + a) = (k == a ? 1.0 : 0.0) + 0.5 * dq[k][a];
          if (i > 1) J(row + k, row - 2 + a) = (k == a ? 1.0 : 0.0) - 0.5 * dq[k][a];
        }
      }
    }
    const Eigen::VectorXd delta = J.partialPivLu().solve(-r);
    if (!delta.allFinite()) return false;
    bool accepted = false;
    double lambda = 1.0;
    for (int k = 0; k < 40 && !accepted; ++k, lambda *= 0.5) {
      std::vector<ChartPoint> trial = xs;
      for (int i = 1; i <= m; ++i) {
        trial[i].c1 += lambda * delta[2 * (i - 1)];
        trial[i].c2 += lambda * delta[2 * (i - 1) + 1];
      }
      if (!all_inside(b, trial)) continue;
      const Eigen::VectorXd rt = discrete_residual(b, trial);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        xs = std::move(trial);
        r = rt;
        accepted = true;
      }
    }
    if (!accepted) return r.lpNorm<Eigen::Infinity>() < 1e-10;
    if (lambda * delta.lpNorm<Eigen::Infinity>() < 1e-15) return true;
  }
  return r.lpNorm<Eigen::Infinity>() < 1e-10;
}

}  // namespace

std::vector<ChartPoint> subdivision_geodesic(const MetricBackend& b, ChartPoint p, ChartPoint q, int points) {
  require_inside(b, p);
  require_inside(b, q);
  if (points < 3) throw DomainError("subdivision needs at least three points");
  std::vector<ChartPoint> xs{p, {0.5 * (p.c1 + q.c1), 0.5 * (p.c2 + q.c2)}, q};
  if (!b.inside(xs[1])) throw CuspObstruction("chart midpoint outside the chart");
  if (!relax_polyline(b, xs)) throw NoConvergence("subdivision did not converge", HUGE_VAL);
  while (static_cast<int>(xs.size()) < points) {
    std::vector<ChartPoint> finer;
    finer.reserve(2 * xs.size() - 1);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      finer.push_back(xs[i]);
      finer.push_back({0.5 * (xs[i].c1 + xs[i + 1].c1), 0.5 * (xs[i].c2 + xs[i + 1].c2)});
    }
    finer.push_back(xs.back());
    xs = std::move(finer);
    if (!relax_polyline(b, xs)) {
      const double res = discrete_residual(b, xs).lpNorm<Eigen::Infinity>();
      throw NoConvergence("subdivision did not converge", res);
    }
  }
  return xs;
}

ChordResult chord_bvp(const MetricBackend& b, ChartPoint p, ChartPoint q, const ChordOptions& opts) {
  require_inside(b, p);
  require_inside(b, q);
  if (p.c1 == q.c1 && p.c2 == q.c2) throw DegenerateChord("chord endpoints coincide");

  int attempts = 0, cusp_hits = 0;
  double best = HUGE_VAL;
  auto absorb = [&](const NewtonOutcome& n) {
    attempts += n.attempts;
    cusp_hits += n.cusp_hits;
    best = std::min(best, n.best_residual);
  };

  std::optional<ChordResult> fast;
  if (!opts.force_subdivision) {
    const double phi0 = opts.initial_angle.value_or(b.direction_angle(p, {q.c1 - p.c1, q.c2 - p.c2})) +
                        opts.angle_offset;
    const double len0 = opts.initial_length.value_or(chord_length_guess(b, p, q));
    NewtonOutcome n = newton_shoot(b, p, q, phi0, len0, opts);
    absorb(n);
    fast = std::move(n.result);
    if (fast && !opts.verify_with_subdivision) return std::move(*fast);
  }

  std::optional<ChordResult> robust;
  try {
    const std::vector<ChartPoint> xs = subdivision_geodesic(b, p, q);
    const ChartVector v0{(-3 * xs[0].c1 + 4 * xs[1].c1 - xs[2].c1) / 2,
                         (-3 * xs[0].c2 + 4 * xs[1].c2 - xs[2].c2) / 2};
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const ChartPoint mid{0.5 * (xs[i].c1 + xs[i + 1].c1), 0.5 * (xs[i].c2 + xs[i + 1].c2)};
      const ChartVector d{xs[i + 1].c1 - xs[i].c1, xs[i + 1].c2 - xs[i].c2};
      len += std::sqrt(raw_metric(b, mid).inner(d, d));
    }
    NewtonOutcome n = newton_shoot(b, p, q, b.direction_angle(p, v0), len, opts);
    absorb(n);
    robust = std::move(n.result);
    if (robust) robust->used_subdivision = true;
  } catch (const CuspObstruction&) {
    ++cusp_hits;
    ++attempts;
  } catch (const NoConvergence& e) {
    best = std::min(best, e.residual);
  }

  if (!fast && !robust) {
    // Continuation: walk the far endpoint out from p along the chart segment,
    // warm-starting each solve from the previous chord.
    ChordOptions local = opts;
    local.angle_offset = 0.0;
    double t = 0.0, dt = 1.0 / 64;
    std::optional<ChordResult> last;
    while (t < 1.0 && dt > 1e-6) {
      const double tn = std::min(1.0, t + dt);
      const ChartPoint qt{p.c1 + tn * (q.c1 - p.c1), p.c2 + tn * (q.c2 - p.c2)};
      if (last) {
        local.initial_angle = last->initial_angle;
        local.initial_length = last->segment.total_length * tn / t;
      } else {
        local.initial_angle = b.direction_angle(p, {q.c1 - p.c1, q.c2 - p.c2});
        local.initial_length = chord_length_guess(b, p, qt);
      }
      NewtonOutcome n = newton_shoot(b, p, qt, *local.initial_angle, *local.initial_length, local);
      absorb(n);
      if (n.result) {
        last = std::move(n.result);
        t = tn;
        dt *= 2;
      } else {
        dt /= 2;
      }
    }
    if (t >= 1.0 && last) robust = std::move(last);
  }

  if (fast && robust) {
    const double dphi = std::abs(std::remainder(fast->initial_angle - robust->initial_angle, 2 * kPi));
    const double dlen = std::abs(fast->segment.total_length - robust->segment.total_length);
    return (dphi > 1e-6 || dlen > 1e-6) ? std::move(*robust) : std::move(*fast);
  }
  if (robust) return std::move(*robust);
  if (fast) return std::move(*fast);
  if (attempts > 0 && cusp_hits == attempts) throw CuspObstruction("every candidate direction runs into the cusp");
  throw NoConvergence("chord solver did not reach tol_bvp", best);
}

}  // namespace cusped
