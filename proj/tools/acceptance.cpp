// Acceptance run: one line per criterion, tolerances fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unistd.h>

#include "cusped/cli.hpp"
#include "cusped/concatenation.hpp"
#include "cusped/dense_limit.hpp"
#include "cusped/metric_engine.hpp"
#include "cusped/parallel.hpp"
#include "cusped/shadowing.hpp"
#include "cusped/spectrum.hpp"

using namespace cusped;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
int failures = 0;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void line(int id, bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %2d %s  %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void hyperbolic_oracle() {
  const Stopwatch sw;
  const auto hyp = MetricBackend::hyperbolic();
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(0.2, 3.0), ua(-kPi, kPi), ul(0.1, 8.0);
  double ivp_end = 0.0, ivp_len = 0.0, bvp_end = 0.0, bvp_len = 0.0;
  const int cases = 500;
  for (int i = 0; i < cases; ++i) {
    const ChartPoint p{ux(rng), uy(rng)};
    const double phi = ua(rng), len = ul(rng);
    const GeodesicPath path = integrate_geodesic(hyp, p, hyp.unit_vector(p, phi), len);
    const GeodesicSegment exact = geodesic_from(UnitTangent({p.c1, p.c2}, phi), len);
    ivp_end = std::max(ivp_end, dist({path.back().p.c1, path.back().p.c2}, exact.end));
    ivp_len = std::max(ivp_len, std::abs(path.total_length - exact.length));

    const ChartPoint q{ux(rng), uy(rng)};
    const ChordResult c = chord_bvp(hyp, p, q);
    const GeodesicSegment s = geodesic_between({p.c1, p.c2}, {q.c1, q.c2});
    bvp_end = std::max(bvp_end, dist({c.segment.back().p.c1, c.segment.back().p.c2}, s.end));
    bvp_len = std::max(bvp_len, std::abs(c.segment.total_length - s.length));
  }
  const double t = sw.seconds();
  const double end = std::max(ivp_end, bvp_end), len = std::max(ivp_len, bvp_len);
  line(1, end <= 1e-6 && len <= 1e-6 && t < 10.0, "hyperbolic oracle agreement",
       fmt("%d cases, max endpoint error %.2e, max length error %.2e (tol 1e-6), %.1f s (< 10 s)", cases, end, len, t));
}

void shadowing_criteria() {
  const Stopwatch sw;
  FamilySpec spec;
  spec.ea_max = 0.1;
  const ShadowTable t = shadowing_experiment(spec, 200, 7, worker_count());
  const double secs = sw.seconds();
  std::size_t ok = 0;
  double ea_hi = 0.0, worst_dF_excess = -HUGE_VAL;
  for (const auto& r : t.rows) {
    if (!r.error.empty()) continue;
    ++ok;
    ea_hi = std::max(ea_hi, r.ea_total);
    worst_dF_excess = std::max(worst_dF_excess, r.max_abs_dF - r.ea_total);
  }
  line(2, ok >= 200 && ea_hi <= 0.1 && t.pass_rate == 1.0 && t.slope > 0.0 && secs < 120.0, "shadowing bound",
       fmt("%zu trials, ea_total <= %.3f, max_F <= bound in %.1f%% (need 100%%), max max_F/bound %.3f, "
           "log-log slope %.3f (> 0), %.1f s (< 120 s)",
           ok, ea_hi, 100.0 * t.pass_rate, t.ratio.max, t.slope, secs));
  line(3, ok >= 200 && t.deriv_pass_rate == 1.0, "derivative bound",
       fmt("max |F'| <= ea_total + 1e-3 in %.1f%% (need 100%%), worst max|F'| - ea_total = %.2e", 100.0 * t.deriv_pass_rate,
           worst_dF_excess));
}

void twisting() {
  const auto hyp = MetricBackend::hyperbolic();
  const auto wp = MetricBackend::wp_cusp_model();
  const TwistScan h = twist_scan(hyp, {0.0, 1.0}, {0.0, 1.0}, 1, 64);
  double closed = 0.0;
  for (const auto& r : h.rows) {
    const double n = static_cast<double>(r.n);
    closed = std::max({closed, std::abs(r.initial_angle_gap - std::atan(2.0 / n)),
                       std::abs(r.terminal_angle_gap - std::atan(2.0 / n))});
  }
  const TwistScan w = twist_scan(wp, {1.0, 0.0}, {1.0, 0.0}, 1, 64);
  bool monotone = true, growth = true;
  for (std::size_t i = 1; i < w.rows.size(); ++i) {
    const auto& r = w.rows[i];
    if (r.n <= w.n0) continue;
    if (r.initial_angle_gap > w.rows[i - 1].initial_angle_gap) monotone = false;
    if (r.chord_length < static_cast<double>(r.n - w.n0) * w.L0) growth = false;
  }
  const double last = w.rows.back().initial_angle_gap;
  line(4, closed <= 1e-6 && monotone && last < 0.02 && growth && w.L0 > 0.0, "twisting",
       fmt("half-plane max |gap - atan(2/n)| %.2e over n = 1..64 (tol 1e-6); cusp model n0 = %lld, gaps "
           "non-increasing beyond n0: %s, gap(64) = %.4f (< 0.02), chord_length >= (n - n0) L0 with L0 = %.4f: %s "
           "(checked on n <= 64)",
           closed, static_cast<long long>(w.n0), monotone ? "yes" : "no", last, w.L0, growth ? "yes" : "no"));
}

void dense() {
  const Stopwatch sw;
  const FramedConcatenation C = build_concatenation(default_plan(17, 1), 17);
  const std::size_t m = 8;
  const ChordalLimit L = chordal_limit(C, m, {2, 4, 8});
  std::vector<double> cov;
  for (std::size_t N : {4, 8, 12}) cov.push_back(density_coverage(chord_tangents(C, {m - N / 2, m + N / 2}), 0.3));
  const bool cov_up = cov[0] < cov[1] && cov[1] < cov[2];
  const bool halve = L.cauchy_gaps.size() == 2 && L.cauchy_gaps[1] <= 0.5 * L.cauchy_gaps[0];
  const auto& F = L.terminal_window_max_F;
  const bool F_down = F.size() == 3 && F[0] > F[1] && F[1] > F[2];
  const double secs = sw.seconds();
  line(5, cov_up && L.cauchy && halve && F_down && secs < 300.0, "dense construction",
       fmt("coverage(eps 0.3) at N = 4, 8, 12: %.3f, %.3f, %.3f (strictly increasing); Cauchy gaps n=4: %.2e, "
           "n=8: %.2e (>= 2x drop); terminal-window max F %.2e, %.2e, %.2e (decreasing); %.1f s (< 300 s)",
           cov[0], cov[1], cov[2], L.cauchy_gaps[0], L.cauchy_gaps[1], F[0], F[1], F[2], secs));
}

std::string least_rotation(const std::string& w) {
  std::string best = w, r = w;
  for (std::size_t i = 1; i < w.size(); ++i) {
    std::rotate(r.begin(), r.begin() + 1, r.end());
    best = std::min(best, r);
  }
  return best;
}

bool primitive_word(const std::string& w) {
  for (std::size_t p = 1; p < w.size(); ++p)
    if (w.size() % p == 0 && w.substr(p) + w.substr(0, p) == w) return false;
  return true;
}

void census() {
  const Stopwatch sw;
  const CensusTable c = enumerate_closed_geodesics(12.0, worker_count());
  const double shortest = c.classes.front().length;
  // Brute force: every primitive word in R, L of length <= 8 using both
  // letters; conjugacy of positive words is cyclic rotation, and the matrix
  // route (axis continued fraction) must land on a census class of the same trace.
  std::set<std::string> brute, from_census;
  std::set<std::pair<std::int64_t, std::vector<int>>> census_keys;
  for (const auto& k : c.classes) {
    census_keys.insert({k.trace, k.cf_period});
    if (k.word_length() <= 8) from_census.insert(least_rotation(k.word()));
  }
  bool matrix_route = true;
  for (int len = 2; len <= 8; ++len)
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::string w;
      BigUnimodular m;
      for (int i = 0; i < len; ++i) {
        const bool r = (bits >> i) & 1;
        w.push_back(r ? 'R' : 'L');
        m = m * (r ? BigUnimodular(1, 1, 0, 1) : BigUnimodular(1, 0, 1, 1));
      }
      if (w.find('R') == std::string::npos || w.find('L') == std::string::npos || !primitive_word(w)) continue;
      brute.insert(least_rotation(w));
      if (!census_keys.count({m.trace().convert_to<std::int64_t>(), run_key(m)})) matrix_route = false;
    }
  const GrowthFit f = growth_rate_fit(c, 8.0, 12.0);
  const double secs = sw.seconds();
  const bool ok = std::abs(shortest - 2.0 * std::acosh(1.5)) <= 1e-9 && brute == from_census && matrix_route &&
                  std::abs(f.slope - 1.0) <= 0.15 && secs < 120.0;
  line(6, ok, "closed-geodesic census",
       fmt("shortest %.12f vs 2 arccosh(3/2) = %.12f (tol 1e-9); word length <= 8: %zu brute-force classes, %zu census "
           "classes, %s; growth slope on [8, 12] = %.4f +- %.4f (1 +- 0.15); %zu classes, %.1f s (< 120 s)",
           shortest, 2.0 * std::acosh(1.5), brute.size(), from_census.size(),
           brute == from_census && matrix_route ? "identical" : "MISMATCH", f.slope, f.stderr_slope, c.classes.size(),
           secs));
}

void entropy() {
  const double e2 = bounded_cf_subshift(2).entropy;
  double worst = 0.0;
  for (int N : {2, 3, 4}) {
    const auto s = bounded_cf_subshift(N);
    worst = std::max(worst, std::abs(std::log(periodic_points(s, 16).convert_to<double>()) / 16.0 - s.entropy));
  }
  bool up = true;
  std::string list;
  for (int N = 1; N <= 6; ++N) {
    const double e = bounded_cf_subshift(N).entropy;
    if (N > 1 && e <= bounded_cf_subshift(N - 1).entropy) up = false;
    list += fmt("%s%.4f", N > 1 ? ", " : "", e);
  }
  line(7, std::abs(e2 - std::log(2.0)) <= 1e-10 && worst <= 0.05 && up, "horseshoe entropy",
       fmt("entropy(2) - log 2 = %.1e (tol 1e-10); max |log p(16) / 16 - entropy| over N = 2, 3, 4: %.2e (tol 0.05); "
           "entropy(1..6) = %s (strictly increasing)",
           e2 - std::log(2.0), worst, list.c_str()));
}

void cusp_avoidance() {
  bool below = true, up = true;
  std::string detail;
  for (int N = 1; N <= 3; ++N) {
    const auto h = closed_geodesics_in_horseshoe(N, N == 1 ? 4 : 7 - N);
    double worst = 0.0;
    for (const auto& c : h) worst = std::max(worst, measured_fd_height(c.cls.representative));
    if (worst > height_bound(N) + 1e-9) below = false;
    detail += fmt("N=%d: %zu axes, max height %.4f <= %.4f; ", N, h.size(), worst, height_bound(N));
  }
  for (int N = 1; N < 10; ++N)
    if (height_bound(N + 1) <= height_bound(N)) up = false;
  const auto simple = simple_geodesic_census(30);
  double h_star = 0.0;
  for (const auto& c : simple) h_star = std::max(h_star, c.height);
  const auto ns = non_simple_samples(10);
  std::size_t above = 0;
  double ns_min = HUGE_VAL;
  for (const auto& c : ns) {
    if (c.height > h_star) ++above;
    ns_min = std::min(ns_min, c.height);
  }
  line(8, below && up && above >= 10, "cusp avoidance",
       detail + fmt("height_bound increasing: %s; %zu simple classes (q <= 30) with H* = %.6f; %zu of %zu non-simple "
                    "classes exceed H* (min %.4f)",
                    up ? "yes" : "no", simple.size(), h_star, above, ns.size(), ns_min));
}

void recurrence() {
  const Stopwatch sw;
  const RecurrenceStats st = recurrence_mc(MetricBackend::hyperbolic(), 1000, 50.0, 0.2, 1, worker_count());
  bool monotone = true;
  double prev = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double f = st.recurrent_fraction(0.1 * i);
    if (f < prev) monotone = false;
    prev = f;
  }
  const double frac = st.recurrent_fraction(50.0);
  const UnitTangent v{HalfPlanePoint(0.5, std::sqrt(5.0) / 2.0), -kPi / 2.0};
  const double ret = first_return_time(v, 1e-3, 5.0);
  line(9, frac >= 0.9 && monotone && std::abs(ret - 1.9248) <= 1e-3 && st.errors.empty(), "recurrence",
       fmt("recurrent fraction by T = 50 (delta 0.2, 1000 samples, seed 1) = %.3f (need >= 0.9); monotone in T: %s; "
           "trace-3 orbit returns at %.5f (1.9248 +- 1e-3); %zu sample errors; %.1f s",
           frac, monotone ? "yes" : "no", ret, st.errors.size(), sw.seconds()));
}

void wp_model() {
  const auto wp = MetricBackend::wp_cusp_model();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ul(1e-6, 4.0), ut(-10.0, 10.0);
  double det_err = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const ChartPoint p{ul(rng), ut(rng)};
    const Metric2 g = wp.metric_at(p);
    det_err = std::max(det_err, std::abs(g.det() - 0.25) / std::max({1.0, g.g11 * g.g22}));
  }
  const double k_small = wp.curvature_at({1e-4, 0.0});
  bool k_down = true;
  for (double l = 1.0; l > 2e-4; l /= 10.0)
    if (wp.curvature_at({l / 10.0, 0.0}) >= wp.curvature_at({l, 0.0})) k_down = false;

  double radial = 0.0;
  bool terminated = true;
  const double stop = 1e-9;
  for (double l0 : {0.2, 1.0, 3.0}) {
    const GeodesicPath path = integrate_geodesic(wp, {l0, 0.0}, {-1.0, 0.0}, 10.0, stop);
    terminated = terminated && path.terminated_at_cusp;
    // arclength of the radial line from sqrt(g_ll), in u = sqrt(ell)
    const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double u) { return std::sqrt(wp.metric_at({u * u, 0.0}).g11) * 2.0 * u; }, std::sqrt(stop), std::sqrt(l0));
    radial = std::max(radial, std::abs(path.total_length - q));
  }

  double area = 0.0;
  std::string rows;
  for (const auto& r : cusp_area_divergence(wp, 0.1, {0.0, 1.0, 10.0, 100.0})) {
    area = std::max(area, std::abs(r.area - r.closed_form) / (1.0 + r.T));
    rows += fmt("%s%g:%.6f", rows.empty() ? "" : ", ", r.T, r.area);
  }
  const double fd = fundamental_domain_area(MetricBackend::hyperbolic());
  const bool ok = det_err <= 1e-9 && k_small < -1e3 && k_down && terminated && radial <= 1e-4 && area <= 1e-9 &&
                  std::abs(fd - kPi / 3.0) <= 1e-6;
  line(10, ok, "WP model properties",
       fmt("max relative |det g - 1/4| %.1e over 2000 points; K(ell=1e-4) = %.1f (< -1e3), decreasing toward the cusp: "
           "%s; radial geodesics reach the cusp: %s, |arclength - quadrature| %.1e (tol 1e-4); area(eps 0.1, |tau| < T) "
           "for T = %s matches eps T (max rel err %.1e); fundamental domain area %.9f vs pi/3 (tol 1e-6); "
           "moduli-space area pi^2/12 recorded, not verified",
           det_err, k_small, k_down ? "yes" : "no", terminated ? "yes" : "no", radial, rows.c_str(), area, fd));
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / ("cusped_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::size_t files = 0, differing = 0;
  std::string subs;
  auto check = [&](cli::ExperimentConfig cfg) {
    subs += (subs.empty() ? "" : ", ") + cfg.subcommand;
    cfg.out = root / (cfg.subcommand + "_a");
    cfg.workers = 1;
    cli::run(cfg);
    cfg.out = root / (cfg.subcommand + "_b");
    cfg.workers = 4;
    cli::run(cfg);
    for (const auto& e : fs::directory_iterator(root / (cfg.subcommand + "_a"))) {
      const auto name = e.path().filename();
      if (name == "manifest.json") continue;
      ++files;
      if (slurp(e.path()) != slurp(root / (cfg.subcommand + "_b") / name)) ++differing;
    }
  };
  cli::ExperimentConfig sh;
  sh.subcommand = "shadow";
  sh.seed = 7;
  sh.trials = 50;
  check(sh);
  cli::ExperimentConfig de;
  de.subcommand = "dense";
  de.seed = 1;
  check(de);
  cli::ExperimentConfig sp;
  sp.subcommand = "spectrum";
  sp.t_max = 9.0;
  sp.fit_t0 = 6.0;
  sp.fit_t1 = 9.0;
  sp.k_max = 8;
  check(sp);
  cli::ExperimentConfig re;
  re.subcommand = "recur";
  re.seed = 5;
  re.samples = 100;
  re.t_horizon = 20.0;
  check(re);
  fs::remove_all(root);
  line(11, files > 0 && differing == 0, "determinism",
       fmt("%zu data artifacts from %s, rerun with 1 and 4 workers: %zu differ (need 0 byte differences)", files,
           subs.c_str(), differing));
}

}  // namespace

int main() {
  hyperbolic_oracle();
  shadowing_criteria();
  twisting();
  dense();
  census();
  entropy();
  cusp_avoidance();
  recurrence();
  wp_model();
  determinism();
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
