#include "cusped/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <numbers>
#include <set>

#include <boost/math/quadrature/gauss.hpp>

#include "cusped/dense_limit.hpp"
#include "cusped/parallel.hpp"

namespace cusped {

namespace {

constexpr double kPi = std::numbers::pi;
using Elt = MappingClassElement;

Elt run_matrix(int run, bool left) {
  return left ? Elt(1, 0, run, 1) : Elt(1, run, 0, 1);
}

std::int64_t trace_times_R(const Elt& m) { return m.a + m.c + m.d; }

bool is_primitive(const std::vector<int>& runs) {
  const std::size_t n = runs.size();
  for (std::size_t s = 2; s < n; s += 2) {
    if (n % s != 0) continue;
    if (std::equal(runs.begin(), runs.end() - static_cast<std::ptrdiff_t>(s), runs.begin() + static_cast<std::ptrdiff_t>(s)))
      return false;
  }
  return true;
}

ClosedGeodesicClass make_class(const std::vector<int>& runs) {
  ClosedGeodesicClass c;
  c.cf_period = canonical_cycle(runs);
  c.representative = word_matrix(c.cf_period);
  c.trace = c.representative.trace();
  c.length = length_from_trace(static_cast<double>(c.trace));
  c.primitive = is_primitive(c.cf_period);
  return c;
}

void census_dfs(std::vector<int>& runs, const Elt& m, std::int64_t tmax, std::vector<ClosedGeodesicClass>& out) {
  const bool left = runs.size() % 2 == 0;
  for (int a = 1;; ++a) {
    const Elt next = m * run_matrix(a, left);
    // Traces of nonnegative words only grow when letters are appended; an
    // L run still needs at least one R after it.
    const std::int64_t bound = left ? trace_times_R(next) : next.trace();
    if (bound > tmax) break;
    runs.push_back(a);
    if (!left && runs == canonical_cycle(runs) && is_primitive(runs)) out.push_back(make_class(runs));
    census_dfs(runs, next, tmax, out);
    runs.pop_back();
  }
}

bool class_less(const ClosedGeodesicClass& x, const ClosedGeodesicClass& y) {
  if (x.trace != y.trace) return x.trace < y.trace;
  return x.cf_period < y.cf_period;
}

}  // namespace

double length_from_trace(double trace) { return 2.0 * std::acosh(std::abs(trace) / 2.0); }

std::size_t ClosedGeodesicClass::word_length() const {
  std::size_t n = 0;
  for (int r : cf_period) n += static_cast<std::size_t>(r);
  return n;
}

std::string ClosedGeodesicClass::word() const {
  std::string w;
  for (std::size_t i = 0; i < cf_period.size(); ++i) w.append(static_cast<std::size_t>(cf_period[i]), i % 2 == 0 ? 'L' : 'R');
  return w;
}

std::size_t CensusTable::count(double T) const {
  std::size_t n = 0;
  for (const auto& c : classes)
    if (c.length <= T) ++n;
  return n;
}

std::vector<int> canonical_cycle(const std::vector<int>& runs) {
  if (runs.empty() || runs.size() % 2 != 0) throw DomainError("run sequence must have even positive length");
  std::vector<int> best = runs;
  std::vector<int> rot = runs;
  for (std::size_t s = 2; s < runs.size(); s += 2) {
    std::rotate(rot.begin(), rot.begin() + 2, rot.end());
    if (rot < best) best = rot;
  }
  return best;
}

MappingClassElement word_matrix(const std::vector<int>& runs) {
  Elt m;
  for (std::size_t i = 0; i < runs.size(); ++i) m = m * run_matrix(runs[i], i % 2 == 0);
  return m;
}

CensusTable enumerate_closed_geodesics(double T_max, unsigned workers) {
  CensusTable table;
  table.T_max = T_max;
  if (T_max < kShortestClosedLength) return table;
  const auto tmax = static_cast<std::int64_t>(std::floor(2.0 * std::cosh(T_max / 2.0) + 1e-9));
  // Work split by the first run; each run length is an independent subtree.
  const std::size_t first_runs = static_cast<std::size_t>(tmax - 2);
  std::vector<std::vector<ClosedGeodesicClass>> parts(first_runs);
  parallel_for(first_runs, workers, [&](std::size_t i) {
    const int a = static_cast<int>(i) + 1;
    const Elt m = run_matrix(a, true);
    if (trace_times_R(m) > tmax) return;
    std::vector<int> runs{a};
    census_dfs(runs, m, tmax, parts[i]);
  });
  for (auto& p : parts) table.classes.insert(table.classes.end(), p.begin(), p.end());
  std::erase_if(table.classes, [&](const ClosedGeodesicClass& c) { return c.length > T_max; });
  std::sort(table.classes.begin(), table.classes.end(), class_less);
  return table;
}

GrowthFit growth_rate_fit(const CensusTable& census, double T0, double T1, double dT) {
  if (!(T1 > T0) || !(dT > 0.0)) throw DomainError("growth_rate_fit: need T0 < T1 and dT > 0");
  if (census.count(T1) < 50) throw InsufficientData("growth_rate_fit: fewer than 50 classes by T1");
  GrowthFit fit;
  std::vector<double> lengths;
  for (const auto& c : census.classes) lengths.push_back(c.length);
  std::sort(lengths.begin(), lengths.end());
  const int n = static_cast<int>(std::floor((T1 - T0) / dT + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    const double T = T0 + dT * i;
    const auto N = std::upper_bound(lengths.begin(), lengths.end(), T) - lengths.begin();
    if (N == 0) continue;
    fit.T.push_back(T);
    fit.logN.push_back(std::log(static_cast<double>(N)));
  }
  const std::size_t m = fit.T.size();
  if (m < 3) throw InsufficientData("growth_rate_fit: too few grid points with N > 0");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += fit.T[i];
    my += fit.logN[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (fit.T[i] - mx) * (fit.T[i] - mx);
    sxy += (fit.T[i] - mx) * (fit.logN[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < m; ++i) {
    fit.residuals.push_back(fit.logN[i] - (fit.intercept + fit.slope * fit.T[i]));
    ssr += fit.residuals.back() * fit.residuals.back();
  }
  fit.stderr_slope = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  return fit;
}

namespace {

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if (q * b != a && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

QuadraticCf quadratic_cf(const BigInt& P0, const BigInt& D0, const BigInt& Q0) {
  if (Q0 == 0 || D0 <= 0) throw DomainError("quadratic_cf: need Q != 0 and D > 0");
  BigInt P = P0, D = D0, Q = Q0;
  if ((D - P * P) % Q != 0) {
    const BigInt aq = abs(Q);
    P *= aq;
    D *= Q * Q;
    Q *= aq;
  }
  const BigInt r = boost::multiprecision::sqrt(D);
  if (r * r == D) throw DomainError("quadratic_cf: D is a perfect square");
  std::map<std::pair<BigInt, BigInt>, std::size_t> seen;
  std::vector<BigInt> digits;
  for (;;) {
    const auto key = std::make_pair(P, Q);
    if (auto it = seen.find(key); it != seen.end()) {
      QuadraticCf out;
      out.preperiod.assign(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(it->second));
      out.period.assign(digits.begin() + static_cast<std::ptrdiff_t>(it->second), digits.end());
      return out;
    }
    seen.emplace(key, digits.size());
    const BigInt a = floor_div(P + r + (Q < 0 ? 1 : 0), Q);
    digits.push_back(a);
    P = a * Q - P;
    Q = (D - P * P) / Q;
    if (digits.size() > 100000) throw NonTermination("quadratic_cf: period not found");
  }
}

std::vector<BigInt> fixed_point_cf_period(const BigUnimodular& m0) {
  BigUnimodular m = m0;
  if (m.trace() < 0) m = BigUnimodular(-m.a, -m.b, -m.c, -m.d);
  const BigInt t = m.trace();
  if (t <= 2) throw DomainError("fixed_point_cf_period: element is not hyperbolic");
  return quadratic_cf(m.a - m.d, t * t - 4, 2 * m.c).period;
}

double cf_height(const std::vector<int>& period) {
  if (period.empty()) throw DomainError("cf_height: empty period");
  const std::size_t n = period.size();
  const std::size_t depth = std::max<std::size_t>(80, 2 * n);
  auto digit = [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::ptrdiff_t>(n);
    return static_cast<double>(period[static_cast<std::size_t>(((i % k) + k) % k)]);
  };
  double best = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    double fwd = digit(kk + static_cast<std::ptrdiff_t>(depth));
    for (auto i = static_cast<std::ptrdiff_t>(depth) - 1; i >= 0; --i) fwd = digit(kk + i) + 1.0 / fwd;
    double back = digit(kk - static_cast<std::ptrdiff_t>(depth));
    for (auto i = static_cast<std::ptrdiff_t>(depth) - 1; i >= 1; --i) back = digit(kk - i) + 1.0 / back;
    best = std::max(best, 0.5 * (fwd + 1.0 / back));
  }
  return best;
}

double cf_height(const std::vector<BigInt>& period) {
  std::vector<int> p;
  for (const auto& d : period) {
    if (d > std::numeric_limits<int>::max()) throw Overflow("cf_height: digit does not fit an int");
    p.push_back(d.convert_to<int>());
  }
  return cf_height(p);
}

double measured_fd_height(const MappingClassElement& m0, double spacing) {
  Elt m = m0;
  if (m.trace() < 0) m = Elt(-m.a, -m.b, -m.c, -m.d);
  const double t = static_cast<double>(m.trace());
  if (!(t > 2.0) || m.c == 0) throw DomainError("measured_fd_height: element is not hyperbolic");
  const double s = std::sqrt(t * t - 4.0);
  const double xi = (static_cast<double>(m.a - m.d) + s) / (2.0 * static_cast<double>(m.c));
  const double eta = (static_cast<double>(m.a - m.d) - s) / (2.0 * static_cast<double>(m.c));
  const HalfPlanePoint z0(0.5 * (xi + eta), 0.5 * std::abs(xi - eta));
  const GeodesicSegment period = geodesic_between(z0, apply(m, z0));
  auto height = [&](double u) { return reduce_to_fundamental_domain(period.point_at(u)).point.y; };
  const int n = std::max(1, static_cast<int>(std::ceil(period.length / spacing)));
  const double h = period.length / n;
  int best_i = 0;
  double best = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = height(h * i);
    if (y > best) {
      best = y;
      best_i = i;
    }
  }
  // Golden-section refinement around the best sample.
  double lo = std::max(0.0, h * (best_i - 1)), hi = std::min(period.length, h * (best_i + 1));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double u1 = hi - g * (hi - lo), u2 = lo + g * (hi - lo);
    if (height(u1) > height(u2)) hi = u2;
    else lo = u1;
  }
  return std::max(best, height(0.5 * (lo + hi)));
}

SubshiftSpec bounded_cf_subshift(int N) {
  if (N < 1) throw DomainError("bounded_cf_subshift: N >= 1");
  SubshiftSpec s;
  s.digit_bound = N;
  // Every digit may follow every digit.
  s.adjacency = Eigen::MatrixXd::Ones(N, N);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(s.adjacency);
  s.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  s.entropy = std::log(s.spectral_radius);
  return s;
}

BigInt periodic_points(const SubshiftSpec& s, int k) {
  const auto n = static_cast<std::size_t>(s.adjacency.rows());
  using Mat = std::vector<std::vector<BigInt>>;
  Mat a(n, std::vector<BigInt>(n)), p(n, std::vector<BigInt>(n));
  for (std::size_t i = 0; i < n; ++i) {
    p[i][i] = 1;
    for (std::size_t j = 0; j < n; ++j) a[i][j] = static_cast<long long>(std::llround(s.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
  }
  for (int step = 0; step < k; ++step) {
    Mat q(n, std::vector<BigInt>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) q[i][j] += p[i][l] * a[l][j];
    p = std::move(q);
  }
  BigInt tr = 0;
  for (std::size_t i = 0; i < n; ++i) tr += p[i][i];
  return tr;
}

namespace {

bool primitive_necklace(const std::vector<int>& w) {
  std::vector<int> rot = w;
  for (std::size_t s = 1; s < w.size(); ++s) {
    std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    if (rot <= w) return false;  // not the least rotation, or periodic
  }
  return true;
}

}  // namespace

std::vector<HorseshoeClass> closed_geodesics_in_horseshoe(int N, int k_max) {
  if (N < 1 || k_max < 1) throw DomainError("closed_geodesics_in_horseshoe: N, k_max >= 1");
  std::vector<HorseshoeClass> out;
  for (int k = 1; k <= k_max; ++k) {
    std::vector<int> w(static_cast<std::size_t>(k), 1);
    for (;;) {
      if (primitive_necklace(w)) {
        // Odd digit periods close up after two passes; even ones give a class
        // and its mirror (L and R exchanged).
        std::vector<int> runs = w;
        if (k % 2 == 1) runs.insert(runs.end(), w.begin(), w.end());
        out.push_back({make_class(runs), w});
        if (k % 2 == 0) {
          std::rotate(runs.begin(), runs.begin() + 1, runs.end());
          out.push_back({make_class(runs), w});
        }
      }
      int i = k - 1;
      while (i >= 0 && w[static_cast<std::size_t>(i)] == N) w[static_cast<std::size_t>(i--)] = 1;
      if (i < 0) break;
      ++w[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::vector<std::size_t> horseshoe_orbit_points(const std::vector<HorseshoeClass>& h, int k_max) {
  std::vector<std::set<std::vector<int>>> words(static_cast<std::size_t>(k_max) + 1);
  for (const auto& c : h) {
    const auto k = c.digit_period.size();
    if (k > static_cast<std::size_t>(k_max)) continue;
    std::vector<int> rot = c.digit_period;
    for (std::size_t s = 0; s < k; ++s) {
      words[k].insert(rot);
      std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    }
  }
  std::vector<std::size_t> out;
  for (const auto& w : words) out.push_back(w.size());
  return out;
}

double height_bound(int N) {
  const double n = N;
  const double x = 0.5 * (n + std::sqrt(n * n + 4.0 * n));
  return 0.5 * (x + x / (x + 1.0));
}

std::string christoffel_word(std::int64_t p, std::int64_t q) {
  if (p < 0 || q < 0 || (p == 0 && q == 0) || std::gcd(p, q) != 1) throw DomainError("christoffel_word: need coprime p, q >= 0");
  const std::int64_t n = p + q;
  std::string w;
  for (std::int64_t i = 1; i <= n; ++i) w.push_back((i * p) / n > ((i - 1) * p) / n ? 'B' : 'A');
  return w;
}

BigUnimodular torus_word_matrix(const std::string& word) {
  const BigUnimodular A(1, 1, 1, 2), B(1, -1, -1, 2);
  const BigUnimodular R(1, 1, 0, 1), L(1, 0, 1, 1);
  BigUnimodular m;
  for (char ch : word) {
    switch (ch) {
      case 'A': m = m * A; break;
      case 'B': m = m * B; break;
      case 'R': m = m * R; break;
      case 'L': m = m * L; break;
      default: throw DomainError("torus_word_matrix: letters are A, B, R, L");
    }
  }
  return m;
}

namespace {

struct Frac {
  std::int64_t p, q;
};

// Markov tree: the mediant word is the product of its Farey parents and
// tr(XY) = tr X tr Y - tr(X Y^-1), where X Y^-1 is conjugate to the parent
// the two neighbours share.
void fricke(const Frac& l, const Frac& r, const BigInt& tl, const BigInt& tr, const BigInt& td, int q_max,
            std::vector<SimpleClass>& out) {
  const Frac m{l.p + r.p, l.q + r.q};
  if (m.p > q_max || m.q > q_max) return;
  const BigInt tm = tl * tr - td;
  SimpleClass c;
  c.p = m.p;
  c.q = m.q;
  c.trace_fricke = tm;
  out.push_back(c);
  fricke(l, m, tl, tm, tr, q_max, out);
  fricke(m, r, tm, tr, tl, q_max, out);
}

void fill_matrix_data(SimpleClass& c) {
  const BigUnimodular m = torus_word_matrix(c.word);
  c.trace = m.trace();
  c.height = cf_height(fixed_point_cf_period(m));
}

}  // namespace

std::vector<SimpleClass> simple_geodesic_census(int q_max) {
  if (q_max < 1) throw DomainError("simple_geodesic_census: q_max >= 1");
  std::vector<SimpleClass> out;
  out.push_back({0, 1, "", 0, 3, 0.0, true});
  out.push_back({1, 0, "", 0, 3, 0.0, true});
  fricke({0, 1}, {1, 0}, 3, 3, 6, q_max, out);
  for (auto& c : out) {
    c.word = christoffel_word(c.p, c.q);
    fill_matrix_data(c);
  }
  std::sort(out.begin(), out.end(), [](const SimpleClass& x, const SimpleClass& y) {
    return x.p * y.q < y.p * x.q || (x.p * y.q == y.p * x.q && x.q > y.q);
  });
  return out;
}

std::vector<SimpleClass> non_simple_samples(int count) {
  std::vector<SimpleClass> out;
  for (int j = 1; j <= count; ++j) {
    SimpleClass c;
    c.word = std::string(static_cast<std::size_t>(6 + j), 'R') + std::string(static_cast<std::size_t>(j), 'L');
    c.simple = false;
    fill_matrix_data(c);
    c.trace_fricke = c.trace;
    out.push_back(c);
  }
  return out;
}

double RecurrenceStats::recurrent_fraction(double T) const {
  if (return_times.empty()) return 0.0;
  std::size_t n = 0;
  for (double t : return_times)
    if (t <= T) ++n;
  return static_cast<double>(n) / static_cast<double>(return_times.size());
}

namespace {

UnitTangent flow(const UnitTangent& v, double t) {
  if (t <= 0.0) return v;
  return reduce_tangent(geodesic_from(v, t).end_tangent());
}

}  // namespace

double first_return_time(const UnitTangent& v0, double delta, double T_horizon, double dt) {
  const UnitTangent v = reduce_tangent(v0);
  auto d_at = [&](const UnitTangent& from, double s) { return bundle_distance(flow(from, s), v); };
  // Entry time into the ball between from (outside) and from + h (inside).
  auto entry = [&](const UnitTangent& from, double t_from, double h) {
    double lo = 0.0, hi = h;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (d_at(from, mid) < delta ? hi : lo) = mid;
    }
    return t_from + hi;
  };
  bool left = false;
  UnitTangent prev = v, cur = v;
  double t = 0.0, d_prev = 0.0, d_cur = 0.0;
  while (t < T_horizon) {
    const UnitTangent next = flow(cur, dt);
    const double d_next = bundle_distance(next, v);
    if (!left) {
      left = d_next > delta;
    } else if (d_next < delta) {
      const double te = entry(cur, t, dt);
      return te <= T_horizon ? te : std::numeric_limits<double>::infinity();
    } else if (d_cur <= d_prev && d_cur <= d_next && d_cur < delta + 2.0 * dt) {
      // A dip between samples: minimize over [t - dt, t + dt] from prev.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = 0.0, hi = 2.0 * dt;
      for (int it = 0; it < 50; ++it) {
        const double u1 = hi - g * (hi - lo), u2 = lo + g * (hi - lo);
        if (d_at(prev, u1) < d_at(prev, u2)) hi = u2;
        else lo = u1;
      }
      const double s_min = 0.5 * (lo + hi);
      if (d_at(prev, s_min) < delta) {
        double a = 0.0, b = s_min;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (a + b);
          (d_at(prev, mid) < delta ? b : a) = mid;
        }
        const double tr = t - dt + b;
        if (tr <= T_horizon) return tr;
        return std::numeric_limits<double>::infinity();
      }
    }
    prev = cur;
    cur = next;
    d_prev = d_cur;
    d_cur = d_next;
    t += dt;
  }
  return std::numeric_limits<double>::infinity();
}

UnitTangent liouville_sample(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uu(0.0, 2.0 / std::sqrt(3.0)), ut(-kPi, kPi);
  for (;;) {
    const double x = ux(rng);
    const double u = uu(rng);
    const double th = ut(rng);
    if (u <= 0.0) continue;
    const double y = 1.0 / u;  // density 1/y^2 above sqrt(3)/2
    if (x * x + y * y < 1.0) continue;
    return {HalfPlanePoint(x, y), th};
  }
}

RecurrenceStats recurrence_mc(const MetricBackend& b, std::size_t samples, double T_horizon, double delta,
                              std::uint64_t seed, unsigned workers) {
  if (b.id() != BackendId::hyperbolic) throw DomainError("recurrence_mc: needs the modular surface (hyperbolic backend)");
  if (!(delta > 0.0) || !(T_horizon > 0.0)) throw DomainError("recurrence_mc: delta and T_horizon must be positive");
  RecurrenceStats st;
  st.delta = delta;
  st.T_horizon = T_horizon;
  st.return_times.assign(samples, std::numeric_limits<double>::infinity());
  std::vector<std::string> errs(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    try {
      st.return_times[i] = first_return_time(liouville_sample(seed, i), delta, T_horizon);
    } catch (const Error& e) {
      errs[i] = "sample " + std::to_string(i) + ": " + e.what();
    }
  });
  for (auto& e : errs)
    if (!e.empty()) st.errors.push_back(std::move(e));
  return st;
}

namespace {

using Gauss = boost::math::quadrature::gauss<double, 30>;

double area_density(const MetricBackend& b, double c1, double c2) {
  return std::sqrt(b.metric_at({c1, c2}).det());
}

}  // namespace

std::vector<CuspAreaRow> cusp_area_divergence(const MetricBackend& wp, double eps, const std::vector<double>& T_values) {
  if (!(eps > 0.0) || !wp.inside({eps, 0.0})) throw DomainError("cusp_area_divergence: eps outside the chart");
  std::vector<CuspAreaRow> rows;
  for (double T : T_values) {
    if (T < 0.0) throw DomainError("cusp_area_divergence: T must be nonnegative");
    CuspAreaRow r;
    r.T = T;
    r.closed_form = eps * T;
    if (T > 0.0) {
      r.area = Gauss::integrate(
          [&](double tau) { return Gauss::integrate([&](double ell) { return area_density(wp, ell, tau); }, 0.0, eps); },
          -T, T);
    }
    rows.push_back(r);
  }
  return rows;
}

double quotient_sector_area(const MetricBackend& wp, double eps) {
  if (!(eps > 0.0) || !wp.inside({eps, 0.0})) throw DomainError("quotient_sector_area: eps outside the chart");
  return Gauss::integrate(
      [&](double ell) { return Gauss::integrate([&](double tau) { return area_density(wp, ell, tau); }, 0.0, ell); }, 0.0,
      eps);
}

double fundamental_domain_area(const MetricBackend& hyp) {
  // y = 1/u maps the region above the arc to 0 < u < 1/sqrt(1 - x^2).
  return Gauss::integrate(
      [&](double x) {
        const double top = 1.0 / std::sqrt(1.0 - x * x);
        return Gauss::integrate([&](double u) { return area_density(hyp, x, 1.0 / u) / (u * u); }, 0.0, top);
      },
      -0.5, 0.5);
}

std::vector<int> run_key(const BigUnimodular& m) {
  const auto period = fixed_point_cf_period(m);
  std::vector<int> runs;
  for (const auto& d : period) {
    if (d > std::numeric_limits<int>::max()) throw Overflow("run_key: digit does not fit an int");
    runs.push_back(d.convert_to<int>());
  }
  if (runs.size() % 2 == 1) runs.insert(runs.end(), runs.begin(), runs.end());
  return canonical_cycle(runs);
}

void mark_simple(CensusTable& census, const std::vector<SimpleClass>& simple) {
  std::set<std::vector<int>> keys;
  for (const auto& c : simple) {
    if (!c.simple) continue;
    auto k = run_key(torus_word_matrix(c.word));
    keys.insert(k);
    std::reverse(k.begin(), k.end());
    keys.insert(canonical_cycle(k));
  }
  for (auto& c : census.classes)
    if (keys.count(c.cf_period)) c.simple = true;
}

}  // namespace cusped
