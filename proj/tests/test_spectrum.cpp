#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include "cusped/dense_limit.hpp"
#include "cusped/spectrum.hpp"

using namespace cusped;

namespace {

// Indefinite binary forms a x^2 + b x y + c y^2 of non-square discriminant D,
// Gauss reduction and the rho operator, in plain integers.
struct Form {
  std::int64_t a, b, c;
  auto operator<=>(const Form&) const = default;
};

bool below_root(std::int64_t r, std::int64_t D) { return r < 0 || r * r < D; }
bool above_root(std::int64_t r, std::int64_t D) { return r > 0 && r * r > D; }

bool reduced(const Form& f, std::int64_t D) {
  const std::int64_t a2 = 2 * std::abs(f.a);
  return f.b > 0 && below_root(f.b, D) && above_root(a2 + f.b, D) && below_root(a2 - f.b, D);
}

std::int64_t mod(std::int64_t x, std::int64_t m) { return ((x % m) + m) % m; }

Form rho(const Form& f, std::int64_t D) {
  const std::int64_t c2 = 2 * std::abs(f.c);
  std::int64_t r = mod(-f.b, c2);
  if (above_root(std::abs(f.c), D)) {
    if (r > std::abs(f.c)) r -= c2;
  } else {
    // largest r = -b (mod 2|c|) below sqrt(D)
    while (below_root(r + c2, D)) r += c2;
    while (!below_root(r, D)) r -= c2;
  }
  return {f.c, r, (r * r - D) / (4 * f.c)};
}

Form cycle_key(Form f, std::int64_t D) {
  for (int i = 0; i < 1000 && !reduced(f, D); ++i) f = rho(f, D);
  EXPECT_TRUE(reduced(f, D));
  Form best = f;
  for (Form g = rho(f, D); g != f; g = rho(g, D)) best = std::min(best, g);
  return best;
}

// Proper classes of forms of discriminant t^2 - 4 = conjugacy classes of
// trace t in PSL(2, Z).
std::size_t form_classes(std::int64_t t) {
  const std::int64_t D = t * t - 4;
  std::set<Form> seen;
  std::size_t cycles = 0;
  for (std::int64_t b = 1; below_root(b, D); ++b) {
    if ((b * b - D) % 4 != 0) continue;
    const std::int64_t ac = (b * b - D) / 4;
    for (std::int64_t a = 1; a <= -ac; ++a) {
      if (ac % a != 0) continue;
      for (std::int64_t s : {1, -1}) {
        const Form f{s * a, b, ac / (s * a)};
        if (!reduced(f, D) || seen.count(f)) continue;
        ++cycles;
        Form g = f;
        do {
          seen.insert(g);
          g = rho(g, D);
        } while (g != f);
      }
    }
  }
  return cycles;
}

// Primitive classes per trace: remove k-th powers, tr(N^k) by Chebyshev.
std::map<std::int64_t, std::size_t> primitive_by_trace(std::int64_t t_max) {
  std::map<std::int64_t, std::size_t> prim;
  for (std::int64_t t = 3; t <= t_max; ++t) {
    std::size_t n = form_classes(t);
    for (std::int64_t s = 3; s < t; ++s) {
      std::int64_t u0 = 2, u1 = s;
      for (int k = 2; u1 < t; ++k) {
        const std::int64_t u2 = s * u1 - u0;
        u0 = u1;
        u1 = u2;
        if (u1 == t) n -= prim[s];
      }
    }
    prim[t] = n;
  }
  return prim;
}

Form matrix_form(const MappingClassElement& m) { return {m.c, m.d - m.a, -m.b}; }

std::tuple<std::int64_t, Form> conjugacy_key(MappingClassElement m) {
  if (m.trace() < 0) m = MappingClassElement(-m.a, -m.b, -m.c, -m.d);
  const std::int64_t t = m.trace();
  return {t, cycle_key(matrix_form(m), t * t - 4)};
}

std::string least_rotation(const std::string& w) {
  std::string best = w, r = w;
  for (std::size_t i = 1; i < w.size(); ++i) {
    std::rotate(r.begin(), r.begin() + 1, r.end());
    best = std::min(best, r);
  }
  return best;
}

bool primitive_string(const std::string& w) {
  for (std::size_t p = 1; p < w.size(); ++p)
    if (w.size() % p == 0 && w.substr(p) + w.substr(0, p) == w) return false;
  return true;
}

MappingClassElement string_matrix(const std::string& w) {
  MappingClassElement m;
  for (char ch : w) m = m * (ch == 'R' ? MappingClassElement(1, 1, 0, 1) : MappingClassElement(1, 0, 1, 1));
  return m;
}

const CensusTable& census12() {
  static const CensusTable c = enumerate_closed_geodesics(12.0, 4);
  return c;
}

}  // namespace

TEST(Census, ShortestIsTraceThree) {
  const auto c = enumerate_closed_geodesics(1.93);
  ASSERT_EQ(c.classes.size(), 1u);
  EXPECT_EQ(c.classes[0].trace, 3);
  EXPECT_NEAR(c.classes[0].length, 2.0 * std::acosh(1.5), 1e-9);
  EXPECT_NEAR(kShortestClosedLength, 2.0 * std::acosh(1.5), 1e-15);
}

TEST(Census, BelowShortestIsEmpty) {
  EXPECT_TRUE(enumerate_closed_geodesics(1.0).classes.empty());
  EXPECT_EQ(census12().count(1.9), 0u);
}

TEST(Census, LengthMatchesRecomputedTrace) {
  for (const auto& k : census12().classes) {
    const auto tr = std::abs(k.representative.trace());
    EXPECT_EQ(tr, k.trace);
    EXPECT_GT(tr, 2);
    EXPECT_LE(std::abs(k.length - 2.0 * std::acosh(static_cast<double>(tr) / 2.0)), 1e-12);
    EXPECT_FALSE(k.cf_period.empty());
  }
}

TEST(Census, CountsPerTraceMatchReducedForms) {
  const auto& c = census12();
  const std::int64_t t_max = static_cast<std::int64_t>(std::floor(2.0 * std::cosh(6.0)));
  const auto prim = primitive_by_trace(t_max);
  std::map<std::int64_t, std::size_t> got;
  for (const auto& k : c.classes) ++got[k.trace];
  for (std::int64_t t = 3; t <= t_max; ++t) EXPECT_EQ(got[t], prim.at(t)) << "trace " << t;
}

TEST(Census, WordsUpToEightMatchBruteForce) {
  std::set<std::tuple<std::int64_t, Form>> brute;
  for (int len = 2; len <= 8; ++len)
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::string w;
      for (int i = 0; i < len; ++i) w.push_back((bits >> i) & 1 ? 'R' : 'L');
      if (w.find('R') == std::string::npos || w.find('L') == std::string::npos || !primitive_string(w)) continue;
      brute.insert(conjugacy_key(string_matrix(w)));
    }
  std::set<std::tuple<std::int64_t, Form>> census;
  std::set<std::string> words;
  for (const auto& k : census12().classes) {
    if (k.word_length() > 8) continue;
    census.insert(conjugacy_key(k.representative));
    EXPECT_TRUE(words.insert(least_rotation(k.word())).second);
    EXPECT_EQ(conjugacy_key(string_matrix(k.word())), conjugacy_key(k.representative));
  }
  EXPECT_EQ(census, brute);
  EXPECT_EQ(words.size(), brute.size());
}

TEST(Census, NoDuplicateKeysAndMonotoneCount) {
  std::set<std::vector<int>> keys;
  for (const auto& k : census12().classes) {
    EXPECT_TRUE(keys.insert(k.cf_period).second);
    EXPECT_EQ(canonical_cycle(k.cf_period), k.cf_period);
  }
  std::size_t prev = 0;
  for (double T = 0.0; T <= 12.0; T += 0.1) {
    EXPECT_GE(census12().count(T), prev);
    prev = census12().count(T);
  }
}

TEST(Census, RotationsShareKey) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> runs(2 * (1 + rng() % 4));
    for (auto& r : runs) r = 1 + static_cast<int>(rng() % 5);
    const auto key = canonical_cycle(runs);
    auto rot = runs;
    std::rotate(rot.begin(), rot.begin() + 2 * static_cast<long>(rng() % (runs.size() / 2)), rot.end());
    EXPECT_EQ(canonical_cycle(rot), key);
    EXPECT_EQ(word_matrix(key).trace(), word_matrix(runs).trace());
  }
}

TEST(Census, RunKeyOfRepresentativeIsClassKey) {
  for (const auto& k : census12().classes) {
    if (k.trace > 200) continue;
    const auto& m = k.representative;
    EXPECT_EQ(run_key(BigUnimodular(m.a, m.b, m.c, m.d)), k.cf_period);
  }
}

TEST(Census, SimpleMarksAreMarkovTraces) {
  auto c = enumerate_closed_geodesics(9.0);
  mark_simple(c, simple_geodesic_census(10));
  const std::set<std::int64_t> markov_traces{3, 6, 15, 39, 87, 102};
  std::size_t marked = 0;
  for (const auto& k : c.classes) {
    if (!k.simple) continue;
    ++marked;
    EXPECT_TRUE(markov_traces.count(k.trace)) << k.trace;
  }
  // one class per trace for 3 and 6, a pair of mutually inverse classes beyond
  EXPECT_GE(marked, 4u);
}

TEST(Census, ParallelMatchesSerial) {
  const auto a = enumerate_closed_geodesics(9.0, 1);
  const auto b = enumerate_closed_geodesics(9.0, 4);
  ASSERT_EQ(a.classes.size(), b.classes.size());
  for (std::size_t i = 0; i < a.classes.size(); ++i) EXPECT_EQ(a.classes[i].cf_period, b.classes[i].cf_period);
}

TEST(Growth, SlopeNearOneOnEightToTwelve) {
  const auto f = growth_rate_fit(census12(), 8.0, 12.0);
  EXPECT_NEAR(f.slope, 1.0, 0.15);
  EXPECT_GT(f.stderr_slope, 0.0);
  EXPECT_EQ(f.residuals.size(), f.T.size());
}

TEST(Growth, DoublingWindowStableWithinStderr) {
  const auto c = enumerate_closed_geodesics(16.0, 4);
  const auto f8 = growth_rate_fit(c, 4.0, 8.0);
  const auto f16 = growth_rate_fit(c, 4.0, 16.0);
  EXPECT_LE(std::abs(f8.slope - f16.slope), f8.stderr_slope);
}

TEST(Growth, SingleClassIsInsufficient) {
  EXPECT_THROW(growth_rate_fit(enumerate_closed_geodesics(1.93), 1.0, 1.93), InsufficientData);
}

TEST(Subshift, EntropyMatchesPowerIteration) {
  for (int N = 1; N <= 6; ++N) {
    const auto s = bounded_cf_subshift(N);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(N);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd w = s.adjacency * v;
      lambda = w.norm() / v.norm();
      v = w / w.norm();
    }
    EXPECT_NEAR(s.spectral_radius, lambda, 1e-10);
    EXPECT_NEAR(s.entropy, std::log(lambda), 1e-10);
  }
  EXPECT_NEAR(bounded_cf_subshift(2).entropy, std::log(2.0), 1e-10);
  EXPECT_EQ(bounded_cf_subshift(1).entropy, 0.0);
}

TEST(Subshift, EntropyStrictlyIncreasing) {
  for (int N = 1; N < 6; ++N) EXPECT_LT(bounded_cf_subshift(N).entropy, bounded_cf_subshift(N + 1).entropy);
}

TEST(Subshift, PeriodicPointsMatchWordCountsAndEntropy) {
  for (int N = 1; N <= 4; ++N) {
    const auto s = bounded_cf_subshift(N);
    for (int k = 1; k <= 6; ++k) {
      // explicit count of digit words w with w = shift^k(w): all N^k words
      std::size_t words = 1;
      for (int i = 0; i < k; ++i) words *= static_cast<std::size_t>(N);
      EXPECT_EQ(periodic_points(s, k), BigInt(words));
    }
    const double rate = std::log(periodic_points(s, 16).convert_to<double>()) / 16.0;
    EXPECT_LE(std::abs(rate - s.entropy), 0.05);
  }
}

TEST(Horseshoe, GoldenOnlyForDigitOne) {
  const auto h = closed_geodesics_in_horseshoe(1, 12);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].cls.trace, 3);
  EXPECT_EQ(h[0].digit_period, std::vector<int>{1});
}

TEST(Horseshoe, OrbitGrowthMatchesEntropy) {
  const auto h = closed_geodesics_in_horseshoe(2, 16);
  const auto p = horseshoe_orbit_points(h, 16);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 8; k <= 16; ++k, ++n) {
    const double y = std::log(static_cast<double>(p[static_cast<std::size_t>(k)]));
    sx += k;
    sy += y;
    sxx += k * k;
    sxy += k * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_LE(std::abs(slope / std::log(2.0) - 1.0), 0.05);
}

TEST(Horseshoe, ClassesAreDistinctAndUseBoundedDigits) {
  const auto h = closed_geodesics_in_horseshoe(3, 7);
  std::set<std::vector<int>> keys;
  for (const auto& c : h) {
    EXPECT_TRUE(keys.insert(c.cls.cf_period).second);
    for (int d : c.cls.cf_period) EXPECT_LE(d, 3);
  }
}

TEST(Heights, BoundIncreasing) {
  for (int N = 1; N < 10; ++N) EXPECT_LT(height_bound(N), height_bound(N + 1));
  EXPECT_NEAR(height_bound(1), std::sqrt(5.0) / 2.0, 1e-14);
}

TEST(Heights, HorseshoeAxesStayBelowBound) {
  for (int N = 1; N <= 3; ++N) {
    const auto h = closed_geodesics_in_horseshoe(N, N == 1 ? 4 : 6 - N);
    double worst = 0.0;
    for (const auto& c : h) {
      const double measured = measured_fd_height(c.cls.representative);
      EXPECT_LE(measured, height_bound(N) + 1e-9);
      EXPECT_NEAR(cf_height(c.cls.cf_period), measured, 1e-6);
      worst = std::max(worst, measured);
    }
    EXPECT_GT(worst, 0.9 * height_bound(N));
  }
}

TEST(Heights, QuadraticCfOfSqrtTwo) {
  const auto cf = quadratic_cf(0, 2, 1);
  EXPECT_EQ(cf.preperiod, std::vector<BigInt>{1});
  EXPECT_EQ(cf.period, std::vector<BigInt>{2});
}

TEST(Heights, CfHeightMatchesMeasuredOnRandomWords) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> runs(2 * (1 + rng() % 3));
    for (auto& r : runs) r = 1 + static_cast<int>(rng() % 6);
    const auto m = word_matrix(runs);
    EXPECT_NEAR(cf_height(runs), measured_fd_height(m), 1e-6);
    const auto period = fixed_point_cf_period(BigUnimodular(m.a, m.b, m.c, m.d));
    EXPECT_NEAR(cf_height(period), cf_height(runs), 1e-12);
  }
}

TEST(SimpleCensus, GeneratorsHaveEqualMinimalTrace) {
  const auto s = simple_geodesic_census(5);
  BigInt t01, t10, tmin = 1000;
  for (const auto& c : s) {
    if (c.p == 0 && c.q == 1) t01 = c.trace;
    if (c.p == 1 && c.q == 0) t10 = c.trace;
    tmin = std::min(tmin, c.trace);
  }
  EXPECT_EQ(t01, 3);
  EXPECT_EQ(t10, 3);
  EXPECT_EQ(tmin, 3);
}

TEST(SimpleCensus, FrickeTraceMatchesMatrixProduct) {
  for (const auto& c : simple_geodesic_census(30)) {
    EXPECT_EQ(c.trace, c.trace_fricke) << c.p << "/" << c.q;
    EXPECT_EQ(c.word.size(), static_cast<std::size_t>(c.p + c.q));
  }
}

TEST(SimpleCensus, TracesAreThreeTimesMarkovNumbers) {
  std::set<BigInt> markov;
  for (const auto& c : simple_geodesic_census(12)) {
    ASSERT_EQ(c.trace % 3, 0);
    markov.insert(c.trace / 3);
  }
  for (int m : {1, 2, 5, 13, 29, 34, 89, 169, 194, 233, 433, 610}) EXPECT_TRUE(markov.count(m)) << m;
}

TEST(SimpleCensus, UniformHeightBoundAndNonSimpleExceed) {
  const auto s = simple_geodesic_census(30);
  double h_star = 0.0;
  for (const auto& c : s) {
    // Markov axis: trace 3m, top at sqrt(9 m^2 - 4) / (2 m)
    const double m = (c.trace / 3).convert_to<double>();
    EXPECT_NEAR(c.height, std::sqrt(9.0 * m * m - 4.0) / (2.0 * m), 1e-12);
    h_star = std::max(h_star, c.height);
  }
  EXPECT_LE(h_star, 1.5 + 1e-12);  // sup of the Markov heights is 3/2
  const auto ns = non_simple_samples(10);
  ASSERT_EQ(ns.size(), 10u);
  for (const auto& c : ns) {
    EXPECT_FALSE(c.simple);
    EXPECT_GT(c.height, h_star);
  }
}

TEST(SimpleCensus, CountGrowsQuadratically) {
  auto coprime_pairs = [](int q) {
    std::size_t n = 1;  // 1/0
    for (int b = 1; b <= q; ++b)
      for (int a = 0; a <= q; ++a)
        if (std::gcd(a, b) == 1) ++n;
    return n;
  };
  for (int q : {5, 10, 20, 30}) EXPECT_EQ(simple_geodesic_census(q).size(), coprime_pairs(q));
  const double r = static_cast<double>(simple_geodesic_census(30).size()) / simple_geodesic_census(15).size();
  EXPECT_NEAR(std::log(r) / std::log(2.0), 2.0, 0.15);
}

TEST(SimpleCensus, ChristoffelWords) {
  EXPECT_EQ(christoffel_word(0, 1), "A");
  EXPECT_EQ(christoffel_word(1, 0), "B");
  EXPECT_EQ(christoffel_word(2, 3), "AABAB");
  EXPECT_THROW(christoffel_word(2, 4), DomainError);
}

TEST(Recurrence, TraceThreeOrbitReturnsAtItsLength) {
  // axis of [[2,1],[1,1]]: fixed points (1 -+ sqrt 5)/2, top at (1/2, sqrt 5/2)
  const UnitTangent v{HalfPlanePoint(0.5, std::sqrt(5.0) / 2.0), -std::numbers::pi / 2.0};
  EXPECT_NEAR(first_return_time(v, 1e-3, 5.0), kShortestClosedLength, 1e-3);
  const UnitTangent w{HalfPlanePoint(0.5, std::sqrt(5.0) / 2.0), std::numbers::pi / 2.0};
  EXPECT_NEAR(first_return_time(w, 1e-3, 5.0), kShortestClosedLength, 1e-3);
}

TEST(Recurrence, FractionMonotoneAndReturnsGenuine) {
  const auto hyp = MetricBackend::hyperbolic();
  const auto st = recurrence_mc(hyp, 60, 20.0, 0.2, 3, 4);
  EXPECT_TRUE(st.errors.empty());
  double prev = 0.0;
  for (double T = 0.0; T <= 20.0; T += 0.5) {
    EXPECT_GE(st.recurrent_fraction(T), prev);
    prev = st.recurrent_fraction(T);
  }
  for (std::size_t i = 0; i < st.return_times.size(); ++i) {
    const double t = st.return_times[i];
    if (!std::isfinite(t)) continue;
    const UnitTangent v = reduce_tangent(liouville_sample(3, i));
    const UnitTangent w = reduce_tangent(geodesic_from(v, t + 1e-7).end_tangent());
    EXPECT_LE(bundle_distance(v, w), 0.2 + 1e-4);
  }
}

TEST(Recurrence, SameSeedSameStatistics) {
  const auto hyp = MetricBackend::hyperbolic();
  const auto a = recurrence_mc(hyp, 20, 10.0, 0.2, 9, 1);
  const auto b = recurrence_mc(hyp, 20, 10.0, 0.2, 9, 3);
  EXPECT_EQ(a.return_times, b.return_times);
}

TEST(Recurrence, EmptyAndInvalid) {
  const auto hyp = MetricBackend::hyperbolic();
  const auto st = recurrence_mc(hyp, 0, 10.0, 0.2, 1);
  EXPECT_TRUE(st.return_times.empty());
  EXPECT_EQ(st.recurrent_fraction(10.0), 0.0);
  EXPECT_THROW(recurrence_mc(MetricBackend::wp_cusp_model(), 5, 10.0, 0.2, 1), DomainError);
}

TEST(Recurrence, LiouvilleSamplesInFundamentalDomain) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto v = liouville_sample(2, i);
    EXPECT_LE(std::abs(v.base.x), 0.5);
    EXPECT_GE(v.base.x * v.base.x + v.base.y * v.base.y, 1.0);
  }
}

TEST(CuspArea, LinearInTwistWindow) {
  const auto wp = MetricBackend::wp_cusp_model();
  const auto rows = cusp_area_divergence(wp, 0.1, {0.0, 1.0, 10.0, 40.0});
  EXPECT_EQ(rows[0].area, 0.0);
  EXPECT_NEAR(rows[2].area, 1.0, 1e-9);
  for (const auto& r : rows) EXPECT_NEAR(r.area, 0.1 * r.T, 1e-9 * (1.0 + r.T));
  EXPECT_NEAR(quotient_sector_area(wp, 0.1), 0.0025, 1e-12);
  EXPECT_THROW(cusp_area_divergence(wp, -1.0, {1.0}), DomainError);
}

TEST(CuspArea, FundamentalDomainArea) {
  EXPECT_NEAR(fundamental_domain_area(MetricBackend::hyperbolic()), std::numbers::pi / 3.0, 1e-6);
  EXPECT_NEAR(kWpModuliArea, std::numbers::pi * std::numbers::pi / 12.0, 1e-15);
}
