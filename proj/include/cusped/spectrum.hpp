#pragma once

// Closed geodesics on the modular surface: census by cyclic words in the
// positive generators R = [[1,1],[0,1]], L = [[1,0],[1,1]], growth fits,
// continued-fraction subshifts, cusp avoidance and recurrence.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cusped/hyp_geometry.hpp"
#include "cusped/metric_engine.hpp"
#include "cusped/unimodular.hpp"

namespace cusped {

inline constexpr double kShortestClosedLength = 1.9248473002384139;  // 2 arccosh(3/2)
// Weil-Petersson area of the moduli space of the once-punctured torus.
// Recorded only: the model metric here is not the global one.
inline constexpr double kWpModuliArea = 9.869604401089358 / 12.0;

double length_from_trace(double trace);

struct ClosedGeodesicClass {
  std::int64_t trace = 0;
  double length = 0.0;
  MappingClassElement representative;
  bool primitive = true;
  // Run lengths of L^{a1} R^{a2} ... L^{a_{2j-1}} R^{a_2j}, least rotation
  // among the even rotations.
  std::vector<int> cf_period;
  std::optional<bool> simple;

  std::size_t word_length() const;
  std::string word() const;
};

struct CensusTable {
  std::vector<ClosedGeodesicClass> classes;  // sorted by (trace, cf_period)
  double T_max = 0.0;

  // N(T): classes with length <= T.
  std::size_t count(double T) const;
};

// Run-length sequence -> canonical key (least even rotation).
std::vector<int> canonical_cycle(const std::vector<int>& runs);
MappingClassElement word_matrix(const std::vector<int>& runs);
// Primitive hyperbolic classes in PSL(2,Z) with length <= T_max; a class and
// its inverse are counted separately.
CensusTable enumerate_closed_geodesics(double T_max, unsigned workers = 1);

struct GrowthFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::vector<double> T, logN, residuals;
};

// Least squares of log N(T) on a grid of step dT over [T0, T1].
GrowthFit growth_rate_fit(const CensusTable& census, double T0, double T1, double dT = 0.05);

// Periodic continued fraction of a quadratic irrational (P + sqrt(D)) / Q.
struct QuadraticCf {
  std::vector<BigInt> preperiod;
  std::vector<BigInt> period;
};
QuadraticCf quadratic_cf(const BigInt& P, const BigInt& D, const BigInt& Q);
// Continued-fraction period of the attracting fixed point of a hyperbolic
// element (positive trace after sign normalization).
std::vector<BigInt> fixed_point_cf_period(const BigUnimodular& m);

// Fundamental-domain height of the closed geodesic whose bi-infinite
// continued-fraction digits repeat `period`: max over shifts of
// ([a_k; a_k+1, ...] + [0; a_k-1, a_k-2, ...]) / 2.
double cf_height(const std::vector<int>& period);
double cf_height(const std::vector<BigInt>& period);
// Same height measured directly: sample one period of the axis, reduce each
// point to the fundamental domain, refine the maximum.
double measured_fd_height(const MappingClassElement& m, double spacing = 0.005);

struct SubshiftSpec {
  int digit_bound = 1;
  Eigen::MatrixXd adjacency;
  double spectral_radius = 1.0;
  double entropy = 0.0;
};

SubshiftSpec bounded_cf_subshift(int N);
// Number of periodic points of period k: trace of A^k, exactly.
BigInt periodic_points(const SubshiftSpec& s, int k);

struct HorseshoeClass {
  ClosedGeodesicClass cls;
  std::vector<int> digit_period;  // minimal period of the digit sequence
};

// Classes whose digits are <= N with minimal digit period <= k_max.
std::vector<HorseshoeClass> closed_geodesics_in_horseshoe(int N, int k_max);
// Digit words of exact least period k realized by the returned classes.
std::vector<std::size_t> horseshoe_orbit_points(const std::vector<HorseshoeClass>& h, int k_max);
// (x + x/(x+1)) / 2 with x = [N; 1, N, 1, ...].
double height_bound(int N);

struct SimpleClass {
  std::int64_t p = 0, q = 1;  // slope p/q, q = 0 for 1/0
  std::string word;           // Christoffel word in A, B
  BigInt trace;               // from the matrix product
  BigInt trace_fricke;        // from the Markov tree recursion
  double height = 0.0;
  bool simple = true;
};

// Once-punctured torus as the commutator subgroup, A = [[1,1],[1,2]],
// B = [[1,-1],[-1,2]]. Slopes p/q with 0 <= p <= q_max, 1 <= q <= q_max in
// lowest terms, plus 1/0.
std::vector<SimpleClass> simple_geodesic_census(int q_max);
std::string christoffel_word(std::int64_t p, std::int64_t q);
BigUnimodular torus_word_matrix(const std::string& word);
// Non-simple comparison classes R^{6+j} L^j, j = 1..count.
std::vector<SimpleClass> non_simple_samples(int count);
// Census key (canonical run sequence) of a hyperbolic element.
std::vector<int> run_key(const BigUnimodular& m);
// Sets simple = true on census classes conjugate to a listed simple class or
// its inverse; others keep their flag.
void mark_simple(CensusTable& census, const std::vector<SimpleClass>& simple);

struct RecurrenceStats {
  double delta = 0.0;
  double T_horizon = 0.0;
  std::vector<double> return_times;  // +inf when no return by T_horizon
  std::vector<std::string> errors;

  double recurrent_fraction(double T) const;
};

// First return of the geodesic flow on the modular surface to the
// delta-ball (bundle metric) around the starting tangent.
double first_return_time(const UnitTangent& v, double delta, double T_horizon, double dt = 0.02);
// Tangents drawn from the Liouville measure on the fundamental domain.
RecurrenceStats recurrence_mc(const MetricBackend& b, std::size_t samples, double T_horizon, double delta,
                              std::uint64_t seed, unsigned workers = 1);
UnitTangent liouville_sample(std::uint64_t seed, std::uint64_t index);

struct CuspAreaRow {
  double T = 0.0;
  double area = 0.0;        // quadrature of sqrt(det g) over 0 < ell < eps, |tau| < T
  double closed_form = 0.0; // eps * T
};

std::vector<CuspAreaRow> cusp_area_divergence(const MetricBackend& wp, double eps, const std::vector<double>& T_values);
// Area of the quotient sector 0 < tau < ell, 0 < ell < eps by quadrature.
double quotient_sector_area(const MetricBackend& wp, double eps);
// Hyperbolic area of the standard fundamental domain by quadrature.
double fundamental_domain_area(const MetricBackend& hyp);

}  // namespace cusped
