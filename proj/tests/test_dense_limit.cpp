#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cusped/concatenation.hpp"
#include "cusped/dense_limit.hpp"
#include "cusped/shadowing.hpp"

using namespace cusped;

namespace {

struct BigRational {
  BigInt p, q;
};

BigRational apply_big(const BigUnimodular& g, const BigRational& z) {
  return {g.a * z.p + g.b * z.q, g.c * z.p + g.d * z.q};
}

// |p1 q2 - p2 q1| is unchanged by unimodular maps.
BigInt pair_det(const BigRational& u, const BigRational& v) {
  return abs(u.p * v.q - u.q * v.p);
}

BigRational endpoint(const BoundaryPoint& b) {
  if (b.infinite) return {1, 0};
  return {b.rational->first, b.rational->second};
}

const FramedConcatenation& standard() {
  static const FramedConcatenation C = build_concatenation(default_plan(17, 1), 17);
  return C;
}

}  // namespace

TEST(SingularSequence, FirstIsImaginaryAxis) {
  const auto g = singular_geodesic_sequence(5, 3);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_FALSE(g[0].from.infinite);
  EXPECT_EQ(g[0].from.rational->first, 0);
  EXPECT_TRUE(g[0].to.infinite);
}

TEST(SingularSequence, RationalDistinctAndSeeded) {
  const auto g = singular_geodesic_sequence(30, 11);
  const auto h = singular_geodesic_sequence(30, 11);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_TRUE(g[i].singular());
    EXPECT_FALSE(g[i].from.infinite && g[i].to.infinite);
    if (!g[i].from.infinite && !g[i].to.infinite) EXPECT_NE(*g[i].from.rational, *g[i].to.rational);
    EXPECT_EQ(g[i].from.infinite, h[i].from.infinite);
    EXPECT_EQ(g[i].from.rational, h[i].from.rational);
  }
}

TEST(Plan, BudgetDefaultsToInverseSquares) {
  ConcatenationPlan p;
  EXPECT_DOUBLE_EQ(p.epsilon(1), 0.1);
  EXPECT_DOUBLE_EQ(p.epsilon(3), 0.1 / 9);
  p.budget_center = 5;
  EXPECT_DOUBLE_EQ(p.epsilon(4), 0.1);
  EXPECT_DOUBLE_EQ(p.epsilon(5), 0.1);
  EXPECT_DOUBLE_EQ(p.epsilon(7), 0.1 / 9);
}

TEST(Plan, RejectsBadParameters) {
  ConcatenationPlan p = default_plan(3, 1);
  p.delta2 = 0.3;
  EXPECT_THROW(p.validate(), InvalidPlan);
  p = default_plan(3, 1);
  p.eps0 = 0.2;  // two-sided: 2 * 0.2 * pi^2 / 6 > 1/2
  EXPECT_THROW(p.validate(), InvalidPlan);
  p = default_plan(3, 1);
  p.generator.push_back({BoundaryPoint::real(0.3), BoundaryPoint::infinity()});
  EXPECT_THROW(p.validate(), InvalidPlan);
  EXPECT_NO_THROW(default_plan(3, 1).validate());
}

TEST(Build, SingleGeodesicHasNoAngle) {
  const auto C = build_concatenation(default_plan(4, 2), 1);
  EXPECT_EQ(C.size(), 1u);
  EXPECT_TRUE(C.windows.empty());
  EXPECT_EQ(C.ea_total, 0.0);
}

TEST(Build, TwistIsMinimalForTheBudget) {
  const auto& C = standard();
  const double h = 1.0 / C.plan.delta2;
  for (std::size_t k = 0; k < C.twists.size(); ++k) {
    const double a = C.pieces[k].a.value(), b = C.pieces[k + 1].b.value();
    const double eps = C.splice_budget[k];
    const auto n = static_cast<double>(C.twists[k]);
    // Both corners of a splice are charged to its budget.
    EXPECT_LE(2 * std::atan(2 * h / (b + n - a)), eps + 1e-12);
    if (C.twists[k] > 1) EXPECT_GT(2 * std::atan(2 * h / (b + n - 1 - a)), eps - 1e-12);
    EXPECT_LE(C.exterior_angles[2 * k] + C.exterior_angles[2 * k + 1], eps + 1e-9);
  }
}

TEST(Build, BudgetSumBelowHalf) {
  const auto& C = standard();
  double sum = 0.0;
  for (double e : C.splice_budget) sum += e;
  EXPECT_LE(sum, 0.5);
}

TEST(Build, CapRaisesBudgetInfeasible) {
  ConcatenationPlan p = default_plan(5, 1);
  p.n_cap = 50;
  EXPECT_THROW(build_concatenation(p, 5), AngleBudgetInfeasible);
}

TEST(Build, WindowsJoinAcrossFrames) {
  const auto& C = standard();
  for (std::size_t k = 0; k + 1 < C.size(); ++k) {
    const auto& last = std::get<GeodesicSegment>(C.windows[k].segments.back().geom);
    const HalfPlanePoint next = apply(C.relative_frame(k, k + 1).cast<std::int64_t>(), last.end);
    EXPECT_NEAR(next.x, C.pieces[k + 1].midpoint().x, 1e-9);
    EXPECT_NEAR(next.y, C.pieces[k + 1].midpoint().y, 1e-9);
  }
}

TEST(Build, FramesPlaceEquivalentGeodesics) {
  // Global piece k runs from frame(a_k) to frame(infinity); it must be a
  // translate of generator k, so the invariant |p1 q2 - p2 q1| agrees.
  const auto& C = standard();
  for (std::size_t k = 0; k < C.size(); ++k) {
    const BigRational from = apply_big(C.pieces[k].frame, {C.pieces[k].a.p, C.pieces[k].a.q});
    const BigRational to = apply_big(C.pieces[k].frame, {1, 0});
    const auto& g = C.pieces[k].geodesic;
    EXPECT_EQ(pair_det(from, to), pair_det(endpoint(g.from), endpoint(g.to))) << k;
  }
  // The first piece is the generator itself.
  const BigRational to0 = apply_big(C.pieces[0].frame, {1, 0});
  EXPECT_EQ(to0.q, 0);
}

TEST(Build, AgreesWithTwistConcatenate) {
  const auto& C = standard();
  const MetricBackend hyp = MetricBackend::hyperbolic();
  for (std::size_t k : {6u, 7u, 8u}) {
    const auto& p = C.pieces[k];
    const auto& q = C.pieces[k + 1];
    const CuspRay r1{{p.a.value(), 1.0 / static_cast<double>(p.q())}};
    const CuspRay r2{{q.b.value(), 1.0 / static_cast<double>(q.q())}};
    const TwistConcatenation tc = twist_concatenate(hyp, r1, r2, C.plan.delta2, C.twists[k]);
    ASSERT_EQ(tc.concat.exterior_angles.size(), 2u);
    EXPECT_NEAR(tc.concat.exterior_angles[0], C.exterior_angles[2 * k], 1e-6);
    EXPECT_NEAR(tc.concat.exterior_angles[1], C.exterior_angles[2 * k + 1], 1e-6);
  }
}

TEST(Chordal, GapsShrinkAndWindowsStraighten) {
  const auto& C = standard();
  const ChordalLimit L = chordal_limit(C, 8, {2, 4, 8});
  ASSERT_EQ(L.cauchy_gaps.size(), 2u);
  EXPECT_LE(L.cauchy_gaps[1], 0.5 * L.cauchy_gaps[0]);
  EXPECT_TRUE(L.cauchy);
  ASSERT_TRUE(L.limit_tangent.has_value());
  EXPECT_GT(L.terminal_window_max_F[0], L.terminal_window_max_F[1]);
  EXPECT_GT(L.terminal_window_max_F[1], L.terminal_window_max_F[2]);
  // The limit passes by the centre midpoint within the shadowing bound.
  EXPECT_LT(dist(L.limit_tangent->base, C.pieces[8].midpoint()), bound_from_ea(C.ea_total));
}

TEST(Chordal, ChordsShadowWithinBound) {
  const auto& C = standard();
  const ChordalLimit L = chordal_limit(C, 8, {2, 4, 8});
  const double bound = std::max(C.plan.delta2, bound_from_ea(C.ea_total));
  for (double f : L.window_max_F) EXPECT_LE(f, bound);
  // F -> 0 toward both ends of the last chord.
  EXPECT_LT(L.window_max_F.front(), L.window_max_F[L.window_max_F.size() / 2]);
  EXPECT_LT(L.window_max_F.back(), L.window_max_F[L.window_max_F.size() / 2]);
}

TEST(Chordal, RejectsTooFewOrTooWide) {
  const auto& C = standard();
  EXPECT_THROW(chordal_limit(C, 8, {2, 4}), InsufficientData);
  EXPECT_THROW(chordal_limit(C, 8, {2, 4, 9}), InsufficientData);
  EXPECT_THROW(chordal_limit(C, 3, {1, 2, 4}), InsufficientData);
}

TEST(Degeneration, StandardPlanPasses) {
  const auto& C = standard();
  const ChordalLimit L = chordal_limit(C, 8, {2, 4, 8});
  const DegenerationReport r = check_no_degeneration(C, L.chords);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.shared_balls, 0u);
  EXPECT_GT(r.min_clearance, 0.0);
}

TEST(Coverage, EmptyAndFullGrid) {
  EXPECT_EQ(density_coverage({}, 0.3), 0.0);
  EXPECT_EQ(density_coverage(coverage_grid(), 0.3), 1.0);
}

TEST(Coverage, MonotoneInSamples) {
  // Adding tangents never uncovers a cell.
  const auto ts = concatenation_tangents(standard());
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<UnitTangent> sub;
    std::bernoulli_distribution keep(0.3);
    for (const auto& t : ts)
      if (keep(rng)) sub.push_back(t);
    std::vector<UnitTangent> more = sub;
    for (const auto& t : ts)
      if (keep(rng)) more.push_back(t);
    EXPECT_LE(density_coverage(sub, 0.3), density_coverage(more, 0.3));
  }
}

TEST(Coverage, GrowsAlongNestedChords) {
  const auto& C = standard();
  double prev = 0.0;
  for (std::size_t n : {2u, 4u, 6u}) {
    const double c = density_coverage(chord_tangents(C, {8 - n, 8 + n}), 0.3);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(BundleDistance, SidePairingsIdentify) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0.9, 3.0), ut(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const UnitTangent v(HalfPlanePoint(ux(rng), uy(rng)), ut(rng));
    EXPECT_NEAR(bundle_distance(v, v), 0.0, 1e-12);
    const UnitTangent w = apply(MappingClassElement::translation(1), v);
    EXPECT_NEAR(bundle_distance(w, v), 0.0, 1e-9);
  }
  // Points on the unit circle are paired by z -> -1/z.
  const UnitTangent s(HalfPlanePoint(0.3, std::sqrt(1 - 0.09)), 0.4);
  EXPECT_NEAR(bundle_distance(apply(MappingClassElement::inversion(), s), s), 0.0, 1e-9);
}

TEST(Accumulation, HausdorffShrinksWithSmallerBudgets) {
  double prev = HUGE_VAL;
  for (double eps0 : {0.1, 0.03, 0.01}) {
    ConcatenationPlan p = default_plan(7, 4);
    p.eps0 = eps0;
    const auto C = build_concatenation(p, 7);
    const double h = bundle_hausdorff(concatenation_tangents(C), generator_tangents(C, 20.0), 20.0);
    EXPECT_LT(h, prev) << eps0;
    prev = h;
  }
}

TEST(Property, RandomPlansBehave) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const auto C = build_concatenation(default_plan(9, seed), 9);
    const ChordalLimit L = chordal_limit(C, 4, {1, 2, 4});
    EXPECT_TRUE(L.cauchy) << seed;
    EXPECT_TRUE(check_no_degeneration(C, L.chords).pass) << seed;
    EXPECT_LE(C.ea_total, 0.5);
  }
}
