#pragma once

// Infinite concatenations of singular geodesics on the modular surface and
// their chordal limits. Each piece lives in its own unimodular frame; the
// global picture is only ever touched through exact big-integer frames and
// multiprecision arithmetic.

#include <cstdint>
#include <optional>
#include <vector>

#include "cusped/concatenation.hpp"
#include "cusped/hyp_geometry.hpp"
#include "cusped/unimodular.hpp"

namespace cusped {

struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;  // q > 0, lowest terms
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

// Singular geodesics with rational (or infinite) endpoints. The first element
// is the imaginary axis 0 -> infinity; the rest are drawn by Stern-Brocot depth.
std::vector<CompleteGeodesic> singular_geodesic_sequence(std::size_t count, std::uint64_t seed);

struct ConcatenationPlan {
  std::vector<CompleteGeodesic> generator;
  double delta1 = 0.5;  // check horoball B(delta1) at height 1/delta1
  double delta2 = 0.2;  // splice horoball, height 1/delta2
  double eps0 = 0.1;
  // Piece whose neighbouring splices get the full budget eps0; splice j sits
  // between pieces j and j+1 and gets eps0 / d^2 with d its distance in
  // splices from this piece. The default 1 gives eps0 / j^2.
  std::size_t budget_center = 1;
  std::int64_t n_cap = 1000000;

  double epsilon(std::size_t splice) const;
  // Throws InvalidPlan.
  void validate() const;
};

ConcatenationPlan default_plan(std::size_t count, std::uint64_t seed);

// Piece k in its arrival frame: the geodesic runs up the vertical line
// x = a from the cusp a to infinity. In its departure frame it runs down the
// line x = b from infinity; departure_to_arrival maps one to the other.
struct DensePiece {
  CompleteGeodesic geodesic;
  Rational a, b;
  MappingClassElement departure_to_arrival;
  BigUnimodular frame;  // arrival frame -> global coordinates

  std::int64_t q() const { return a.q; }
  // Midpoint of the part of C on this piece, in the arrival frame.
  HalfPlanePoint midpoint() const;
};

// Concatenation C = gamma_1 * T gamma_2 * ... kept frame by frame. Window k
// runs from the midpoint of piece k to the midpoint of piece k+1 in the frame
// of piece k: up x = a_k, across the splice chord, down x = b_{k+1} + n_k.
struct FramedConcatenation {
  ConcatenationPlan plan;
  std::vector<DensePiece> pieces;
  std::vector<std::int64_t> twists;           // n_k per splice
  std::vector<double> splice_budget;          // eps per splice
  std::vector<Concatenation> windows;         // exact segments, frame of piece k
  std::vector<double> exterior_angles;        // two per splice
  double ea_total = 0.0;

  std::size_t size() const { return pieces.size(); }
  // Frame change from piece `from`'s arrival frame to piece `to`'s.
  BigUnimodular relative_frame(std::size_t from, std::size_t to) const;
};

// Uses the first N geodesics of the plan. Throws AngleBudgetInfeasible when a
// splice needs more than n_cap twists.
FramedConcatenation build_concatenation(const ConcatenationPlan& plan, std::size_t N);

// Geodesic from the midpoint of piece `first` to the midpoint of piece `last`.
struct Chord {
  std::size_t first = 0, last = 0;
};

struct DegenerationReport {
  bool pass = true;
  bool single_arcs = true;        // each cusp excursion meets B(delta1) once
  bool chord_crossings = true;    // chords cross the B(delta1/2) horocycle near C
  std::size_t stray_entries = 0;  // excursions of the pieces themselves, not at a splice
  std::size_t shared_balls = 0;   // horoballs met by two separate parts of C
  double max_crossing_distance = 0.0;
  double min_clearance = 0.0;     // delta2 minus the worst crossing distance
};

DegenerationReport check_no_degeneration(const FramedConcatenation& C, const std::vector<Chord>& chords = {});

struct ChordalLimit {
  std::size_t center = 0;
  std::vector<std::size_t> half_widths;         // n for chords p_{m-n} -> p_{m+n}
  std::vector<Chord> chords;
  std::vector<UnitTangent> midpoint_tangents;   // frame of the center piece
  std::vector<double> cauchy_gaps;              // between consecutive chords
  std::vector<double> terminal_window_max_F;    // window [p_{m+n-1}, p_{m+n}]
  std::vector<double> window_max_F;             // last chord, every window it spans
  bool cauchy = false;
  std::optional<UnitTangent> limit_tangent;
};

// Chords centred at piece `center` with the given half widths (at least three,
// increasing). Throws InsufficientData when they do not fit inside C.
ChordalLimit chordal_limit(const FramedConcatenation& C, std::size_t center, const std::vector<std::size_t>& half_widths,
                           double tol_limit = 1e-6);

// Unit tangents sampled along a chord, reduced to the fundamental domain.
std::vector<UnitTangent> chord_tangents(const FramedConcatenation& C, const Chord& chord, double spacing = 0.05);
// Unit tangents sampled along C itself and along the pieces' geodesics
// truncated at height `top` at their cusps (the splice height at C's free ends).
std::vector<UnitTangent> concatenation_tangents(const FramedConcatenation& C, double spacing = 0.05);
std::vector<UnitTangent> generator_tangents(const FramedConcatenation& C, double top, double spacing = 0.05);

// Product metric on the unit tangent bundle of the fundamental domain: base
// distance plus angle, minimized over the side pairings near the boundary.
double bundle_distance(const UnitTangent& u, const UnitTangent& v);

// Grid over the fundamental domain truncated at Im z <= max_height.
std::vector<UnitTangent> coverage_grid(double max_height = 4.0);
// Fraction of grid cells within eps of some tangent.
double density_coverage(const std::vector<UnitTangent>& tangents, double eps, double max_height = 4.0);
// Hausdorff distance between two tangent sets restricted to Im z <= max_height.
double bundle_hausdorff(const std::vector<UnitTangent>& a, const std::vector<UnitTangent>& b, double max_height);

}  // namespace cusped
