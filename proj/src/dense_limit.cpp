#include "cusped/dense_limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include <boost/multiprecision/mpfr.hpp>

#include "cusped/metric_engine.hpp"
#include "cusped/shadowing.hpp"

namespace cusped {

namespace {

constexpr double kPi = std::numbers::pi;
using Elt = MappingClassElement;

std::int64_t floor_div(std::int64_t p, std::int64_t q) {
  std::int64_t f = p / q;
  if ((p % q != 0) && ((p < 0) != (q < 0))) --f;
  return f;
}

// Unimodular map sending infinity to the cusp u.
Elt cusp_frame(const BoundaryPoint& u) {
  if (u.infinite) return Elt::identity();
  const auto [p, q] = *u.rational;
  // Extended Euclid: p*s - q*r = 1.
  std::int64_t old_r = p, r = q, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    const std::int64_t k = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - k * r);
    std::tie(old_s, s) = std::make_pair(s, old_s - k * s);
    std::tie(old_t, t) = std::make_pair(t, old_t - k * t);
  }
  // p*old_s + q*old_t = old_r = +-1
  const std::int64_t sg = old_r;
  return Elt(p, -old_t * sg, q, old_s * sg);
}

Rational to_rational(const BoundaryPoint& b) {
  if (b.infinite || !b.rational) throw InvalidPlan("singular geodesic endpoint is not a finite rational");
  return {b.rational->first, b.rational->second};
}

struct NormalForm {
  Rational a, b;
  Elt d;  // departure frame -> arrival frame
  Elt w;  // original coordinates -> arrival frame
};

NormalForm normal_form(const CompleteGeodesic& g) {
  if (!g.singular()) throw InvalidPlan("generator geodesic is not singular");
  Elt r = cusp_frame(g.from);
  Rational b = to_rational(apply(r.inverse(), g.to));
  const std::int64_t tb = floor_div(b.p, b.q);
  r = r * Elt::translation(tb);
  b.p -= tb * b.q;
  Elt w = cusp_frame(g.to).inverse();
  Rational a = to_rational(apply(w, g.from));
  const std::int64_t ta = floor_div(a.p, a.q);
  w = Elt::translation(-ta) * w;
  a.p -= ta * a.q;
  return {a, b, w * r, w};
}

BoundaryPoint stern_brocot(std::mt19937_64& rng, int depth) {
  std::int64_t lp = 0, lq = 1, rp = 1, rq = 0;
  std::int64_t mp = 1, mq = 1;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < depth; ++i) {
    if (coin(rng)) {
      lp = mp;
      lq = mq;
    } else {
      rp = mp;
      rq = mq;
    }
    mp = lp + rp;
    mq = lq + rq;
  }
  return BoundaryPoint::from_rational(coin(rng) ? mp : -mp, mq);
}

}  // namespace

std::vector<CompleteGeodesic> singular_geodesic_sequence(std::size_t count, std::uint64_t seed) {
  std::vector<CompleteGeodesic> out;
  if (count == 0) return out;
  out.push_back({BoundaryPoint::from_rational(0, 1), BoundaryPoint::infinity()});
  std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>> seen;
  const NormalForm f0 = normal_form(out.front());
  seen.insert({f0.a.p, f0.a.q, f0.b.p, f0.b.q});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> depth(0, 5);
  std::bernoulli_distribution at_infinity(0.25);
  int attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100000) throw NonTermination("singular_geodesic_sequence: cannot find distinct geodesics");
    CompleteGeodesic g{at_infinity(rng) ? BoundaryPoint::infinity() : stern_brocot(rng, depth(rng)),
                       at_infinity(rng) ? BoundaryPoint::infinity() : stern_brocot(rng, depth(rng))};
    if (g.from.infinite && g.to.infinite) continue;
    if (!g.from.infinite && !g.to.infinite && *g.from.rational == *g.to.rational) continue;
    // Distinct modulo the modular group, so that each new piece adds a new
    // closed orbit of tangents in the quotient.
    const NormalForm f = normal_form(g);
    if (!seen.insert({f.a.p, f.a.q, f.b.p, f.b.q}).second) continue;
    out.push_back(g);
  }
  return out;
}

double ConcatenationPlan::epsilon(std::size_t splice) const {
  const double d = std::abs(static_cast<double>(splice) + 0.5 - static_cast<double>(budget_center)) + 0.5;
  return eps0 / (d * d);
}

void ConcatenationPlan::validate() const {
  if (generator.empty()) throw InvalidPlan("empty generator");
  if (!(delta2 > 0.0 && delta1 > 2.0 * delta2 && delta1 < 1.0))
    throw InvalidPlan("need 0 < 2 delta2 < delta1 < 1");
  if (!(eps0 > 0.0)) throw InvalidPlan("eps0 must be positive");
  if (budget_center < 1) throw InvalidPlan("budget_center is 1-based");
  const double sides = budget_center == 1 ? 1.0 : 2.0;
  if (sides * eps0 * kPi * kPi / 6.0 > 0.5) throw InvalidPlan("angle budget sum exceeds 1/2");
  if (n_cap < 1) throw InvalidPlan("n_cap must be positive");
  const double h2 = 1.0 / delta2;
  for (const auto& g : generator) {
    const NormalForm f = normal_form(g);
    // Part of the piece between the splice horoballs at its two cusps.
    const double len = 2.0 * std::log(static_cast<double>(f.a.q) * h2);
    if (!(delta1 < 0.5 * len)) throw InvalidPlan("delta1 not below half the truncated geodesic length");
  }
}

ConcatenationPlan default_plan(std::size_t count, std::uint64_t seed) {
  ConcatenationPlan p;
  p.generator = singular_geodesic_sequence(count, seed);
  p.budget_center = (count + 1) / 2;
  return p;
}

HalfPlanePoint DensePiece::midpoint() const { return {a.value(), 1.0 / static_cast<double>(a.q)}; }

BigUnimodular FramedConcatenation::relative_frame(std::size_t from, std::size_t to) const {
  return pieces.at(to).frame.inverse() * pieces.at(from).frame;
}

namespace {

GeodesicSegment vertical(double x, double y0, double y1) {
  return geodesic_between(HalfPlanePoint(x, y0), HalfPlanePoint(x, y1));
}

Concatenation splice_window(const DensePiece& from, const DensePiece& to, std::int64_t n, double h) {
  const double x0 = from.a.value();
  const double x1 = to.b.value() + static_cast<double>(n);
  std::vector<ConcatSegment> segs;
  segs.emplace_back(vertical(x0, 1.0 / static_cast<double>(from.q()), h));
  segs.emplace_back(geodesic_between(HalfPlanePoint(x0, h), HalfPlanePoint(x1, h)));
  segs.emplace_back(vertical(x1, h, 1.0 / static_cast<double>(to.q())));
  return make_concatenation(MetricBackend::hyperbolic(), std::move(segs));
}

// A splice is charged for both of its corners, so the budgets bound ea_total.
double window_angle(const Concatenation& w) { return w.ea_total; }

}  // namespace

FramedConcatenation build_concatenation(const ConcatenationPlan& plan, std::size_t N) {
  plan.validate();
  if (N == 0 || N > plan.generator.size()) throw InvalidPlan("build_concatenation: N outside the generator");
  FramedConcatenation C;
  C.plan = plan;
  const double h = horocycle_level(plan.delta2);
  for (std::size_t k = 0; k < N; ++k) {
    const NormalForm f = normal_form(plan.generator[k]);
    DensePiece piece;
    piece.geodesic = plan.generator[k];
    piece.a = f.a;
    piece.b = f.b;
    piece.departure_to_arrival = f.d;
    if (k == 0) {
      // Arrival frame of the first piece -> its original coordinates.
      piece.frame = to_big(f.w.inverse());
      C.pieces.push_back(piece);
      continue;
    }
    const DensePiece& prev = C.pieces.back();
    const double eps = plan.epsilon(k);
    const double gap0 = prev.a.value() - piece.b.value() + 2.0 * h / std::tan(eps / 2.0);
    std::int64_t n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(gap0)));
    if (n > plan.n_cap) {
      const double achieved = 2.0 * std::atan(2.0 * h / (piece.b.value() + static_cast<double>(plan.n_cap) - prev.a.value()));
      throw AngleBudgetInfeasible("splice needs more than n_cap twists", achieved);
    }
    Concatenation w = splice_window(prev, piece, n, h);
    while (window_angle(w) > eps) {
      if (++n > plan.n_cap) throw AngleBudgetInfeasible("splice needs more than n_cap twists", window_angle(w));
      w = splice_window(prev, piece, n, h);
    }
    while (n > 1) {
      Concatenation smaller = splice_window(prev, piece, n - 1, h);
      if (window_angle(smaller) > eps) break;
      --n;
      w = std::move(smaller);
    }
    piece.frame = prev.frame * BigUnimodular::translation(BigInt(n)) * to_big(f.d.inverse());
    C.twists.push_back(n);
    C.splice_budget.push_back(eps);
    C.exterior_angles.insert(C.exterior_angles.end(), w.exterior_angles.begin(), w.exterior_angles.end());
    C.ea_total += w.ea_total;
    C.windows.push_back(std::move(w));
    C.pieces.push_back(piece);
  }
  return C;
}

namespace {

using Real = boost::multiprecision::mpfr_float;

class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned digits10) : old_(Real::default_precision()) { Real::default_precision(digits10); }
  ~PrecisionScope() { Real::default_precision(old_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned old_;
};

unsigned bits_of(const BigUnimodular& g) {
  unsigned bits = 1;
  for (const BigInt* v : {&g.a, &g.b, &g.c, &g.d})
    if (*v != 0) bits = std::max(bits, static_cast<unsigned>(boost::multiprecision::msb(abs(*v))) + 1);
  return bits;
}

// Enough digits that the images of O(1) points under frames of this size keep
// far more than double precision in their local geometry.
unsigned digits_for(unsigned bits) { return static_cast<unsigned>(0.302 * (4.0 * bits + 256.0)) + 20; }

struct MPoint {
  Real x, y;
};

Real to_real(const BigInt& v) { return Real(v.str()); }

MPoint apply_mp(const BigUnimodular& g, const HalfPlanePoint& z) {
  const Real a = to_real(g.a), b = to_real(g.b), c = to_real(g.c), d = to_real(g.d);
  const Real x(z.x), y(z.y);
  const Real nr = a * x + b, dr = c * x + d, di = c * y;
  const Real den = dr * dr + di * di;
  return {(nr * dr + a * di * y) / den, y / den};
}

// Complete geodesic through two points, oriented from p to q.
struct MGeodesic {
  bool vertical = false;
  Real x;         // vertical lines
  Real from, to;  // semicircle endpoints
};

MGeodesic through(const MPoint& p, const MPoint& q) {
  MGeodesic g;
  if (p.x == q.x) {
    g.vertical = true;
    g.x = p.x;
    return g;
  }
  const Real c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2 * (q.x - p.x));
  const Real r = sqrt((p.x - c) * (p.x - c) + p.y * p.y);
  g.from = q.x > p.x ? Real(c - r) : Real(c + r);
  g.to = q.x > p.x ? Real(c + r) : Real(c - r);
  return g;
}

// Normalizing map M = [[A, B], [C, D]] with positive determinant sending the
// start of the geodesic to 0 and its end to infinity. Vertical lines are
// assumed to run upward.
struct MMap {
  Real A, B, C, D;
};

MMap normalizer(const MGeodesic& g) {
  if (g.vertical) return {Real(1), Real(-g.x), Real(0), Real(1)};
  if (g.from > g.to) return {Real(1), Real(-g.from), Real(1), Real(-g.to)};
  return {Real(-1), Real(g.from), Real(1), Real(-g.to)};
}

struct MFoot {
  MPoint foot;
  Real dir;    // tangent direction of the geodesic at the foot
  Real along;  // log |w|
};

MFoot project_mp(const MPoint& p, const MGeodesic& g) {
  const MMap m = normalizer(g);
  // w = (A z + B) / (C z + D)
  const Real nr = m.A * p.x + m.B, ni = m.A * p.y;
  const Real dr = m.C * p.x + m.D, di = m.C * p.y;
  const Real den = dr * dr + di * di;
  const Real wr = (nr * dr + ni * di) / den, wi = (ni * dr - nr * di) / den;
  const Real r = sqrt(wr * wr + wi * wi);
  // z = (D w - B) / (-C w + A) at w = i r
  const Real zr_n = -m.B, zi_n = m.D * r;
  const Real zr_d = m.A, zi_d = -m.C * r;
  const Real zd = zr_d * zr_d + zi_d * zi_d;
  MFoot out;
  out.foot = {(zr_n * zr_d + zi_n * zi_d) / zd, (zi_n * zr_d - zr_n * zi_d) / zd};
  out.dir = 2 * atan2(m.C * out.foot.y, m.C * out.foot.x + m.D);
  out.along = log(r);
  return out;
}

Real dist_mp(const MPoint& p, const MPoint& q) {
  const Real chord = sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
  return 2 * asinh(chord / (2 * sqrt(p.y * q.y)));
}

double to_d(const Real& v) { return v.convert_to<double>(); }

BoundaryPoint boundary(const Real& v) {
  const double d = to_d(v);
  if (!std::isfinite(d) || std::abs(d) > 1e15) return BoundaryPoint::infinity();
  return BoundaryPoint::real(d);
}

// A chord seen from one piece's arrival frame: its endpoints and complete
// geodesic there, plus the double-precision local copy.
struct LocalChord {
  MPoint p, q;
  MGeodesic mg;
  CompleteGeodesic g;
  double along_p = 0.0, along_q = 0.0;
};

LocalChord local_chord(const FramedConcatenation& C, const Chord& ch, std::size_t frame) {
  const BigUnimodular fp = C.relative_frame(ch.first, frame);
  const BigUnimodular fq = C.relative_frame(ch.last, frame);
  PrecisionScope scope(digits_for(std::max(bits_of(fp), bits_of(fq))));
  LocalChord lc;
  lc.p = apply_mp(fp, C.pieces[ch.first].midpoint());
  lc.q = apply_mp(fq, C.pieces[ch.last].midpoint());
  lc.mg = through(lc.p, lc.q);
  if (lc.mg.vertical) {
    const double x = to_d(lc.mg.x);
    const bool up = lc.q.y > lc.p.y;
    lc.g = {up ? BoundaryPoint::real(x) : BoundaryPoint::infinity(), up ? BoundaryPoint::infinity() : BoundaryPoint::real(x)};
  } else {
    lc.g = {boundary(lc.mg.from), boundary(lc.mg.to)};
  }
  lc.along_p = to_d(project_mp(lc.p, lc.mg).along);
  lc.along_q = to_d(project_mp(lc.q, lc.mg).along);
  return lc;
}

void check_chord(const FramedConcatenation& C, const Chord& ch) {
  if (ch.first >= ch.last || ch.last >= C.size()) throw DomainError("chord indices outside the concatenation");
}

// Piece of the chord near the stretch of C from `lo` to `hi` (local points),
// clipped to the chord's own ends.
GeodesicSegment chord_piece(const LocalChord& lc, const HalfPlanePoint& lo, const HalfPlanePoint& hi, double margin) {
  const double a0 = project_to_geodesic(lo, lc.g).along;
  const double a1 = project_to_geodesic(hi, lc.g).along;
  const double s0 = std::max(lc.along_p, std::min(a0, a1) - margin);
  const double s1 = std::min(lc.along_q, std::max(a0, a1) + margin);
  if (!(s1 > s0)) throw DegenerateChord("chord does not reach this part of the concatenation");
  return geodesic_between(point_on_geodesic(lc.g, s0), point_on_geodesic(lc.g, s1));
}

double window_max_F(const FramedConcatenation& C, const Chord& ch, std::size_t k) {
  const LocalChord lc = local_chord(C, ch, k);
  const Concatenation& w = C.windows.at(k);
  const GeodesicSegment seg = chord_piece(lc, C.pieces[k].midpoint(),
                                          std::get<GeodesicSegment>(w.segments.back().geom).end, 5.0);
  ProfileOptions opts;
  opts.samples_per_unit = 64;
  return distance_profile(w, seg, opts).max_F;
}

}  // namespace

namespace {

// Highest point of the geodesic arc between two multiprecision points.
Real max_height(const MPoint& p, const MPoint& q) {
  if (p.x == q.x) return max(p.y, q.y);
  const Real c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2 * (q.x - p.x));
  if ((c - p.x) * (c - q.x) < 0) return sqrt((p.x - c) * (p.x - c) + p.y * p.y);
  return max(p.y, q.y);
}

// Cusps p'/q' other than a itself whose horoballs of height 1/(q'^2 h) the
// vertical x = a crosses.
std::vector<Rational> stray_horoballs(const Rational& a, double h) {
  std::vector<Rational> out;
  const double qmax = static_cast<double>(a.q) / (2.0 * h);
  for (std::int64_t q = 1; static_cast<double>(q) < qmax; ++q) {
    const auto p = static_cast<std::int64_t>(std::llround(a.value() * static_cast<double>(q)));
    for (std::int64_t pp : {p - 1, p, p + 1}) {
      if (std::gcd(pp, q) != 1 || pp * a.q == a.p * q) continue;
      const double rho = 1.0 / (2.0 * static_cast<double>(q * q) * h);
      if (std::abs(a.value() - static_cast<double>(pp) / static_cast<double>(q)) < rho) out.push_back({pp, q});
    }
  }
  return out;
}

}  // namespace

DegenerationReport check_no_degeneration(const FramedConcatenation& C, const std::vector<Chord>& chords) {
  DegenerationReport rep;
  const double h1 = horocycle_level(C.plan.delta1);
  const double h2 = horocycle_level(C.plan.delta2);
  // Every horoball of B(delta1) that C enters, as (piece frame, map sending
  // infinity to its cusp) plus the parts of C allowed inside it. Piece j's
  // part is index 2j, the splice chord after it 2j + 1.
  struct Ball {
    std::size_t frame;
    Elt g;
    std::vector<std::size_t> owners;
  };
  std::vector<Ball> balls;
  for (std::size_t k = 0; k + 1 < C.size(); ++k) balls.push_back({k, Elt::identity(), {2 * k, 2 * k + 1, 2 * k + 2}});
  for (std::size_t j = 0; j < C.size(); ++j)
    for (const Rational& r : stray_horoballs(C.pieces[j].a, h1)) {
      balls.push_back({j, cusp_frame(BoundaryPoint::from_rational(r.p, r.q)), {2 * j}});
      ++rep.stray_entries;
    }
  std::size_t shared = 0;
  for (const Ball& ball : balls) {
    for (std::size_t part = 0; part + 1 < 2 * C.size(); ++part) {
      if (std::find(ball.owners.begin(), ball.owners.end(), part) != ball.owners.end()) continue;
      const std::size_t j = part / 2;
      const BigUnimodular f = to_big(ball.g.inverse()) * C.relative_frame(j, ball.frame);
      PrecisionScope scope(digits_for(bits_of(f)));
      HalfPlanePoint p0, p1;
      if (part % 2 == 0) {
        const DensePiece& pc = C.pieces[j];
        p0 = {pc.a.value(), 1.0 / (static_cast<double>(pc.q() * pc.q()) * h2)};
        p1 = {pc.a.value(), h2};
      } else {
        const auto& chord = std::get<GeodesicSegment>(C.windows[j].segments[1].geom);
        p0 = chord.start;
        p1 = chord.end;
      }
      if (max_height(apply_mp(f, p0), apply_mp(f, p1)) >= h1) ++shared;
    }
  }
  rep.shared_balls = shared;
  rep.single_arcs = shared == 0;

  const double level = horocycle_level(C.plan.delta1 / 2.0);
  for (const Chord& ch : chords) {
    check_chord(C, ch);
    for (std::size_t k = ch.first; k < ch.last; ++k) {
      const LocalChord lc = local_chord(C, ch, k);
      const GeodesicSegment seg = chord_piece(lc, C.pieces[k].midpoint(),
                                              std::get<GeodesicSegment>(C.windows[k].segments.back().geom).end, 1.0);
      if (seg.kind != GeodesicKind::semicircle || seg.radius <= level) {
        rep.chord_crossings = false;
        rep.max_crossing_distance = std::numeric_limits<double>::infinity();
        continue;
      }
      const double dx = std::sqrt(seg.radius * seg.radius - level * level);
      for (double x : {seg.center - dx, seg.center + dx}) {
        const HalfPlanePoint z(x, level);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : C.windows[k].segments)
          best = std::min(best, project_to_segment(z, std::get<GeodesicSegment>(s.geom)).distance);
        rep.max_crossing_distance = std::max(rep.max_crossing_distance, best);
      }
    }
  }
  if (rep.max_crossing_distance > C.plan.delta2) rep.chord_crossings = false;
  rep.min_clearance = C.plan.delta2 - rep.max_crossing_distance;
  rep.pass = rep.single_arcs && rep.chord_crossings;
  return rep;
}

ChordalLimit chordal_limit(const FramedConcatenation& C, std::size_t center, const std::vector<std::size_t>& half_widths,
                           double tol_limit) {
  if (half_widths.size() < 3) throw InsufficientData("chordal_limit needs at least three nested chords");
  if (!std::is_sorted(half_widths.begin(), half_widths.end()) || half_widths.front() == 0)
    throw InsufficientData("chord half widths must be positive and increasing");
  if (center >= C.size() || half_widths.back() > center || center + half_widths.back() >= C.size())
    throw InsufficientData("chords do not fit inside the concatenation");
  ChordalLimit out;
  out.center = center;
  out.half_widths = half_widths;
  unsigned bits = 1;
  for (std::size_t n : half_widths) {
    out.chords.push_back({center - n, center + n});
    bits = std::max({bits, bits_of(C.relative_frame(center - n, center)), bits_of(C.relative_frame(center + n, center))});
  }
  PrecisionScope scope(digits_for(bits));
  const HalfPlanePoint pm = C.pieces[center].midpoint();
  const MPoint mid{Real(pm.x), Real(pm.y)};
  std::vector<MFoot> feet;
  for (const Chord& ch : out.chords) {
    const MPoint p = apply_mp(C.relative_frame(ch.first, center), C.pieces[ch.first].midpoint());
    const MPoint q = apply_mp(C.relative_frame(ch.last, center), C.pieces[ch.last].midpoint());
    feet.push_back(project_mp(mid, through(p, q)));
    const MFoot& f = feet.back();
    out.midpoint_tangents.emplace_back(HalfPlanePoint(to_d(f.foot.x), to_d(f.foot.y)), to_d(f.dir));
    out.terminal_window_max_F.push_back(window_max_F(C, ch, ch.last - 1));
  }
  const Real two_pi = 2 * boost::math::constants::pi<Real>();
  for (std::size_t i = 1; i < feet.size(); ++i) {
    Real da = feet[i].dir - feet[i - 1].dir;
    da -= two_pi * floor(da / two_pi + Real(0.5));
    out.cauchy_gaps.push_back(to_d(dist_mp(feet[i].foot, feet[i - 1].foot) + abs(da)));
  }
  out.cauchy = true;
  for (std::size_t i = 1; i < out.cauchy_gaps.size(); ++i)
    if (!(out.cauchy_gaps[i] < out.cauchy_gaps[i - 1])) out.cauchy = false;
  if (out.cauchy && out.cauchy_gaps.back() < tol_limit) out.limit_tangent = out.midpoint_tangents.back();
  const Chord& last = out.chords.back();
  for (std::size_t k = last.first; k < last.last; ++k) out.window_max_F.push_back(window_max_F(C, last, k));
  return out;
}

namespace {

void sample_segment(const GeodesicSegment& seg, double spacing, std::vector<UnitTangent>& out) {
  const int n = std::max(1, static_cast<int>(std::ceil(seg.length / spacing)));
  for (int i = 0; i <= n; ++i) out.push_back(reduce_tangent(seg.tangent_at(seg.length * i / n)));
}

}  // namespace

std::vector<UnitTangent> chord_tangents(const FramedConcatenation& C, const Chord& ch, double spacing) {
  check_chord(C, ch);
  const double h2 = horocycle_level(C.plan.delta2);
  std::vector<UnitTangent> out;
  for (std::size_t j = ch.first; j <= ch.last; ++j) {
    const LocalChord lc = local_chord(C, ch, j);
    const DensePiece& pc = C.pieces[j];
    const HalfPlanePoint lo(pc.a.value(), 1.0 / (static_cast<double>(pc.q() * pc.q()) * h2));
    const HalfPlanePoint hi(pc.a.value(), h2);
    sample_segment(chord_piece(lc, lo, hi, 0.0), spacing, out);
  }
  return out;
}

std::vector<UnitTangent> concatenation_tangents(const FramedConcatenation& C, double spacing) {
  const double h2 = horocycle_level(C.plan.delta2);
  std::vector<UnitTangent> out;
  const DensePiece& first = C.pieces.front();
  const DensePiece& last = C.pieces.back();
  const double q0 = static_cast<double>(first.q());
  sample_segment(vertical(first.a.value(), 1.0 / (q0 * q0 * h2), 1.0 / q0), spacing, out);
  for (const auto& w : C.windows)
    for (const auto& s : w.segments) sample_segment(std::get<GeodesicSegment>(s.geom), spacing, out);
  sample_segment(vertical(last.a.value(), 1.0 / static_cast<double>(last.q()), h2), spacing, out);
  return out;
}

std::vector<UnitTangent> generator_tangents(const FramedConcatenation& C, double top, double spacing) {
  // The free ends of C stop at the splice horoballs, so the outer ends of the
  // first and last pieces are cut there too.
  const double h2 = horocycle_level(C.plan.delta2);
  std::vector<UnitTangent> out;
  for (std::size_t k = 0; k < C.size(); ++k) {
    const DensePiece& pc = C.pieces[k];
    const double q = static_cast<double>(pc.q());
    const double lo = k == 0 ? h2 : top;
    const double hi = k + 1 == C.size() ? h2 : top;
    sample_segment(vertical(pc.a.value(), 1.0 / (q * q * lo), hi), spacing, out);
  }
  return out;
}

namespace {

double plain_distance(const UnitTangent& u, const UnitTangent& v) {
  return dist(u.base, v.base) + std::abs(normalize_angle(u.dir - v.dir));
}

const std::vector<Elt>& side_pairings() {
  static const std::vector<Elt> g = {Elt::translation(1),  Elt::translation(-1),
                                     Elt::inversion(),     Elt::translation(1) * Elt::inversion(),
                                     Elt::translation(-1) * Elt::inversion()};
  return g;
}

bool near_boundary(const HalfPlanePoint& z) { return std::abs(z.x) > 0.3 || std::norm(z.z()) < 1.5; }

// Tangent together with its images across nearby sides of the domain.
std::vector<UnitTangent> with_images(const std::vector<UnitTangent>& ts, double max_height) {
  std::vector<UnitTangent> out;
  for (const auto& t : ts) {
    if (t.base.y > max_height) continue;
    out.push_back(t);
    if (!near_boundary(t.base)) continue;
    for (const auto& g : side_pairings()) out.push_back(apply(g, t));
  }
  return out;
}

// Cheap lower bound for the base distance: |log(y1/y2)|.
double nearest(const UnitTangent& u, const std::vector<UnitTangent>& pool, double stop_below) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : pool) {
    if (std::abs(std::log(u.base.y / v.base.y)) >= best) continue;
    best = std::min(best, plain_distance(u, v));
    if (best < stop_below) break;
  }
  return best;
}

}  // namespace

double bundle_distance(const UnitTangent& u, const UnitTangent& v) {
  double best = plain_distance(u, v);
  for (const auto& g : side_pairings()) best = std::min(best, plain_distance(apply(g, u), v));
  return best;
}

std::vector<UnitTangent> coverage_grid(double max_height) {
  std::vector<UnitTangent> grid;
  constexpr int nx = 11, ntheta = 24;
  constexpr double dlogy = 0.15;
  const double y0 = std::sqrt(3.0) / 2.0;
  for (int i = 0; i < nx; ++i) {
    const double x = -0.5 + static_cast<double>(i) / (nx - 1);
    for (double ly = std::log(y0); ly <= std::log(max_height) + 1e-12; ly += dlogy) {
      const double y = std::exp(ly);
      if (x * x + y * y < 1.0) continue;
      for (int t = 0; t < ntheta; ++t)
        grid.emplace_back(HalfPlanePoint(x, y), -kPi + 2.0 * kPi * (t + 1) / ntheta);
    }
  }
  return grid;
}

double density_coverage(const std::vector<UnitTangent>& tangents, double eps, double max_height) {
  const std::vector<UnitTangent> grid = coverage_grid(max_height);
  const std::vector<UnitTangent> pool = with_images(tangents, max_height + 1.0);
  if (pool.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& g : grid)
    if (nearest(g, pool, eps) < eps) ++covered;
  return static_cast<double>(covered) / static_cast<double>(grid.size());
}

double bundle_hausdorff(const std::vector<UnitTangent>& a, const std::vector<UnitTangent>& b, double max_height) {
  std::vector<UnitTangent> fa, fb;
  for (const auto& t : a)
    if (t.base.y <= max_height) fa.push_back(t);
  for (const auto& t : b)
    if (t.base.y <= max_height) fb.push_back(t);
  if (fa.empty() && fb.empty()) return 0.0;
  if (fa.empty() || fb.empty()) return std::numeric_limits<double>::infinity();
  const std::vector<UnitTangent> pa = with_images(fa, max_height + 1.0);
  const std::vector<UnitTangent> pb = with_images(fb, max_height + 1.0);
  double h = 0.0;
  for (const auto& t : fa) h = std::max(h, nearest(t, pb, 0.0));
  for (const auto& t : fb) h = std::max(h, nearest(t, pa, 0.0));
  return h;
}

}  // namespace cusped
