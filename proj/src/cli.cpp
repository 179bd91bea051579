#include "cusped/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include "cusped/concatenation.hpp"
#include "cusped/dense_limit.hpp"
#include "cusped/errors.hpp"
#include "cusped/metric_engine.hpp"
#include "cusped/parallel.hpp"
#include "cusped/shadowing.hpp"
#include "cusped/spectrum.hpp"

namespace cusped::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kSubcommands{"geodesic", "twist", "shadow", "dense", "spectrum", "recur", "report"};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// json cannot hold inf or nan; they are written as null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) {
    std::string sep;
    for (const auto& h : header) {
      out_ << sep << h;
      sep = ",";
    }
    out_ << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    std::string sep;
    ((out_ << sep << cell(cells), sep = ","), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ostringstream out_;
};

// Artifacts of one run, written together with the manifest.
struct Artifacts {
  std::map<std::string, std::string> files;
  void add(const std::string& name, std::string data) { files[name] = std::move(data); }
  void add_json(const std::string& name, const json& j) { files[name] = j.dump(2) + "\n"; }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json versions() {
  return {{"engine", kEngineVersion},
          {"schema", kSchemaVersion},
          {"boost", BOOST_LIB_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

void commit(const ExperimentConfig& cfg, const Artifacts& a, const RunResult& r) {
  fs::create_directories(cfg.out);
  json outputs = json::object();
  for (const auto& [name, data] : a.files) {
    write_atomic(cfg.out / name, data);
    outputs[name] = sha256_hex(data);
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"engine_version", kEngineVersion},
                   {"subcommand", cfg.subcommand},
                   {"config", cfg.to_json()},
                   {"versions", versions()},
                   {"outputs", outputs},
                   {"assertions", r.assertions},
                   {"summary", r.summary},
                   {"created", {{"timestamp", utc_now()}}}};
  write_atomic(cfg.out / "manifest.json", manifest.dump(2) + "\n");
}

bool all_true(const json& assertions) {
  for (const auto& [k, v] : assertions.items())
    if (!v.get<bool>()) return false;
  return true;
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field + ": " + msg);
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

bool ExperimentConfig::randomized() const {
  return subcommand == "shadow" || subcommand == "dense" || subcommand == "recur";
}

void ExperimentConfig::validate() const {
  require(kSubcommands.count(subcommand) == 1, "subcommand", "unknown '" + subcommand + "'");
  require(backend == "hyperbolic" || backend == "wp_cusp_model", "backend", "must be hyperbolic or wp_cusp_model");
  if (randomized()) require(seed.has_value(), "seed", "required for " + subcommand);
  require(tol_bvp > 0.0, "tol_bvp", "must be positive");
  require(tol_limit > 0.0, "tol_limit", "must be positive");
  if (subcommand == "geodesic") {
    const MetricBackend b = MetricBackend::from_id(backend);
    require(b.inside({x, y}), "x/y", "start point outside the " + backend + " chart");
    if (to_x && to_y) require(b.inside({*to_x, *to_y}), "to_x/to_y", "target outside the " + backend + " chart");
    require(length > 0.0, "length", "must be positive");
    require(to_x.has_value() == to_y.has_value(), "to", "give both to_x and to_y");
  } else if (subcommand == "twist") {
    const MetricBackend b = MetricBackend::from_id(backend);
    require(b.inside({p1_x, p1_y}), "p1", "outside the " + backend + " chart");
    require(b.inside({p2_x, p2_y}), "p2", "outside the " + backend + " chart");
    require(n_min >= 0 && n_max >= n_min, "n_max", "need 0 <= n_min <= n_max");
  } else if (subcommand == "shadow") {
    require(trials >= 0, "trials", "must be nonnegative");
    require(ea_max > 0.0 && ea_max <= 0.5, "ea_max", "must lie in (0, 1/2]");
    require(family == "random_polyline" || family == "twisting", "family", "random_polyline or twisting");
  } else if (subcommand == "dense") {
    require(backend == "hyperbolic", "backend", "dense runs on the modular surface only");
    require(delta2 > 0.0 && delta1 > 2.0 * delta2, "delta1", "need delta1 > 2 delta2 > 0");
    require(eps0 > 0.0, "eps0", "must be positive");
    require(coverage_eps > 0.0, "coverage_eps", "must be positive");
    require(pieces >= 2, "pieces", "need at least 2");
    for (int n : n_values) require(n >= 2 && static_cast<std::size_t>(n) < pieces, "n_values", "need 2 <= N < pieces");
    require(half_widths.size() >= 3 && std::is_sorted(half_widths.begin(), half_widths.end()), "half_widths",
            "need at least three, increasing");
    require(2 * half_widths.back() < pieces, "half_widths", "widest chord must fit inside the pieces");
  } else if (subcommand == "spectrum") {
    require(t_max >= kShortestClosedLength, "t_max", "must be at least 2 arccosh(3/2)");
    require(fit_t0 < fit_t1 && fit_t1 <= t_max, "fit_t1", "need fit_t0 < fit_t1 <= t_max");
    require(digit_bound >= 1 && digit_bound <= 9, "digit_bound", "must lie in 1..9");
    require(k_max >= 1 && k_max <= 20, "k_max", "must lie in 1..20");
    require(q_max >= 1, "q_max", "must be positive");
  } else if (subcommand == "recur") {
    require(backend == "hyperbolic", "backend", "recurrence runs on the modular surface only");
    require(t_horizon > 0.0, "t_horizon", "must be positive");
    require(delta > 0.0, "delta", "must be positive");
  }
}

json ExperimentConfig::to_json() const {
  json j = {{"subcommand", subcommand}, {"backend", backend}};
  if (seed) j["seed"] = *seed;
  if (subcommand == "geodesic") {
    j.update({{"x", x}, {"y", y}, {"angle", angle}, {"length", length}, {"tol_bvp", tol_bvp}});
    if (to_x) j.update({{"to_x", *to_x}, {"to_y", *to_y}});
  } else if (subcommand == "twist") {
    j.update({{"p1_x", p1_x}, {"p1_y", p1_y}, {"p2_x", p2_x}, {"p2_y", p2_y}, {"n_min", n_min}, {"n_max", n_max}});
  } else if (subcommand == "shadow") {
    j.update({{"trials", trials}, {"ea_max", ea_max}, {"family", family}});
  } else if (subcommand == "dense") {
    j.update({{"pieces", pieces}, {"delta1", delta1}, {"delta2", delta2}, {"eps0", eps0},
              {"coverage_eps", coverage_eps}, {"n_values", n_values}, {"half_widths", half_widths},
              {"tol_limit", tol_limit}});
  } else if (subcommand == "spectrum") {
    j.update({{"t_max", t_max}, {"fit_t0", fit_t0}, {"fit_t1", fit_t1}, {"digit_bound", digit_bound},
              {"k_max", k_max}, {"q_max", q_max}});
  } else if (subcommand == "recur") {
    j.update({{"samples", samples}, {"t_horizon", t_horizon}, {"delta", delta}});
  }
  return j;
}

namespace {

unsigned pool(const ExperimentConfig& cfg) { return cfg.workers > 0 ? cfg.workers : worker_count(); }

RunResult run_geodesic(const ExperimentConfig& cfg, Artifacts& a) {
  const MetricBackend b = MetricBackend::from_id(cfg.backend);
  const ChartPoint p{cfg.x, cfg.y};
  GeodesicPath path;
  json summary = json::object();
  RunResult r;
  if (cfg.to_x) {
    ChordOptions opts;
    opts.tol_bvp = cfg.tol_bvp;
    const ChordResult c = chord_bvp(b, p, {*cfg.to_x, *cfg.to_y}, opts);
    path = c.segment;
    summary.update({{"mode", "chord"}, {"endpoint_error", c.endpoint_error}, {"iterations", c.iterations},
                    {"used_subdivision", c.used_subdivision}});
    r.assertions["endpoint_within_tol"] = c.endpoint_error <= cfg.tol_bvp;
    if (b.id() == BackendId::hyperbolic) {
      const double exact = geodesic_between({cfg.x, cfg.y}, {*cfg.to_x, *cfg.to_y}).length;
      summary["closed_form_length_error"] = std::abs(path.total_length - exact);
      r.assertions["closed_form_length"] = std::abs(path.total_length - exact) <= 1e-6;
    }
  } else {
    path = integrate_geodesic(b, p, b.unit_vector(p, cfg.angle), cfg.length);
    summary["mode"] = "initial_value";
    if (b.id() == BackendId::hyperbolic) {
      const GeodesicSegment exact = geodesic_from(UnitTangent({cfg.x, cfg.y}, cfg.angle), cfg.length);
      const double err = dist({path.back().p.c1, path.back().p.c2}, exact.end);
      summary["closed_form_endpoint_error"] = err;
      r.assertions["closed_form_endpoint"] = err <= 1e-6;
    }
  }
  const double defect = unit_speed_defect(b, path);
  r.assertions["unit_speed"] = defect <= 1e-6;
  summary.update({{"total_length", path.total_length},
                  {"end", {path.back().p.c1, path.back().p.c2}},
                  {"terminated_at_cusp", path.terminated_at_cusp},
                  {"exited_chart", path.exited_chart},
                  {"unit_speed_defect", defect},
                  {"samples", path.samples.size()}});
  Csv csv{"s", "c1", "c2", "v1", "v2"};
  for (const auto& smp : path.samples) csv.row(smp.s, smp.p.c1, smp.p.c2, smp.t.v1, smp.t.v2);
  a.add("path.csv", csv.str());
  summary["assertions"] = r.assertions;
  a.add_json("summary.json", summary);
  r.summary = "geodesic " + cfg.backend + ": length " + brief(path.total_length) +
              (path.terminated_at_cusp ? " (reached the cusp)" : "");
  return r;
}

RunResult run_twist(const ExperimentConfig& cfg, Artifacts& a) {
  const MetricBackend b = MetricBackend::from_id(cfg.backend);
  const TwistScan scan = twist_scan(b, {cfg.p1_x, cfg.p1_y}, {cfg.p2_x, cfg.p2_y}, cfg.n_min, cfg.n_max);
  RunResult r;
  Csv csv{"n", "initial_gap", "terminal_gap", "chord_length", "min_ell"};
  bool monotone = true, growth = true, closed = true;
  const bool closed_form = b.id() == BackendId::hyperbolic && cfg.p1_y == cfg.p2_y;
  double worst_closed = 0.0;
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const auto& row = scan.rows[i];
    csv.row(row.n, row.initial_angle_gap, row.terminal_angle_gap, row.chord_length, row.min_ell);
    if (row.n > scan.n0) {
      if (i > 0 && row.initial_angle_gap > scan.rows[i - 1].initial_angle_gap + 1e-12) monotone = false;
      if (row.chord_length < static_cast<double>(row.n - scan.n0) * scan.L0) growth = false;
    }
    const double shift = static_cast<double>(row.n) - (cfg.p1_x - cfg.p2_x);
    if (closed_form && shift > 0.0) {
      const double err = std::abs(row.initial_angle_gap - std::atan(2.0 * cfg.p1_y / shift));
      worst_closed = std::max(worst_closed, err);
      if (err > 1e-6) closed = false;
    }
  }
  r.assertions["gaps_nonincreasing_after_n0"] = monotone;
  r.assertions["chord_length_at_least_linear"] = growth;
  if (closed_form) r.assertions["closed_form_gap"] = closed;
  const auto& last = scan.rows.back();
  a.add("twist.csv", csv.str());
  a.add_json("summary.json", {{"n0", scan.n0},
                              {"L0", scan.L0},
                              {"gap_exponent", scan.gap_exponent},
                              {"final_gap", last.initial_angle_gap},
                              {"final_min_ell", last.min_ell},
                              {"closed_form_max_error", closed_form ? jnum(worst_closed) : json(nullptr)},
                              {"assertions", r.assertions}});
  r.summary = "twist " + cfg.backend + ": n0 " + std::to_string(scan.n0) + ", L0 " + brief(scan.L0) + ", gap(" +
              std::to_string(last.n) + ") " + brief(last.initial_angle_gap);
  return r;
}

json quantiles_json(const Quantiles& q) {
  return {{"min", q.min}, {"q25", q.q25}, {"median", q.median}, {"q75", q.q75}, {"max", q.max}};
}

RunResult run_shadow(const ExperimentConfig& cfg, Artifacts& a) {
  FamilySpec spec;
  spec.kind = cfg.family == "twisting" ? FamilyKind::twisting : FamilyKind::random_polyline;
  spec.ea_max = cfg.ea_max;
  const ShadowTable t = shadowing_experiment(spec, cfg.trials, *cfg.seed, pool(cfg));
  RunResult r;
  Csv csv{"trial", "ea_total", "max_F", "bound", "pass"};
  std::size_t errors = 0;
  for (const auto& row : t.rows) {
    if (!row.error.empty()) {
      ++errors;
      continue;
    }
    csv.row(row.trial, row.ea_total, row.max_F, row.bound, row.pass);
  }
  r.assertions["bound_holds"] = t.pass_rate == 1.0;
  r.assertions["derivative_bound_holds"] = t.deriv_pass_rate == 1.0;
  if (!t.rows.empty()) r.assertions["trend_to_zero"] = t.slope > 0.0;
  a.add("shadow.csv", csv.str());
  a.add_json("summary.json", {{"trials", t.rows.size()},
                              {"errors", errors},
                              {"max_F", quantiles_json(t.max_F)},
                              {"ratio", quantiles_json(t.ratio)},
                              {"pass_rate", t.pass_rate},
                              {"deriv_pass_rate", t.deriv_pass_rate},
                              {"slope", t.slope},
                              {"assertions", r.assertions}});
  r.summary = "shadow: " + std::to_string(t.rows.size()) + " trials, pass rate " + brief(t.pass_rate) + ", slope " +
              brief(t.slope);
  return r;
}

RunResult run_dense(const ExperimentConfig& cfg, Artifacts& a) {
  ConcatenationPlan plan = default_plan(cfg.pieces, *cfg.seed);
  plan.delta1 = cfg.delta1;
  plan.delta2 = cfg.delta2;
  plan.eps0 = cfg.eps0;
  try {
    plan.validate();
  } catch (const InvalidPlan& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  const FramedConcatenation C = build_concatenation(plan, cfg.pieces);
  const std::size_t m = cfg.pieces / 2;
  const ChordalLimit L = chordal_limit(C, m, cfg.half_widths, cfg.tol_limit);
  const DegenerationReport deg = check_no_degeneration(C, L.chords);
  RunResult r;

  json chords = json::array();
  for (std::size_t i = 0; i < L.chords.size(); ++i) {
    const auto& t = L.midpoint_tangents[i];
    chords.push_back({{"half_width", L.half_widths[i]},
                      {"first", L.chords[i].first},
                      {"last", L.chords[i].last},
                      {"midpoint_tangent", {t.base.x, t.base.y, t.dir}},
                      {"cauchy_gap", i == 0 ? json(nullptr) : jnum(L.cauchy_gaps[i - 1])},
                      {"terminal_window_max_F", L.terminal_window_max_F[i]}});
  }
  Csv cov{"N", "coverage"};
  json curve = json::array();
  std::vector<UnitTangent> widest;
  bool increasing = true;
  double prev = -1.0;
  for (int N : cfg.n_values) {
    const std::size_t h = static_cast<std::size_t>(N) / 2;
    auto ts = chord_tangents(C, {m - h, m + h});
    const double c = density_coverage(ts, cfg.coverage_eps);
    cov.row(N, c);
    curve.push_back({{"N", N}, {"coverage", c}});
    if (c <= prev) increasing = false;
    prev = c;
    widest = std::move(ts);
  }
  Csv tan{"x", "y", "theta"};
  for (const auto& t : widest) tan.row(t.base.x, t.base.y, t.dir);

  bool gaps_halve = L.cauchy_gaps.size() >= 2 && L.cauchy_gaps[1] <= 0.5 * L.cauchy_gaps[0];
  bool terminal_down = true;
  for (std::size_t i = 1; i < L.terminal_window_max_F.size(); ++i)
    if (L.terminal_window_max_F[i] >= L.terminal_window_max_F[i - 1]) terminal_down = false;
  r.assertions["coverage_increasing"] = increasing;
  r.assertions["cauchy"] = L.cauchy;
  r.assertions["cauchy_gaps_halve"] = gaps_halve;
  r.assertions["terminal_window_F_decreasing"] = terminal_down;
  r.assertions["no_degeneration"] = deg.pass;
  r.assertions["ea_total_at_most_half"] = C.ea_total <= 0.5;

  json j = {{"pieces", C.size()},
            {"twists", C.twists},
            {"splice_budget", C.splice_budget},
            {"ea_total", C.ea_total},
            {"center", m},
            {"chords", chords},
            {"cauchy", L.cauchy},
            {"coverage", curve},
            {"degeneration",
             {{"pass", deg.pass},
              {"single_arcs", deg.single_arcs},
              {"chord_crossings", deg.chord_crossings},
              {"stray_entries", deg.stray_entries},
              {"shared_balls", deg.shared_balls},
              {"max_crossing_distance", deg.max_crossing_distance},
              {"min_clearance", deg.min_clearance}}},
            {"assertions", r.assertions}};
  if (L.limit_tangent) j["limit_tangent"] = {L.limit_tangent->base.x, L.limit_tangent->base.y, L.limit_tangent->dir};
  a.add_json("dense.json", j);
  a.add("coverage.csv", cov.str());
  a.add("tangents.csv", tan.str());
  r.summary = "dense: " + std::to_string(C.size()) + " pieces, ea " + brief(C.ea_total) + ", coverage " + brief(prev) +
              " at N = " + std::to_string(cfg.n_values.back()) + (L.cauchy ? ", Cauchy" : ", not Cauchy");
  return r;
}

RunResult run_spectrum(const ExperimentConfig& cfg, Artifacts& a) {
  CensusTable census = enumerate_closed_geodesics(cfg.t_max, pool(cfg));
  const auto simple = simple_geodesic_census(cfg.q_max);
  mark_simple(census, simple);
  RunResult r;

  std::string lines;
  bool consistent = true;
  for (const auto& c : census.classes) {
    json j = {{"trace", c.trace}, {"length", c.length}, {"cf_period", c.cf_period},
              {"simple", c.simple ? json(*c.simple) : json(nullptr)}};
    lines += j.dump() + "\n";
    if (std::abs(c.length - 2.0 * std::acosh(static_cast<double>(std::abs(c.representative.trace())) / 2.0)) > 1e-12)
      consistent = false;
  }
  Csv counts{"T", "N"};
  const int steps = static_cast<int>(std::floor(cfg.t_max / 0.05 + 1e-9));
  for (int i = 0; i <= steps; ++i) counts.row(0.05 * i, census.count(0.05 * i));

  json fit = nullptr;
  try {
    const GrowthFit f = growth_rate_fit(census, cfg.fit_t0, cfg.fit_t1);
    fit = {{"T0", cfg.fit_t0}, {"T1", cfg.fit_t1}, {"slope", f.slope}, {"stderr", f.stderr_slope},
           {"intercept", f.intercept}};
  } catch (const InsufficientData&) {
  }

  Csv ent{"N", "spectral_radius", "entropy", "height_bound", "periodic_rate_16"};
  bool ent_up = true;
  double prev_ent = -1.0;
  for (int N = 1; N <= cfg.digit_bound; ++N) {
    const auto s = bounded_cf_subshift(N);
    const double rate = std::log(periodic_points(s, 16).convert_to<double>()) / 16.0;
    ent.row(N, s.spectral_radius, s.entropy, height_bound(N), rate);
    if (s.entropy <= prev_ent) ent_up = false;
    prev_ent = s.entropy;
  }

  const auto h = closed_geodesics_in_horseshoe(cfg.digit_bound, cfg.k_max);
  const auto pts = horseshoe_orbit_points(h, cfg.k_max);
  std::vector<std::size_t> per_k(static_cast<std::size_t>(cfg.k_max) + 1, 0);
  double worst_height = 0.0;
  for (const auto& c : h) {
    ++per_k[c.digit_period.size()];
    worst_height = std::max(worst_height, cf_height(c.cls.cf_period));
  }
  Csv hs{"k", "classes", "orbit_points"};
  for (int k = 1; k <= cfg.k_max; ++k) hs.row(k, per_k[static_cast<std::size_t>(k)], pts[static_cast<std::size_t>(k)]);

  double h_star = 0.0;
  Csv sc{"p", "q", "trace", "trace_fricke", "height", "simple"};
  for (const auto& c : simple) {
    sc.row(c.p, c.q, c.trace.str(), c.trace_fricke.str(), c.height, c.simple);
    h_star = std::max(h_star, c.height);
  }
  const auto ns = non_simple_samples(10);
  double ns_min = HUGE_VAL;
  for (const auto& c : ns) {
    sc.row(c.p, c.q, c.trace.str(), c.trace_fricke.str(), c.height, c.simple);
    ns_min = std::min(ns_min, c.height);
  }
  bool fricke = true;
  for (const auto& c : simple) fricke = fricke && c.trace == c.trace_fricke;

  const double shortest = census.classes.empty() ? HUGE_VAL : census.classes.front().length;
  r.assertions["shortest_length"] = std::abs(shortest - 2.0 * std::acosh(1.5)) <= 1e-9;
  r.assertions["length_trace_consistent"] = consistent;
  r.assertions["entropy_increasing"] = ent_up;
  r.assertions["horseshoe_below_height_bound"] = worst_height <= height_bound(cfg.digit_bound) + 1e-12;
  r.assertions["fricke_matches_matrix"] = fricke;
  r.assertions["non_simple_exceed_h_star"] = ns_min > h_star;

  a.add("census.jsonl", lines);
  a.add("counts.csv", counts.str());
  a.add("entropy.csv", ent.str());
  a.add("horseshoe.csv", hs.str());
  a.add("simple.csv", sc.str());
  a.add_json("summary.json", {{"classes", census.classes.size()},
                              {"shortest_length", jnum(shortest)},
                              {"growth_fit", fit},
                              {"horseshoe_digit_bound", cfg.digit_bound},
                              {"horseshoe_max_height", worst_height},
                              {"height_bound", height_bound(cfg.digit_bound)},
                              {"h_star", h_star},
                              {"non_simple_min_height", ns_min},
                              {"wp_moduli_area_recorded", kWpModuliArea},
                              {"fundamental_domain_area", fundamental_domain_area(MetricBackend::hyperbolic())},
                              {"counting", "primitive classes; a class and its inverse count separately"},
                              {"assertions", r.assertions}});
  r.summary = "spectrum: " + std::to_string(census.classes.size()) + " classes up to T = " + brief(cfg.t_max) +
              (fit.is_null() ? std::string(", no fit") : ", slope " + brief(fit["slope"].get<double>()));
  return r;
}

RunResult run_recur(const ExperimentConfig& cfg, Artifacts& a) {
  const MetricBackend b = MetricBackend::from_id(cfg.backend);
  const RecurrenceStats st = recurrence_mc(b, cfg.samples, cfg.t_horizon, cfg.delta, *cfg.seed, pool(cfg));
  RunResult r;
  Csv ret{"sample", "return_time"};
  double sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < st.return_times.size(); ++i) {
    ret.row(i, st.return_times[i]);
    if (std::isfinite(st.return_times[i])) {
      sum += st.return_times[i];
      ++finite;
    }
  }
  Csv frac{"T", "fraction"};
  bool monotone = true;
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double T = cfg.t_horizon * i / 100.0;
    const double f = st.recurrent_fraction(T);
    frac.row(T, f);
    if (f < prev) monotone = false;
    prev = f;
  }
  r.assertions["fraction_monotone"] = monotone;
  r.assertions["no_sample_errors"] = st.errors.empty();
  a.add("returns.csv", ret.str());
  a.add("fraction.csv", frac.str());
  a.add_json("summary.json", {{"samples", st.return_times.size()},
                              {"delta", cfg.delta},
                              {"t_horizon", cfg.t_horizon},
                              {"recurrent_fraction", st.recurrent_fraction(cfg.t_horizon)},
                              {"mean_return_time_of_returns", finite ? jnum(sum / finite) : json(nullptr)},
                              {"errors", st.errors},
                              {"assertions", r.assertions}});
  r.summary = "recur: fraction " + brief(st.recurrent_fraction(cfg.t_horizon)) + " by T = " + brief(cfg.t_horizon) +
              " (delta " + brief(cfg.delta) + ", " + std::to_string(cfg.samples) + " samples)";
  return r;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.subcommand == "report") return report(cfg.inputs, cfg.out);
  Artifacts a;
  RunResult r;
  if (cfg.subcommand == "geodesic") r = run_geodesic(cfg, a);
  else if (cfg.subcommand == "twist") r = run_twist(cfg, a);
  else if (cfg.subcommand == "shadow") r = run_shadow(cfg, a);
  else if (cfg.subcommand == "dense") r = run_dense(cfg, a);
  else if (cfg.subcommand == "spectrum") r = run_spectrum(cfg, a);
  else r = run_recur(cfg, a);
  r.exit_code = all_true(r.assertions) ? kOk : kAssertionFailed;
  commit(cfg, a, r);
  return r;
}

namespace {

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ManifestMismatch("missing " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ManifestMismatch(p.string() + ": " + e.what());
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ManifestMismatch("missing " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string major(const std::string& v) { return v.substr(0, v.find('.')); }

}  // namespace

RunResult report(const std::vector<fs::path>& inputs_in, const fs::path& out) {
  std::vector<fs::path> inputs = inputs_in;
  std::sort(inputs.begin(), inputs.end());
  RunResult r;
  std::ostringstream md;
  json runs = json::array(), failed = json::array(), warnings = json::array();
  md << "# cusped_flow report\n\n";
  if (inputs.empty()) {
    warnings.push_back("no inputs");
    md << "warning: no inputs\n";
  }

  struct ShadowPoint {
    double ea, max_F, ratio;
    std::string run;
    std::int64_t trial;
  };
  std::vector<ShadowPoint> shadow;
  std::map<std::string, std::vector<double>> shadow_by_run;
  std::vector<std::tuple<int, std::string, double>> coverage;
  for (const auto& dir : inputs) {
    const json m = read_json(dir / "manifest.json");
    if (!m.contains("schema_version") || m["schema_version"] != kSchemaVersion)
      throw ManifestMismatch(dir.string() + ": schema version differs from " + std::to_string(kSchemaVersion));
    if (major(m.value("engine_version", "")) != major(kEngineVersion))
      throw ManifestMismatch(dir.string() + ": engine version " + m.value("engine_version", "?") +
                             " is incompatible with " + kEngineVersion);
    const std::string name = dir.generic_string();
    const std::string sub = m["subcommand"];
    md << "## " << name << " (" << sub << ")\n\n";
    md << "config: `" << m["config"].dump() << "`\n\n";
    md << m.value("summary", "") << "\n\n";
    for (const auto& [k, v] : m["assertions"].items()) {
      md << "- " << (v.get<bool>() ? "PASS " : "FAIL ") << k << "\n";
      if (!v.get<bool>()) failed.push_back(name + ": " + k);
    }
    md << "\n";
    runs.push_back({{"input", name}, {"subcommand", sub}, {"config", m["config"]}, {"assertions", m["assertions"]}});
    if (sub == "shadow") {
      for (const auto& row : read_csv(dir / "shadow.csv")) {
        const double ea = std::stod(row[1]), F = std::stod(row[2]), B = std::stod(row[3]);
        shadow.push_back({ea, F, F / B, name, std::stoll(row[0])});
        shadow_by_run[name].push_back(F);
      }
    } else if (sub == "dense") {
      for (const auto& row : read_csv(dir / "coverage.csv")) coverage.emplace_back(std::stoi(row[0]), name, std::stod(row[1]));
    }
  }

  std::map<std::string, std::string> files;
  if (!shadow.empty()) {
    std::sort(shadow.begin(), shadow.end(), [](const ShadowPoint& a, const ShadowPoint& b) {
      return std::tie(a.ea, a.run, a.trial) < std::tie(b.ea, b.run, b.trial);
    });
    Csv rows{"run", "trial", "ea_total", "max_F", "ratio"};
    std::vector<double> all_F, all_ratio;
    for (const auto& p : shadow) {
      rows.row(p.run, p.trial, p.ea, p.max_F, p.ratio);
      all_F.push_back(p.max_F);
      all_ratio.push_back(p.ratio);
    }
    Csv q{"run", "count", "min", "q25", "median", "q75", "max"};
    for (const auto& [run, F] : shadow_by_run) {
      const Quantiles s = quantiles(F);
      q.row(run, F.size(), s.min, s.q25, s.median, s.q75, s.max);
    }
    const Quantiles c = quantiles(all_F);
    q.row(std::string("combined"), all_F.size(), c.min, c.q25, c.median, c.q75, c.max);
    files["shadow_rows.csv"] = rows.str();
    files["shadow_quantiles.csv"] = q.str();
    const Quantiles cr = quantiles(all_ratio);
    md << "## shadowing, combined\n\n" << all_F.size() << " trials; max_F median " << num(c.median) << ", max "
       << num(c.max) << "; max_F / bound max " << num(cr.max) << "\n\n";
  }
  if (!coverage.empty()) {
    std::sort(coverage.begin(), coverage.end());
    Csv cov{"N", "run", "coverage"};
    md << "## coverage vs N\n\n| N | run | coverage |\n|---|---|---|\n";
    for (const auto& [N, run, c] : coverage) {
      cov.row(N, run, c);
      md << "| " << N << " | " << run << " | " << num(c) << " |\n";
    }
    md << "\n";
    files["coverage_vs_N.csv"] = cov.str();
  }
  if (!failed.empty()) {
    md << "## failed assertions\n\n";
    for (const auto& f : failed) md << "- " << f.get<std::string>() << "\n";
  }
  files["report.md"] = md.str();
  files["report.json"] = json({{"runs", runs}, {"failed_assertions", failed}, {"warnings", warnings}}).dump(2) + "\n";

  fs::create_directories(out);
  for (const auto& [name, data] : files) write_atomic(out / name, data);
  r.assertions = json::object();
  r.summary = "report: " + std::to_string(inputs.size()) + " runs, " + std::to_string(failed.size()) +
              " failed assertions" + (inputs.empty() ? " (warning: no inputs)" : "");
  return r;
}

namespace {

void add_common(CLI::App* sc, ExperimentConfig& cfg, bool backend = true) {
  if (backend) sc->add_option("--backend", cfg.backend, "hyperbolic or wp_cusp_model");
  sc->add_option("--seed", cfg.seed, "seed for randomized runs");
  sc->add_option("--out", cfg.out, "output directory");
  sc->add_option("--workers", cfg.workers, "worker threads (default: CUSPED_FLOW_WORKERS or hardware)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cusped_flow: geodesic flow experiments on cusped surfaces"};
  app.set_config("--config", "", "key = value config file mirroring the flags");
  app.require_subcommand(1);
  ExperimentConfig cfg;

  auto* geo = app.add_subcommand("geodesic", "integrate a geodesic or solve a chord");
  add_common(geo, cfg);
  geo->add_option("--x", cfg.x);
  geo->add_option("--y", cfg.y);
  geo->add_option("--angle", cfg.angle, "counterclockwise from the second axis");
  geo->add_option("--length", cfg.length);
  geo->add_option("--to-x", cfg.to_x);
  geo->add_option("--to-y", cfg.to_y);
  geo->add_option("--tol-bvp", cfg.tol_bvp);

  auto* tw = app.add_subcommand("twist", "twist scan past the cusp");
  add_common(tw, cfg);
  tw->add_option("--p1-x", cfg.p1_x);
  tw->add_option("--p1-y", cfg.p1_y);
  tw->add_option("--p2-x", cfg.p2_x);
  tw->add_option("--p2-y", cfg.p2_y);
  tw->add_option("--n-min", cfg.n_min);
  tw->add_option("--n-max", cfg.n_max);

  auto* sh = app.add_subcommand("shadow", "shadowing bound over random concatenations");
  add_common(sh, cfg, false);
  sh->add_option("--trials", cfg.trials);
  sh->add_option("--ea-max", cfg.ea_max);
  sh->add_option("--family", cfg.family, "random_polyline or twisting");

  auto* de = app.add_subcommand("dense", "chordal limit of a concatenation of singular geodesics");
  add_common(de, cfg, false);
  de->add_option("--pieces", cfg.pieces);
  de->add_option("--delta1", cfg.delta1);
  de->add_option("--delta2", cfg.delta2);
  de->add_option("--eps0", cfg.eps0);
  de->add_option("--coverage-eps", cfg.coverage_eps);
  de->add_option("--n-values", cfg.n_values)->delimiter(',');
  de->add_option("--half-widths", cfg.half_widths)->delimiter(',');
  de->add_option("--tol-limit", cfg.tol_limit);

  auto* sp = app.add_subcommand("spectrum", "closed-geodesic census, growth, horseshoes, simple classes");
  add_common(sp, cfg, false);
  sp->add_option("--t-max", cfg.t_max);
  sp->add_option("--fit-t0", cfg.fit_t0);
  sp->add_option("--fit-t1", cfg.fit_t1);
  sp->add_option("--digit-bound", cfg.digit_bound);
  sp->add_option("--k-max", cfg.k_max);
  sp->add_option("--q-max", cfg.q_max);

  auto* re = app.add_subcommand("recur", "first-return Monte Carlo");
  add_common(re, cfg);
  re->add_option("--samples", cfg.samples);
  re->add_option("--t-horizon", cfg.t_horizon);
  re->add_option("--delta", cfg.delta);

  auto* rp = app.add_subcommand("report", "merge artifact directories");
  rp->add_option("--out", cfg.out, "output directory");
  rp->add_option("inputs", cfg.inputs, "artifact directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    const RunResult r = run(cfg);
    std::cout << r.summary << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ManifestMismatch& e) {
    std::cerr << "manifest mismatch: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << cfg.subcommand << " failed: " << e.what() << "\n";
    return kAssertionFailed;
  }
}

}  // namespace cusped::cli
