#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cusped/cli.hpp"
#include "cusped/errors.hpp"
#include "cusped/spectrum.hpp"

using namespace cusped;
using namespace cusped::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cusped_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "cusped_flow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

ExperimentConfig shadow_config(const fs::path& out, std::uint64_t seed, std::int64_t trials = 30) {
  ExperimentConfig c;
  c.subcommand = "shadow";
  c.seed = seed;
  c.trials = trials;
  c.out = out;
  c.workers = 2;
  return c;
}

}  // namespace

TEST(Cli, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ShadowRunWritesArtifactsAndManifest) {
  const auto out = scratch("shadow");
  const RunResult r = run(shadow_config(out, 7));
  EXPECT_EQ(r.exit_code, kOk);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["schema_version"], kSchemaVersion);
  EXPECT_EQ(manifest["config"]["seed"], 7);
  for (const auto& [name, hash] : manifest["outputs"].items()) EXPECT_EQ(sha256_hex(slurp(out / name)), hash) << name;
  EXPECT_TRUE(manifest["created"].contains("timestamp"));
  const std::string csv = slurp(out / "shadow.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,ea_total,max_F,bound,pass");
  for (const auto& e : fs::directory_iterator(out)) EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos);
}

TEST(Cli, SameSeedByteIdenticalAcrossWorkerCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = shadow_config(a, 11), cb = shadow_config(b, 11);
  cb.workers = 5;
  run(ca);
  run(cb);
  for (const char* f : {"shadow.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  EXPECT_EQ(ma["outputs"], mb["outputs"]);
}

TEST(Cli, MissingSeedIsConfigError) {
  ExperimentConfig c = shadow_config(scratch("noseed"), 1);
  c.seed.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(run_main({"shadow", "--trials", "5", "--out", scratch("noseed2").string()}), kConfigError);
  EXPECT_EQ(run_main({"recur", "--samples", "5"}), kConfigError);
  EXPECT_EQ(run_main({"dense"}), kConfigError);
}

TEST(Cli, ValidationNamesTheField) {
  ExperimentConfig c;
  c.subcommand = "dense";
  c.seed = 1;
  c.delta1 = 0.3;
  c.delta2 = 0.2;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("delta1:", 0), 0u) << e.what();
  }
  c = ExperimentConfig{};
  c.subcommand = "geodesic";
  c.tol_bvp = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.subcommand = "nope";
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(run_main({"shadow", "--trials", "x"}), kConfigError);
  EXPECT_EQ(run_main({}), kConfigError);
}

TEST(Cli, ShadowEndToEndThroughMain) {
  const auto out = scratch("main_shadow");
  EXPECT_EQ(run_main({"shadow", "--trials", "200", "--ea-max", "0.1", "--seed", "7", "--out", out.string()}), kOk);
  EXPECT_TRUE(fs::exists(out / "shadow.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
}

TEST(Cli, ConfigFileMirrorsFlags) {
  const auto dir = scratch("cfgfile");
  fs::create_directories(dir);
  const fs::path ini = dir / "run.ini";
  std::ofstream(ini) << "[shadow]\ntrials = 12\nseed = 4\nout = " << (dir / "out").string() << "\n";
  EXPECT_EQ(run_main({"--config", ini.string(), "shadow"}), kOk);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["config"]["trials"], 12);
  EXPECT_EQ(manifest["config"]["seed"], 4);
}

TEST(Cli, SpectrumWritesCensusLinesAndCounts) {
  const auto out = scratch("spectrum");
  ExperimentConfig c;
  c.subcommand = "spectrum";
  c.t_max = 8.0;
  c.fit_t0 = 5.0;
  c.fit_t1 = 8.0;
  c.k_max = 6;
  c.q_max = 8;
  c.out = out;
  EXPECT_EQ(run(c).exit_code, kOk);
  std::ifstream f(out / "census.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("trace") && j.contains("length") && j.contains("cf_period") && j.contains("simple"));
    ++n;
  }
  EXPECT_EQ(n, enumerate_closed_geodesics(8.0).classes.size());
  EXPECT_TRUE(fs::exists(out / "counts.csv"));
}

TEST(Cli, GeodesicAndTwistCheckClosedForms) {
  ExperimentConfig g;
  g.subcommand = "geodesic";
  g.angle = 0.4;
  g.length = 2.5;
  g.out = scratch("geo");
  const RunResult rg = run(g);
  EXPECT_EQ(rg.exit_code, kOk);
  EXPECT_TRUE(rg.assertions["closed_form_endpoint"].get<bool>());

  ExperimentConfig t;
  t.subcommand = "twist";
  t.n_max = 16;
  t.out = scratch("twist");
  const RunResult rt = run(t);
  EXPECT_EQ(rt.exit_code, kOk);
  EXPECT_TRUE(rt.assertions["closed_form_gap"].get<bool>());
}

TEST(Cli, RecurRejectsCuspModel) {
  EXPECT_EQ(run_main({"recur", "--backend", "wp_cusp_model", "--seed", "1", "--out", scratch("rwp").string()}),
            kConfigError);
}

TEST(Cli, ReportMergesShadowRuns) {
  const auto a = scratch("rep_a"), b = scratch("rep_b"), out = scratch("rep_out");
  run(shadow_config(a, 1, 10));
  run(shadow_config(b, 2, 15));
  const RunResult r = report({b, a}, out);
  EXPECT_EQ(r.exit_code, kOk);
  std::ifstream q(out / "shadow_quantiles.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(q, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines.back().rfind("combined,25,", 0), 0u);
  const std::string first = slurp(out / "report.md");
  report({a, b}, out);
  EXPECT_EQ(slurp(out / "report.md"), first);
}

TEST(Cli, ReportRejectsIncompatibleManifest) {
  const auto a = scratch("mm_a");
  run(shadow_config(a, 1, 5));
  auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  m["engine_version"] = "0.1.0";
  write_atomic(a / "manifest.json", m.dump());
  EXPECT_THROW(report({a}, scratch("mm_out")), ManifestMismatch);
  EXPECT_EQ(run_main({"report", "--out", scratch("mm_out2").string(), a.string()}), kConfigError);
}

TEST(Cli, EmptyReportWarns) {
  const auto out = scratch("rep_empty");
  const RunResult r = report({}, out);
  EXPECT_EQ(r.exit_code, kOk);
  EXPECT_NE(slurp(out / "report.md").find("warning: no inputs"), std::string::npos);
}

TEST(Cli, WriteAtomicReplaces) {
  const auto dir = scratch("atomic");
  fs::create_directories(dir);
  write_atomic(dir / "f.txt", "one");
  write_atomic(dir / "f.txt", "two");
  EXPECT_EQ(slurp(dir / "f.txt"), "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(write_atomic(dir / "missing" / "f.txt", "x"), Error);
}
