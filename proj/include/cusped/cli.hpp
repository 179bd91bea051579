#pragma once

// Experiment runner behind the cusped_flow tool: configs, subcommands,
// artifacts with manifests, and the merged report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cusped::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kEngineVersion = "1.0.0";

enum Exit { kOk = 0, kAssertionFailed = 1, kConfigError = 2 };

struct ExperimentConfig {
  std::string subcommand;
  std::string backend = "hyperbolic";
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  unsigned workers = 0;  // 0: CUSPED_FLOW_WORKERS or hardware

  // geodesic: integrate from (x, y) at angle for length, or solve the chord to (to_x, to_y)
  double x = 0.0, y = 1.0, angle = 0.0, length = 1.0;
  std::optional<double> to_x, to_y;
  double tol_bvp = 1e-8;

  // twist
  double p1_x = 0.0, p1_y = 1.0, p2_x = 0.0, p2_y = 1.0;
  std::int64_t n_min = 1, n_max = 64;

  // shadow
  std::int64_t trials = 200;
  double ea_max = 0.1;
  std::string family = "random_polyline";

  // dense
  std::size_t pieces = 17;
  double delta1 = 0.5, delta2 = 0.2, eps0 = 0.1;
  double coverage_eps = 0.3;
  std::vector<int> n_values{4, 8, 12};                 // coverage chords spanning N pieces
  std::vector<std::size_t> half_widths{2, 4, 8};       // chordal limit about the middle piece
  double tol_limit = 1e-6;

  // spectrum
  double t_max = 12.0, fit_t0 = 8.0, fit_t1 = 12.0;
  int digit_bound = 3, k_max = 12, q_max = 30;

  // recur
  std::size_t samples = 1000;
  double t_horizon = 50.0, delta = 0.2;

  // report
  std::vector<std::filesystem::path> inputs;

  bool randomized() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
  // Fields that determine the subcommand's output.
  nlohmann::json to_json() const;
};

struct RunResult {
  int exit_code = kOk;
  std::string summary;  // one line
  nlohmann::json assertions = nlohmann::json::object();
};

// Writes the declared artifacts under cfg.out and a manifest.json.
RunResult run(const ExperimentConfig& cfg);
// Merges artifact directories into report.md and plot-ready CSV tables.
RunResult report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out);

// Temp file + rename in the target directory.
void write_atomic(const std::filesystem::path& path, const std::string& data);
std::string sha256_hex(const std::string& data);

int main(int argc, char** argv);

}  // namespace cusped::cli
