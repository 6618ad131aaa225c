#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfwave/config.hpp"

namespace sfwave {

/// Library version string (matches the CMake project version).
const char* version();

struct OutputFile {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string kind;  // "sweep" or "diagnostics"
  std::string config_name;
  std::string config_hash;  // SHA-256 of the canonical config JSON
  std::uint64_t base_seed = 0;
  std::vector<std::string> streams;  // purpose tags drawn from the base seed
  std::string version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<OutputFile> outputs;

  [[nodiscard]] std::string to_json() const;
};

/// Frozen F̄ for the config: closed form, or an empirical μ-sample.
AveragedDrift prepare_fbar(const ExperimentConfig& cfg);

struct SweepOutcome {
  std::vector<WeakErrorPoint> points;
  OrderFit fit;
  std::optional<CorrectorEstimate> corrector;
  std::optional<ResidualReport> residual;
  std::optional<LinearSlope> small_eps_slope;  // over the three smallest ε
  RunManifest manifest;                        // populated by run_sweep only
};

/// Weak-error sweep, order fit, corrector and residual without touching disk.
SweepOutcome compute_sweep(const ExperimentConfig& cfg);

/// compute_sweep, then writes sweep.csv, report.json and manifest.json into
/// out_dir. Nothing is left behind in out_dir if any step fails.
SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

/// Contraction, invariant statistics, decay check, graph norm and the
/// derivative exchange check as one JSON document.
std::string compute_diagnostics(const ExperimentConfig& cfg);

/// compute_diagnostics, then writes diagnostics.json and diagnostics_manifest.json.
RunManifest run_diagnostics(const ExperimentConfig& cfg, const std::string& out_dir);

/// CSV with header `epsilon, mean_diff, stderr, replicas, seed`; doubles as %.17g.
std::string sweep_csv(const std::vector<WeakErrorPoint>& points);
/// JSON report with slope, intercept, r_squared, u1, u1_ci and r_eps_table.
std::string sweep_report_json(const SweepOutcome& outcome);

/// JSON export of F̄ at u = x₁: the frozen drift, plus the oracle and an
/// ergodic estimate with node-wise standard errors where available.
std::string fbar_json(const ExperimentConfig& cfg, std::size_t samples);

/// Fast trajectory from y₀ as CSV (t, mode_1..mode_N).
std::string fast_trajectory_csv(const ExperimentConfig& cfg, double horizon, double h,
                                std::size_t snapshot_every);

std::string sha256_hex(std::string_view data);
std::string format_double(double x);  // shortest round-trip-safe %.17g

/// Writes files into one directory atomically as a group: content goes to
/// temporaries that are renamed on commit(), and removed if never committed.
class OutputSession {
 public:
  explicit OutputSession(std::string dir);
  ~OutputSession();
  OutputSession(const OutputSession&) = delete;
  OutputSession& operator=(const OutputSession&) = delete;

  OutputFile add(const std::string& name, const std::string& content);
  void commit();

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> pending_;  // temp path, final path
  bool committed_ = false;
};

}  // namespace sfwave
