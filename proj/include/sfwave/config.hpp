#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfwave/analysis.hpp"
#include "sfwave/errors.hpp"

namespace sfwave {

struct InitialData {
  std::string preset;  // "single_mode", "smooth_bump" or empty for explicit lists
  WaveState x;         // (x₁, x₂)
  SpectralField y;
};

struct SweepSettings {
  std::vector<double> epsilons;
  std::size_t replicas = 256;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool common_random_numbers = true;
};

struct FbarSettings {
  enum class Mode { oracle, ergodic };
  Mode mode = Mode::oracle;
  double burn_in = 0.0;  // <= 0: 10/η
  std::size_t n = 4096;
  double thin = 0.0;     // <= 0: 1/η
  double h_fast = 0.0;   // <= 0: exact step for OU, 0.1/α_N otherwise
};

struct CorrectorSettings {
  bool enabled = true;
  CorrectorOptions options;
  std::size_t outer_replicas = 0;  // 0: sweep.replicas
};

struct DiagnosticsSettings {
  double fast_h = 0.01;
  double contraction_T = 1.0;
  std::size_t invariant_samples = 10000;
  std::size_t decay_inner_replicas = 1024;
  std::size_t decay_points = 12;
  double decay_horizon = 0.0;  // <= 0: 3/η
  std::size_t exchange_samples = 1024;
  std::size_t graph_snapshot_every = 10;
};

struct ExperimentConfig {
  std::string name;
  SystemSpec system;
  MultiscaleConfig numerics;  // epsilon is set per sweep point
  InitialData initial;
  SweepSettings sweep;
  TestFunctional functional;
  FbarSettings fbar;
  CorrectorSettings corrector;
  DiagnosticsSettings diagnostics;
  /// Canonical JSON after preset expansion and overrides; hashed into manifests.
  std::string canonical;

  [[nodiscard]] MonteCarloOptions monte_carlo() const;
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

struct ConfigParse {
  ExperimentConfig config;
  std::vector<ConfigIssue> issues;  // structural problems (types, unknown tags)
};

/// Parses JSON text. A top-level "preset" names a built-in config which the
/// remaining keys patch (RFC 7386 merge semantics).
ConfigParse parse_config(const std::string& json_text);

/// Semantic checks, each reported with its field path. Empty means valid.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg);

/// Thrown by load_config when parsing or validation reports issues.
class ConfigInvalid : public ConfigError {
 public:
  explicit ConfigInvalid(std::vector<ConfigIssue> issues);
  [[nodiscard]] const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Read, parse and validate; throws IoError or ConfigInvalid.
ExperimentConfig load_config(const std::string& path);
/// Parse and validate text; throws ConfigInvalid.
ExperimentConfig config_from_text(const std::string& json_text);

/// Re-seeds the sweep and refreshes the canonical JSON.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);
void override_threads(ExperimentConfig& cfg, unsigned threads);

std::vector<std::string> preset_names();
/// JSON text of a built-in preset; throws UsageError for unknown names.
std::string preset_json(const std::string& name);

}  // namespace sfwave
