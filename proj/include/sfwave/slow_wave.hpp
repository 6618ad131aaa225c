#pragma once

#include <cstdint>
#include <vector>

#include "sfwave/fast_process.hpp"
#include "sfwave/system.hpp"

namespace sfwave {

/// How the fast process enters the frozen drift of one slow step.
enum class DriftSampling {
  left_endpoint,  // Y read once, at the left endpoint of the slow step
  micro_steps,    // Y read at the left endpoint of every fast sub-step
};

struct MultiscaleConfig {
  double epsilon = 1.0;
  double h_slow = 1e-2;
  std::uint32_t micro_ratio = 8;
  double T = 1.0;
  /// Largest admissible fast step on the fast clock; <= 0 selects the
  /// default (0.1/α_N, or unbounded when g ≡ 0 since the step is then exact).
  double max_fast_step = 0.0;
  /// Raise micro_ratio to honour max_fast_step instead of rejecting the config.
  bool adaptive_micro = true;
  DriftSampling drift_sampling = DriftSampling::left_endpoint;

  void validate() const;
  [[nodiscard]] std::size_t slow_steps() const;
  [[nodiscard]] double slow_step() const;  // T / slow_steps()
};

/// Resolved fast-clock bound for `spec`.
double fast_step_bound(const MultiscaleConfig& cfg, const SystemSpec& spec);
/// micro_ratio after applying the stability bound; throws ConfigError when
/// the bound is violated and adaptation is disabled.
std::uint32_t effective_micro_ratio(const MultiscaleConfig& cfg, const SystemSpec& spec);

struct SlowPath {
  std::vector<double> times;
  std::vector<WaveState> snapshots;
  WaveState terminal;
};

/// Per-mode trigonometric step of the wave equation with frozen drift:
///   x⁺ = S_h x + ∫_a^b S_{h-s} B ds · drift + noise.
class WaveStepper {
 public:
  WaveStepper(const SpectralBasis& basis, double h, const QWienerSpec& q1, double sigma1);

  [[nodiscard]] double step_size() const { return h_; }
  [[nodiscard]] std::size_t normals_needed() const { return noise_.normals_needed(); }

  /// Per-mode weights of ∫_a^b S_{h-s} B ds for 0 <= a <= b <= h.
  void drift_weights(double a, double b, std::span<double> wu, std::span<double> wv) const;

  /// x ← S_h x + (kick_u, kick_v) + noise(normals).
  void advance(WaveState& x, std::span<const double> kick_u, std::span<const double> kick_v,
               std::span<const double> normals) const;
  /// Noise-free variant used by the variational flow.
  void advance_linear(WaveState& x, std::span<const double> kick_u,
                      std::span<const double> kick_v) const;

  [[nodiscard]] const std::vector<double>& full_weight_u() const { return psi_u_; }
  [[nodiscard]] const std::vector<double>& full_weight_v() const { return psi_v_; }

 private:
  double h_;
  std::vector<double> omega_, cos_, sin_, psi_u_, psi_v_;
  WaveConvolution noise_;
};

/// x⁺ = S_h x + Ψ_h(drift) + noise_sample, with Ψ_h the exact integrated
/// group action on a drift entering the velocity component.
WaveState step_slow(const WaveState& x, const SpectralField& drift, double h,
                    const SpectralBasis& basis, const WaveState& noise_sample);

struct PathOptions {
  std::size_t snapshot_every = 0;  // 0: terminal state only
};

/// Slow wave coupled to Y_{t/ε}. Noise is addressed by (seed, replica): the
/// W¹ stream is independent of ε, the W² stream is salted by ε.
SlowPath simulate_coupled(const WaveState& x0, const SpectralField& y0, const MultiscaleConfig& cfg,
                          const SystemSpec& spec, std::uint64_t seed, std::uint32_t replica,
                          const PathOptions& options = {});

/// Averaged system with drift F̄(U); consumes the same W¹ stream as
/// simulate_coupled for the same (seed, replica).
SlowPath simulate_averaged(const WaveState& x0, const MultiscaleConfig& cfg,
                           const AveragedDrift& fbar, const SystemSpec& spec, std::uint64_t seed,
                           std::uint32_t replica, const PathOptions& options = {});

/// Stream carrying W¹ for one replica.
RngStream slow_noise_stream(std::uint64_t seed, std::uint32_t replica);
/// Stream carrying W² for one replica at a given ε.
RngStream fast_noise_stream(std::uint64_t seed, double epsilon, std::uint32_t replica);

struct GraphNormPoint {
  double t = 0.0;
  double value = 0.0;  // ‖V_t‖² + ‖U_t‖₁²
};

std::vector<GraphNormPoint> graph_norm_diagnostic(const SlowPath& path, const SpectralBasis& basis);

}  // namespace sfwave
