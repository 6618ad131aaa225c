#pragma once

#include <optional>
#include <vector>

#include "sfwave/rng.hpp"
#include "sfwave/system.hpp"

namespace sfwave {

struct FastState {
  SpectralField y;
  double tau = 0.0;         // elapsed fast time
  std::uint32_t steps = 0;  // steps taken; doubles as the noise address
};

/// One exponential-Euler step of the fast equation with exact noise:
///   Y⁺ = E_h (Y + h g(Y)) + σ₂ ∫_0^h E_{h-s} dW².
/// Precomputes everything that depends on h only.
class FastStepper {
 public:
  FastStepper(const SystemSpec& spec, double h);

  [[nodiscard]] double step_size() const { return h_; }

  /// Advances y in place; `normals` holds one standard normal per mode.
  void advance(std::span<double> y, std::span<const double> normals) const;

 private:
  double h_;
  ReactionSpec reaction_;
  Collocation grid_;
  std::vector<double> decay_;
  HeatConvolution conv_;
  mutable std::vector<double> nodes_;
  mutable std::vector<double> g_coeffs_;
};

FastState step_fast(const FastState& state, double h, const SystemSpec& spec, const RngStream& rng);

struct FastTrajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
};

/// Runs ⌈T/h⌉ uniform steps (step size T/⌈T/h⌉). Snapshots every
/// `snapshot_every` steps when a trajectory is supplied.
FastState simulate_fast(const FastState& y0, double T, double h, const SystemSpec& spec,
                        const RngStream& rng, FastTrajectory* trajectory = nullptr,
                        std::size_t snapshot_every = 1);

struct ContractionCurve {
  std::vector<double> times;
  std::vector<double> squared_distance;              // ‖Y_t(y) - Y_t(y')‖²
  std::vector<std::vector<double>> mode_squared;     // per-mode (Y_t(y) - Y_t(y'))_k²
  std::optional<double> fitted_rate;                 // -slope of log ‖·‖² vs t
};

/// Two trajectories driven by the same noise path.
ContractionCurve contraction_diagnostic(const SpectralField& y, const SpectralField& y2, double T,
                                        double h, const SystemSpec& spec, const RngStream& rng);

struct InvariantSample {
  std::vector<SpectralField> samples;
  double burn_in = 0.0;
  double thinning = 0.0;

  [[nodiscard]] std::vector<double> mode_means() const;
  [[nodiscard]] std::vector<double> mode_variances() const;
  [[nodiscard]] double mean_square_norm() const;
};

double default_burn_in(const SystemSpec& spec);   // 10/η
double default_thinning(const SystemSpec& spec);  // 1/η

/// n fields from one trajectory started at 0, after `burn_in`, spaced by
/// `thin`. Rejects a spec violating L_g < α₁ before simulating.
InvariantSample sample_invariant(const SystemSpec& spec, double burn_in, std::size_t n, double thin,
                                 double h, const RngStream& rng);

}  // namespace sfwave
