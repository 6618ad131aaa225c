#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfwave/slow_wave.hpp"

namespace sfwave {

/// Bounded observable φ: H → ℝ with bounded derivatives of every order.
struct TestFunctional {
  enum class Kind { bounded_projection, gaussian_bump };

  Kind kind = Kind::bounded_projection;
  SpectralField direction;  // w, bounded_projection only
  double phase = 0.0;       // c, bounded_projection only

  static TestFunctional projection(SpectralField w, double c);
  static TestFunctional bump();

  /// sin((u, w) + c)  or  exp(-‖u‖²/2)
  [[nodiscard]] double value(const SpectralField& u) const;
  /// φ'(u)·z
  [[nodiscard]] double derivative(const SpectralField& u, const SpectralField& z) const;
};

/// Mean/variance accumulator with the pairwise (Chan et al.) merge, so a
/// fixed merge order gives results independent of thread scheduling.
struct RunningStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x);
  void merge(const RunningStats& other);
  [[nodiscard]] double variance() const;  // unbiased
  [[nodiscard]] double stderr_of_mean() const;
};

struct WeakErrorPoint {
  double epsilon = 0.0;
  double mean_diff = 0.0;  // E φ(U^ε_T) - E φ(Ū_T)
  double stderr = 0.0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
};

struct MonteCarloOptions {
  std::size_t replicas = 256;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Share W¹ between the coupled and averaged runs. Disabling it gives the
  /// independent-noise estimator used to quantify the variance reduction.
  bool common_random_numbers = true;
};

WeakErrorPoint weak_error(const TestFunctional& phi, const WaveState& x0, const SpectralField& y0,
                          double epsilon, const MultiscaleConfig& cfg, const SystemSpec& spec,
                          const AveragedDrift& fbar, const MonteCarloOptions& mc);

/// weak_error over several ε, running the (ε-independent) averaged replicas once.
std::vector<WeakErrorPoint> weak_error_sweep(const TestFunctional& phi, const WaveState& x0,
                                             const SpectralField& y0,
                                             const std::vector<double>& epsilons,
                                             const MultiscaleConfig& cfg, const SystemSpec& spec,
                                             const AveragedDrift& fbar, const MonteCarloOptions& mc);

struct OrderFit {
  bool conclusive = false;
  double slope = 0.0;
  double intercept = 0.0;  // of log|mean_diff| against log ε
  double r_squared = 0.0;
  std::vector<double> used_epsilons;
  std::vector<double> excluded_epsilons;  // |mean_diff| <= 2·stderr
};

/// Least-squares fit of log|mean_diff| against log ε over points above the
/// noise floor; inconclusive (not an error) with fewer than 3 such points.
OrderFit order_fit(const std::vector<WeakErrorPoint>& points);

struct DecayReport {
  std::vector<double> times;
  std::vector<double> distance;     // bias-corrected ‖F̄(u) - E F(u, Y_t(y))‖²
  std::vector<double> noise_floor;  // Σ_k Var_k / n at each t
  std::optional<double> fitted_rate;
  std::size_t points_used = 0;
};

/// Inner Monte Carlo over fast trajectories started at y; the rate is fitted
/// over points at least 10× above the noise floor.
DecayReport fbar_decay_check(const SystemSpec& spec, const AveragedDrift& fbar,
                             const SpectralField& u, const SpectralField& y,
                             const std::vector<double>& t_grid, std::size_t inner_replicas,
                             std::uint64_t seed, double h_fast = 0.0);

struct DerivativeEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

/// Per-replica samples of φ'(Ū_T)·Π₁η_T^{h,x} for each direction h, where η
/// is the first variation integrated along the averaged path with the same
/// trigonometric scheme. Row-major [replica][direction].
std::vector<double> variational_samples(const TestFunctional& phi, const WaveState& x0,
                                        const std::vector<WaveState>& directions,
                                        const MultiscaleConfig& cfg, const AveragedDrift& fbar,
                                        const SystemSpec& spec, const MonteCarloOptions& mc);

/// D_x ū(T, x)·h = E[φ'(Ū_T)·Π₁η_T^{h,x}].
DerivativeEstimate directional_derivative_ubar(const TestFunctional& phi, const WaveState& x0,
                                               const WaveState& direction,
                                               const MultiscaleConfig& cfg,
                                               const AveragedDrift& fbar, const SystemSpec& spec,
                                               const MonteCarloOptions& mc);

struct CorrectorOptions {
  double tol = 1e-3;                 // tail bound e^{-η s_max / 2}
  std::size_t inner_replicas = 2048;  // fast trajectories for the discrepancy integral
  std::size_t batches = 8;           // inner batches, one variational direction each
  std::size_t quadrature_nodes = 256;
  double h_fast = 0.0;               // max fast step for non-OU reactions (0: 0.1/α_N)
};

struct CorrectorEstimate {
  double u1_value = 0.0;
  double stderr = 0.0;
  double ci_halfwidth = 0.0;  // 95%
  double s_max = 0.0;
  std::size_t inner_replicas = 0;
  std::size_t outer_replicas = 0;
  SpectralField discrepancy;  // v = ∫_0^{s_max} (E F(x₁, Y_s(y)) - F̄(x₁)) ds
};

/// First-order corrector u₁(T, x, y) = D_x ū(T, x)·(0, v), with v the
/// integrated excess of the coupled drift over F̄ along the fast transient.
/// Sign convention: E φ(U^ε_T) - E φ(Ū_T) ≈ ε u₁.
CorrectorEstimate corrector_u1(const TestFunctional& phi, const WaveState& x0,
                               const SpectralField& y0, const MultiscaleConfig& cfg,
                               const SystemSpec& spec, const AveragedDrift& fbar,
                               const CorrectorOptions& options, const MonteCarloOptions& mc);

struct ResidualRow {
  double epsilon = 0.0;
  double mean_diff = 0.0;
  double r_eps = 0.0;  // mean_diff - ε u₁
  double stderr = 0.0;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  bool correction_not_worse = false;  // smallest ε: |r| <= |mean_diff| + 2·combined stderr
};

ResidualReport expansion_residual(const std::vector<WeakErrorPoint>& points,
                                  const CorrectorEstimate& corrector);

struct LinearSlope {
  double slope = 0.0;
  double stderr = 0.0;
};

/// Least-squares slope (with intercept) of mean_diff against ε, unlogged,
/// over the `count` smallest ε; stderr propagated from the point stderrs.
LinearSlope small_epsilon_slope(const std::vector<WeakErrorPoint>& points, std::size_t count = 3);

/// Runs body(chunk_index) for every chunk on up to `threads` workers.
void parallel_chunks(std::size_t chunks, unsigned threads,
                     const std::function<void(std::size_t)>& body);

}  // namespace sfwave
