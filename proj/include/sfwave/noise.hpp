#pragma once

#include <vector>

#include "sfwave/rng.hpp"
#include "sfwave/spectral.hpp"

namespace sfwave {

/// Eigenvalues of a trace-class covariance Q, diagonal in the sine basis.
struct QWienerSpec {
  std::vector<double> lambdas;

  [[nodiscard]] std::size_t size() const { return lambdas.size(); }
  [[nodiscard]] double trace() const;

  /// λ_k = c k^{-p}, k = 1..n. Requires p > 1 and c >= 0.
  static QWienerSpec power_law(std::size_t n, double c, double p);
  /// Throws ConfigError on negative or non-finite entries.
  void validate(std::size_t modes) const;
};

/// Per-mode covariance of the pair (u-part, v-part) of a wave-group stochastic convolution.
struct PairCovariance {
  double uu = 0.0;
  double uv = 0.0;
  double vv = 0.0;
};

/// σ²λ (1 - e^{-2αh}) / (2α)
double heat_convolution_variance(double lambda, double sigma, double alpha, double h);

/// Covariance of σ ∫_0^h S_{h-s} B dβ for one mode with frequency ω.
PairCovariance wave_convolution_covariance(double lambda, double sigma, double omega, double h);

/// Exact per-mode sampler of σ ∫_0^h E_{h-s} dW.
class HeatConvolution {
 public:
  HeatConvolution(const QWienerSpec& q, double sigma, double h, const SpectralBasis& basis);

  /// Adds the sample driven by `normals` (one per mode) into `y`.
  void add_sample(std::span<const double> normals, std::span<double> y) const;
  [[nodiscard]] const std::vector<double>& stddev() const { return stddev_; }

 private:
  std::vector<double> stddev_;
};

/// Exact per-mode sampler of σ ∫_0^h S_{h-s} B dW via a 2×2 Cholesky factor.
class WaveConvolution {
 public:
  WaveConvolution(const QWienerSpec& q, double sigma, double h, const SpectralBasis& basis);

  /// `normals` holds 2N entries laid out as (z_u, z_v) per mode.
  void add_sample(std::span<const double> normals, std::span<double> u, std::span<double> v) const;

  [[nodiscard]] std::size_t normals_needed() const { return 2 * l11_.size(); }

 private:
  std::vector<double> l11_, l21_, l22_;
};

SpectralField sample_increment(const QWienerSpec& q, double dt, const RngStream& rng,
                               NoiseAddress addr = {});
SpectralField sample_heat_convolution(const QWienerSpec& q, double sigma, double h,
                                      const SpectralBasis& basis, const RngStream& rng,
                                      NoiseAddress addr = {});
WaveState sample_wave_convolution(const QWienerSpec& q, double sigma, double h,
                                  const SpectralBasis& basis, const RngStream& rng,
                                  NoiseAddress addr = {});

}  // namespace sfwave
