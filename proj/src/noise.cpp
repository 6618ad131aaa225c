#include "sfwave/noise.hpp"

#include <cmath>
#include <string>

#include "sfwave/errors.hpp"

namespace sfwave {

namespace {

// z - sin(z) without cancellation for small z.
double z_minus_sin(double z) {
  if (std::abs(z) > 0.5) return z - std::sin(z);
  const double z2 = z * z;
  double term = z * z2 / 6.0;
  double sum = term;
  for (int n = 5; n <= 21; n += 2) {
    term *= -z2 / static_cast<double>((n - 1) * n);
    sum += term;
  }
  return sum;
}

}  // namespace

double QWienerSpec::trace() const {
  double t = 0.0;
  for (double l : lambdas) t += l;
  return t;
}

QWienerSpec QWienerSpec::power_law(std::size_t n, double c, double p) {
  if (!(p > 1.0)) throw ConfigError("power-law spectrum requires p > 1 (trace class)");
  if (!(c >= 0.0)) throw ConfigError("power-law spectrum requires c >= 0");
  QWienerSpec q;
  q.lambdas.resize(n);
  for (std::size_t k = 0; k < n; ++k) q.lambdas[k] = c * std::pow(static_cast<double>(k + 1), -p);
  return q;
}

void QWienerSpec::validate(std::size_t modes) const {
  if (lambdas.size() != modes) {
    throw ConfigError("spectrum has " + std::to_string(lambdas.size()) + " entries, expected " +
                      std::to_string(modes));
  }
  for (double l : lambdas) {
    if (!std::isfinite(l) || l < 0.0) throw ConfigError("spectrum entries must be finite and >= 0");
  }
}

double heat_convolution_variance(double lambda, double sigma, double alpha, double h) {
  return sigma * sigma * lambda * (-std::expm1(-2.0 * alpha * h)) / (2.0 * alpha);
}

PairCovariance wave_convolution_covariance(double lambda, double sigma, double omega, double h) {
  const double x = omega * h;
  const double scale = sigma * sigma * lambda;
  const double sin_sq_integral = z_minus_sin(2.0 * x) / (4.0 * omega);  // ∫ sin²(ωr) dr
  const double cos_sq_integral = h - sin_sq_integral;                   // ∫ cos²(ωr) dr
  const double sx = std::sin(x);
  const double sin_cos_integral = sx * sx / (2.0 * omega);  // ∫ sin(ωr) cos(ωr) dr
  PairCovariance c;
  c.uu = scale * sin_sq_integral / (omega * omega);
  c.uv = scale * sin_cos_integral / omega;
  c.vv = scale * cos_sq_integral;
  return c;
}

HeatConvolution::HeatConvolution(const QWienerSpec& q, double sigma, double h,
                                 const SpectralBasis& basis) {
  require_same_size(q.size(), basis.modes, "HeatConvolution");
  if (!(h > 0.0)) throw UsageError("heat convolution requires h > 0");
  stddev_.resize(basis.modes);
  for (std::size_t k = 0; k < basis.modes; ++k) {
    stddev_[k] = std::sqrt(heat_convolution_variance(q.lambdas[k], sigma, basis.alphas[k], h));
  }
}

void HeatConvolution::add_sample(std::span<const double> normals, std::span<double> y) const {
  for (std::size_t k = 0; k < stddev_.size(); ++k) y[k] += stddev_[k] * normals[k];
}

WaveConvolution::WaveConvolution(const QWienerSpec& q, double sigma, double h,
                                 const SpectralBasis& basis) {
  require_same_size(q.size(), basis.modes, "WaveConvolution");
  if (!(h > 0.0)) throw UsageError("wave convolution requires h > 0");
  const std::size_t n = basis.modes;
  l11_.resize(n);
  l21_.resize(n);
  l22_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto c = wave_convolution_covariance(q.lambdas[k], sigma, basis.omegas[k], h);
    if (c.uu <= 0.0) {
      l11_[k] = 0.0;
      l21_[k] = 0.0;
      l22_[k] = std::sqrt(std::max(c.vv, 0.0));
      continue;
    }
    l11_[k] = std::sqrt(c.uu);
    l21_[k] = c.uv / l11_[k];
    double schur = c.vv - l21_[k] * l21_[k];
    if (schur < 0.0) {
      if (schur < -1e-14 * c.vv) {
        throw InternalError("wave convolution covariance is not positive semidefinite at mode " +
                            std::to_string(k + 1));
      }
      schur = 0.0;
    }
    l22_[k] = std::sqrt(schur);
  }
}

void WaveConvolution::add_sample(std::span<const double> normals, std::span<double> u,
                                 std::span<double> v) const {
  for (std::size_t k = 0; k < l11_.size(); ++k) {
    const double z1 = normals[2 * k];
    const double z2 = normals[2 * k + 1];
    u[k] += l11_[k] * z1;
    v[k] += l21_[k] * z1 + l22_[k] * z2;
  }
}

SpectralField sample_increment(const QWienerSpec& q, double dt, const RngStream& rng,
                               NoiseAddress addr) {
  if (dt < 0.0) throw UsageError("sample_increment: dt must be nonnegative");
  SpectralField f(q.size());
  if (dt == 0.0) return f;
  rng.normals(addr, f.span());
  for (std::size_t k = 0; k < q.size(); ++k) f[k] *= std::sqrt(q.lambdas[k] * dt);
  return f;
}

SpectralField sample_heat_convolution(const QWienerSpec& q, double sigma, double h,
                                      const SpectralBasis& basis, const RngStream& rng,
                                      NoiseAddress addr) {
  if (!(h > 0.0)) throw UsageError("sample_heat_convolution: h must be positive");
  HeatConvolution conv(q, sigma, h, basis);
  std::vector<double> z(basis.modes);
  rng.normals(addr, z);
  SpectralField f(basis.modes);
  conv.add_sample(z, f.span());
  return f;
}

WaveState sample_wave_convolution(const QWienerSpec& q, double sigma, double h,
                                  const SpectralBasis& basis, const RngStream& rng,
                                  NoiseAddress addr) {
  if (!(h > 0.0)) throw UsageError("sample_wave_convolution: h must be positive");
  WaveConvolution conv(q, sigma, h, basis);
  std::vector<double> z(conv.normals_needed());
  rng.normals(addr, z);
  WaveState x(basis.modes);
  conv.add_sample(z, x.u.span(), x.v.span());
  return x;
}

}  // namespace sfwave
