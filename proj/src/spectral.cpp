#include "sfwave/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sfwave/errors.hpp"

namespace sfwave {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

SpectralBasis make_basis(double length, std::size_t modes) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ConfigError("basis.L must be positive and finite");
  }
  if (modes == 0) {
    throw ConfigError("basis.N must be at least 1");
  }
  SpectralBasis b;
  b.length = length;
  b.modes = modes;
  b.alphas.resize(modes);
  b.omegas.resize(modes);
  for (std::size_t i = 0; i < modes; ++i) {
    const double omega = static_cast<double>(i + 1) * std::numbers::pi / length;
    b.omegas[i] = omega;
    b.alphas[i] = omega * omega;
  }
  return b;
}

double SpectralBasis::eigenfunction(std::size_t k, double xi) const {
  return std::sqrt(2.0 / length) * std::sin(omegas[k] * xi);
}

bool SpectralField::is_finite() const {
  for (double c : coeffs) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

SpectralField SpectralField::unit(std::size_t n, std::size_t k, double value) {
  SpectralField f(n);
  f.coeffs.at(k) = value;
  return f;
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  require_same_size(a.size(), b.size(), "field addition");
  SpectralField r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + b[k];
  return r;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  require_same_size(a.size(), b.size(), "field subtraction");
  SpectralField r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
  return r;
}

SpectralField operator*(double s, const SpectralField& a) {
  SpectralField r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = s * a[k];
  return r;
}

WaveState::WaveState(SpectralField u_, SpectralField v_) : u(std::move(u_)), v(std::move(v_)) {
  require_same_size(u.size(), v.size(), "WaveState");
}

double inner(const SpectralField& a, const SpectralField& b) {
  require_same_size(a.size(), b.size(), "inner product");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

namespace {

double weighted_square(const SpectralField& f, double s, const SpectralBasis& basis) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double w = s == 0.0 ? 1.0 : std::pow(basis.alphas[k], s);
    acc += w * f[k] * f[k];
  }
  return acc;
}

}  // namespace

double sobolev_norm(const SpectralField& f, double s, const SpectralBasis& basis) {
  require_same_size(f.size(), basis.modes, "sobolev_norm");
  return std::sqrt(weighted_square(f, s, basis));
}

double product_norm(const WaveState& x, double alpha, const SpectralBasis& basis) {
  require_same_size(x.u.size(), basis.modes, "product_norm");
  require_same_size(x.v.size(), basis.modes, "product_norm");
  return std::sqrt(weighted_square(x.u, alpha, basis) + weighted_square(x.v, alpha - 1.0, basis));
}

SpectralField apply_heat_semigroup(const SpectralField& f, double t, const SpectralBasis& basis) {
  require_same_size(f.size(), basis.modes, "apply_heat_semigroup");
  if (t < 0.0) throw UsageError("apply_heat_semigroup: t must be nonnegative");
  SpectralField r(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) r[k] = std::exp(-basis.alphas[k] * t) * f[k];
  return r;
}

WaveState apply_wave_group(const WaveState& x, double t, const SpectralBasis& basis) {
  require_same_size(x.u.size(), basis.modes, "apply_wave_group");
  require_same_size(x.v.size(), basis.modes, "apply_wave_group");
  WaveState r(basis.modes);
  for (std::size_t k = 0; k < basis.modes; ++k) {
    const double w = basis.omegas[k];
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    r.u[k] = c * x.u[k] + s / w * x.v[k];
    r.v[k] = -w * s * x.u[k] + c * x.v[k];
  }
  return r;
}

Collocation::Collocation(const SpectralBasis& basis, std::size_t grid_size)
    : modes_(basis.modes), grid_size_(grid_size), length_(basis.length) {
  if (grid_size < basis.modes) {
    throw UsageError("collocation grid_size " + std::to_string(grid_size) +
                     " is smaller than the number of modes " + std::to_string(basis.modes) +
                     " (aliasing)");
  }
  const double denom = static_cast<double>(grid_size + 1);
  weight_ = length_ / denom;
  nodes_.resize(grid_size);
  table_.resize(grid_size * modes_);
  const double amp = std::sqrt(2.0 / length_);
  for (std::size_t j = 0; j < grid_size; ++j) {
    nodes_[j] = static_cast<double>(j + 1) * weight_;
    for (std::size_t k = 0; k < modes_; ++k) {
      // Reduce the argument exactly: sin(π (k+1)(j+1) / (G+1)).
      const auto m = ((k + 1) * (j + 1)) % (2 * (grid_size + 1));
      table_[j * modes_ + k] = amp * std::sin(std::numbers::pi * static_cast<double>(m) / denom);
    }
  }
}

void Collocation::to_grid(std::span<const double> coeffs, std::span<double> values) const {
  require_same_size(coeffs.size(), modes_, "to_grid");
  require_same_size(values.size(), grid_size_, "to_grid");
  for (std::size_t j = 0; j < grid_size_; ++j) {
    const double* row = &table_[j * modes_];
    double s = 0.0;
    for (std::size_t k = 0; k < modes_; ++k) s += row[k] * coeffs[k];
    values[j] = s;
  }
}

void Collocation::from_grid(std::span<const double> values, std::span<double> coeffs) const {
  require_same_size(values.size(), grid_size_, "from_grid");
  require_same_size(coeffs.size(), modes_, "from_grid");
  for (std::size_t k = 0; k < modes_; ++k) coeffs[k] = 0.0;
  for (std::size_t j = 0; j < grid_size_; ++j) {
    const double* row = &table_[j * modes_];
    const double v = weight_ * values[j];
    for (std::size_t k = 0; k < modes_; ++k) coeffs[k] += row[k] * v;
  }
}

std::vector<double> Collocation::to_grid(const SpectralField& f) const {
  std::vector<double> values(grid_size_);
  to_grid(f.span(), values);
  return values;
}

SpectralField Collocation::from_grid(std::span<const double> values) const {
  SpectralField f(modes_);
  from_grid(values, f.span());
  return f;
}

}  // namespace sfwave
