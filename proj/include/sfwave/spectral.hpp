#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sfwave {

/// Dirichlet eigenpairs of -d²/dξ² on [0, L], truncated to the first N modes.
///
/// Eigenfunctions are normalized, e_k(ξ) = sqrt(2/L) sin(kπξ/L), so that
/// coefficient vectors carry the L² inner product directly.
struct SpectralBasis {
  double length = 1.0;
  std::size_t modes = 0;
  std::vector<double> alphas;  // (kπ/L)², strictly increasing
  std::vector<double> omegas;  // sqrt(alphas)

  [[nodiscard]] double eigenfunction(std::size_t k, double xi) const;  // k is 0-based
};

SpectralBasis make_basis(double length, std::size_t modes);

/// Coefficients of an L²(0, L) function in the sine eigenbasis.
struct SpectralField {
  std::vector<double> coeffs;

  SpectralField() = default;
  explicit SpectralField(std::size_t n) : coeffs(n, 0.0) {}
  explicit SpectralField(std::vector<double> c) : coeffs(std::move(c)) {}

  [[nodiscard]] std::size_t size() const { return coeffs.size(); }
  double& operator[](std::size_t k) { return coeffs[k]; }
  double operator[](std::size_t k) const { return coeffs[k]; }
  [[nodiscard]] std::span<double> span() { return coeffs; }
  [[nodiscard]] std::span<const double> span() const { return coeffs; }

  [[nodiscard]] bool is_finite() const;

  static SpectralField unit(std::size_t n, std::size_t k, double value = 1.0);

  bool operator==(const SpectralField&) const = default;
};

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

/// (position, velocity) pair of the wave system.
struct WaveState {
  SpectralField u;
  SpectralField v;

  WaveState() = default;
  explicit WaveState(std::size_t n) : u(n), v(n) {}
  WaveState(SpectralField u_, SpectralField v_);

  [[nodiscard]] std::size_t size() const { return u.size(); }

  bool operator==(const WaveState&) const = default;
};

double inner(const SpectralField& a, const SpectralField& b);

/// (Σ α_k^s f_k²)^{1/2}
double sobolev_norm(const SpectralField& f, double s, const SpectralBasis& basis);

/// (‖u‖_α² + ‖v‖_{α-1}²)^{1/2}
double product_norm(const WaveState& x, double alpha, const SpectralBasis& basis);

/// Heat semigroup E_t: mode k scaled by exp(-α_k t). Requires t >= 0.
SpectralField apply_heat_semigroup(const SpectralField& f, double t, const SpectralBasis& basis);

/// Wave group S_t (any real t): per-mode rotation
///   u ← cos(ωt) u + sin(ωt)/ω v,   v ← -ω sin(ωt) u + cos(ωt) v.
WaveState apply_wave_group(const WaveState& x, double t, const SpectralBasis& basis);

/// Collocation on the interior nodes ξ_j = jL/(G+1), j = 1..G.
///
/// from_grid is the discrete sine projection; it inverts to_grid exactly on
/// the first N modes whenever G >= N.
class Collocation {
 public:
  Collocation(const SpectralBasis& basis, std::size_t grid_size);
  explicit Collocation(const SpectralBasis& basis) : Collocation(basis, 2 * basis.modes) {}

  [[nodiscard]] std::size_t grid_size() const { return grid_size_; }
  [[nodiscard]] std::size_t modes() const { return modes_; }
  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }

  /// e_k(ξ_j), row-major by node.
  [[nodiscard]] double eval(std::size_t node, std::size_t k) const { return table_[node * modes_ + k]; }

  void to_grid(std::span<const double> coeffs, std::span<double> values) const;
  void from_grid(std::span<const double> values, std::span<double> coeffs) const;

  [[nodiscard]] std::vector<double> to_grid(const SpectralField& f) const;
  [[nodiscard]] SpectralField from_grid(std::span<const double> values) const;

 private:
  std::size_t modes_;
  std::size_t grid_size_;
  double length_;
  double weight_;  // L / (G + 1)
  std::vector<double> nodes_;
  std::vector<double> table_;
};

void require_same_size(std::size_t a, std::size_t b, const char* what);

}  // namespace sfwave
