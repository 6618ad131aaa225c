#pragma once

#include <string>
#include <vector>

#include "sfwave/spectral.hpp"

namespace sfwave {

/// Scalar building block of the Nemytskii nonlinearities.
///
///   zero          0
///   affine:a,b    a x + b
///   scaled_tanh:a a tanh(x)
///   sin_shift:c   sin(x + c)
struct ScalarFunction {
  enum class Kind { zero, affine, scaled_tanh, sin_shift };

  Kind kind = Kind::zero;
  double a = 0.0;  // slope / amplitude / phase, by kind
  double b = 0.0;  // affine offset

  static ScalarFunction parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] double value(double x) const;
  [[nodiscard]] double derivative(double x) const;
  [[nodiscard]] double lipschitz() const;  // sup |f'|
  [[nodiscard]] bool is_zero() const { return kind == Kind::zero; }
  [[nodiscard]] bool is_odd() const;

  bool operator==(const ScalarFunction&) const = default;
};

/// Reaction term g of the fast equation.
struct ReactionSpec {
  ScalarFunction fn;

  static ReactionSpec parse(const std::string& text);
  [[nodiscard]] double lipschitz() const { return fn.lipschitz(); }
  [[nodiscard]] bool is_zero() const { return fn.is_zero(); }
  /// Spectral gap condition: L_g < α₁.
  void validate(const SpectralBasis& basis) const;
};

/// Coupling drift F(u, y) of the slow equation.
struct CouplingSpec {
  enum class Kind { separable, entangled_sin };

  Kind kind = Kind::separable;
  ScalarFunction f1;  // separable only: acts on u
  ScalarFunction f2;  // separable only: acts on y

  static CouplingSpec separable(ScalarFunction f1, ScalarFunction f2);
  static CouplingSpec entangled() { return CouplingSpec{Kind::entangled_sin, {}, {}}; }

  [[nodiscard]] double lipschitz() const;        // L_F
  [[nodiscard]] double derivative_bound() const;  // L with ‖D_uF w‖ ≤ L‖w‖
  [[nodiscard]] bool depends_on_fast() const;

  /// Pointwise value / u-derivative at one node.
  [[nodiscard]] double value(double u, double y) const;
  [[nodiscard]] double du(double u, double y) const;
};

SpectralField eval_g(const ReactionSpec& spec, const SpectralField& y, const Collocation& grid);
SpectralField eval_F(const CouplingSpec& spec, const SpectralField& u, const SpectralField& y,
                     const Collocation& grid);
SpectralField dF_u(const CouplingSpec& spec, const SpectralField& u, const SpectralField& y,
                   const SpectralField& w, const Collocation& grid);

/// E f(Z), Z ~ N(0, variance), by 30-node Gauss–Hermite quadrature.
double gauss_hermite_expectation(const ScalarFunction& f, double variance);

/// E f(Z), Z ~ N(0, variance): closed form for zero/affine/sin_shift, quadrature otherwise.
double gaussian_expectation(const ScalarFunction& f, double variance);

/// Pointwise variance s²(ξ_j) = Σ_k var_k e_k(ξ_j)² of a centered Gaussian field.
std::vector<double> pointwise_variance(const std::vector<double>& mode_variances,
                                       const Collocation& grid);

/// Stationary per-mode variances σ²λ_k / (2α_k) of the OU fast process.
std::vector<double> ou_stationary_variances(const std::vector<double>& lambdas, double sigma,
                                            const SpectralBasis& basis);

/// Closed-form F̄(u) when the fast process is OU and F is separable.
SpectralField fbar_oracle(const CouplingSpec& spec, const SpectralField& u,
                          const std::vector<double>& ou_variances, const Collocation& grid);

struct FbarEstimate {
  SpectralField mean;
  SpectralField stderr_modes;
  std::vector<double> node_mean;    // at collocation nodes
  std::vector<double> node_stderr;  // at collocation nodes
};

/// Standard errors use batch means (to absorb serial correlation of thinned
/// trajectories) once at least `min_batched` samples are present.
FbarEstimate estimate_fbar(const CouplingSpec& spec, const SpectralField& u,
                           const std::vector<SpectralField>& samples, const Collocation& grid);

/// Frozen averaged drift: either the OU closed form or an empirical μ-average.
///
/// Evaluation cost per call is O(N·G) for separable couplings (the fast part
/// collapses to a fixed node offset) and O(n·G) for the entangled coupling.
class AveragedDrift {
 public:
  enum class Mode { oracle, ergodic };

  static AveragedDrift oracle(const CouplingSpec& spec, const std::vector<double>& ou_variances,
                              const Collocation& grid);
  static AveragedDrift ergodic(const CouplingSpec& spec, std::vector<SpectralField> samples,
                               const Collocation& grid);

  [[nodiscard]] Mode mode() const { return mode_; }
  [[nodiscard]] const CouplingSpec& coupling() const { return spec_; }
  [[nodiscard]] const Collocation& grid() const { return grid_; }
  [[nodiscard]] std::size_t sample_count() const { return samples_.size(); }

  /// Grid values of F̄ given grid values of u.
  void evaluate_nodes(std::span<const double> u_nodes, std::span<double> out_nodes) const;
  /// Grid values of D_u F̄(u)·w given grid values of u and w.
  void derivative_nodes(std::span<const double> u_nodes, std::span<const double> w_nodes,
                        std::span<double> out_nodes) const;

  [[nodiscard]] SpectralField evaluate(const SpectralField& u) const;
  [[nodiscard]] SpectralField derivative(const SpectralField& u, const SpectralField& w) const;

 private:
  AveragedDrift(Mode mode, CouplingSpec spec, const Collocation& grid);

  Mode mode_;
  CouplingSpec spec_;
  Collocation grid_;
  std::vector<double> offset_nodes_;             // separable: E f2 at nodes
  std::vector<SpectralField> samples_;           // ergodic: frozen μ-sample
  std::vector<std::vector<double>> sample_nodes_;  // entangled ergodic: grid values
};

struct ExchangeReport {
  double delta = 0.0;
  double discrepancy = 0.0;           // ‖FD of empirical F̄ - mean D_uF·w‖
  double derivative_norm = 0.0;       // ‖mean D_uF·w‖
  double derivative_stderr = 0.0;     // MC error of the averaged derivative (norm of per-mode stderr)
};

/// Finite-difference derivative of the empirical F̄ against the μ-average of D_uF.
ExchangeReport dfbar_exchange_check(const CouplingSpec& spec, const SpectralField& u,
                                    const SpectralField& w, const std::vector<SpectralField>& samples,
                                    const Collocation& grid, double delta = 1e-4);

}  // namespace sfwave
