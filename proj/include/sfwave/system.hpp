#pragma once

#include "sfwave/noise.hpp"
#include "sfwave/nonlinearity.hpp"
#include "sfwave/spectral.hpp"

namespace sfwave {

/// Full description of the slow-fast system
///   U_tt = ΔU + F(U, Y_{t/ε}) + σ₁ Ẇ¹,   Y_t = ΔY + g(Y) + σ₂ Ẇ²
/// on [0, L] with Dirichlet conditions, truncated to N sine modes.
struct SystemSpec {
  SpectralBasis basis;
  std::size_t grid_size = 0;  // collocation nodes; 0 means 2N
  QWienerSpec q1;             // slow noise spectrum
  QWienerSpec q2;             // fast noise spectrum
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  ReactionSpec reaction;
  CouplingSpec coupling;

  [[nodiscard]] std::size_t modes() const { return basis.modes; }
  [[nodiscard]] Collocation collocation() const {
    return Collocation(basis, grid_size == 0 ? 2 * basis.modes : grid_size);
  }
  /// Mixing rate α₁ - L_g.
  [[nodiscard]] double eta() const { return basis.alphas.front() - reaction.lipschitz(); }
  [[nodiscard]] bool fast_is_ou() const { return reaction.is_zero(); }

  /// Dimensions, spectra and the spectral gap condition L_g < α₁. Throws ConfigError.
  void validate() const;
};

}  // namespace sfwave
