#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "sfwave/analysis.hpp"

namespace sfwave::fixtures {

// OU fast process, λ_k = k^{-2}, σ₁ = σ₂ = 0.5 on [0, 1].
inline SystemSpec ou_system(std::size_t n, const std::string& f1 = "scaled_tanh:0.5",
                            const std::string& f2 = "sin_shift:0.7") {
  SystemSpec s;
  s.basis = make_basis(1.0, n);
  s.q1 = QWienerSpec::power_law(n, 1.0, 2.0);
  s.q2 = s.q1;
  s.sigma1 = 0.5;
  s.sigma2 = 0.5;
  s.reaction = ReactionSpec::parse("zero");
  s.coupling = CouplingSpec::separable(ScalarFunction::parse(f1), ScalarFunction::parse(f2));
  return s;
}

inline AveragedDrift ou_oracle(const SystemSpec& s) {
  return AveragedDrift::oracle(s.coupling, ou_stationary_variances(s.q2.lambdas, s.sigma2, s.basis),
                               s.collocation());
}

// Composite Simpson rule with m (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m = 2000) {
  const double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace sfwave::fixtures
