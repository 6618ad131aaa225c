#include <gtest/gtest.h>

#include <cmath>

#include "sfwave/errors.hpp"
#include "sfwave/fast_process.hpp"
#include "support.hpp"

using namespace sfwave;

TEST(ScalarFunction, ParseAndRoundTrip) {
  for (const char* text : {"zero", "affine:2,-0.5", "scaled_tanh:0.5", "sin_shift:0.7"}) {
    const auto f = ScalarFunction::parse(text);
    EXPECT_EQ(ScalarFunction::parse(f.to_string()), f) << text;
  }
  EXPECT_EQ(ScalarFunction::parse("sin"), ScalarFunction::parse("sin_shift:0"));
  EXPECT_THROW(ScalarFunction::parse("cubic:1"), ConfigError);
  EXPECT_THROW(ScalarFunction::parse("affine:1,2,3"), ConfigError);
  EXPECT_THROW(ScalarFunction::parse("scaled_tanh:abc"), ConfigError);
}

TEST(ScalarFunction, ValuesDerivativesAndLipschitz) {
  const auto t = ScalarFunction::parse("scaled_tanh:-3");
  EXPECT_NEAR(t.value(0.4), -3 * std::tanh(0.4), 1e-15);
  EXPECT_NEAR(t.derivative(0.4), -3 / std::pow(std::cosh(0.4), 2), 1e-14);
  EXPECT_DOUBLE_EQ(t.lipschitz(), 3.0);
  const auto a = ScalarFunction::parse("affine:-2,1");
  EXPECT_DOUBLE_EQ(a.value(3.0), -5.0);
  EXPECT_DOUBLE_EQ(a.lipschitz(), 2.0);
  const auto s = ScalarFunction::parse("sin_shift:0.3");
  EXPECT_NEAR(s.derivative(1.0), std::cos(1.3), 1e-15);
  for (double x : {-2.0, -0.3, 0.0, 0.9}) {
    const double fd = (s.value(x + 1e-6) - s.value(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(fd, s.derivative(x), 1e-8);
  }
}

TEST(Reaction, RejectsSinShiftAndEnforcesSpectralGap) {
  EXPECT_THROW(ReactionSpec::parse("sin_shift:0.2"), ConfigError);
  const auto b = make_basis(1.0, 4);
  const double a1 = b.alphas[0];
  EXPECT_NO_THROW(ReactionSpec::parse("scaled_tanh:" + std::to_string(0.99 * a1)).validate(b));
  try {
    ReactionSpec r;
    r.fn = ScalarFunction{ScalarFunction::Kind::scaled_tanh, a1, 0.0};
    r.validate(b);
    FAIL() << "L_g = alpha_1 must be rejected";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("spectral gap condition violated"), std::string::npos);
  }
}

TEST(Coupling, LipschitzAndFastDependence) {
  const auto c = CouplingSpec::separable(ScalarFunction::parse("scaled_tanh:0.5"),
                                         ScalarFunction::parse("affine:2,0"));
  EXPECT_DOUBLE_EQ(c.lipschitz(), 2.0);
  EXPECT_DOUBLE_EQ(c.derivative_bound(), 0.5);
  EXPECT_TRUE(c.depends_on_fast());
  EXPECT_FALSE(CouplingSpec::separable(ScalarFunction::parse("sin"), ScalarFunction{}).depends_on_fast());
  const auto e = CouplingSpec::entangled();
  EXPECT_NEAR(e.value(0.3, 0.4), std::sin(0.7), 1e-15);
  EXPECT_NEAR(e.du(0.3, 0.4), std::cos(0.7), 1e-15);
}

TEST(GaussianExpectation, ClosedFormsAndQuadratureAgree) {
  for (double v : {0.0, 0.01, 0.5, 2.0}) {
    const auto s = ScalarFunction::parse("sin_shift:0.7");
    EXPECT_NEAR(gaussian_expectation(s, v), std::sin(0.7) * std::exp(-v / 2), 1e-15);
    EXPECT_NEAR(gauss_hermite_expectation(s, v), std::sin(0.7) * std::exp(-v / 2), 1e-12);
    EXPECT_NEAR(gaussian_expectation(ScalarFunction::parse("affine:3,0.25"), v), 0.25, 1e-15);
    EXPECT_NEAR(gaussian_expectation(ScalarFunction::parse("scaled_tanh:2"), v), 0.0, 1e-14);
  }
}

TEST(FbarOracle, MatchesFrozenNodeValues) {
  // f1 = zero, f2 = sin_shift(0.7), OU fast process with N = 16: frozen values
  // of sin(0.7) exp(-s²(ξ)/2) from 40-digit arithmetic at ξ = 16/33 and 1/33.
  const auto spec = fixtures::ou_system(16, "zero", "sin_shift:0.7");
  const auto grid = spec.collocation();
  const auto var = ou_stationary_variances(spec.q2.lambdas, spec.sigma2, spec.basis);
  const auto s2 = pointwise_variance(var, grid);
  EXPECT_NEAR(s2[15], 0.025653975754181609885, 1e-15);
  EXPECT_NEAR(s2[0], 0.00035375069604949438256, 1e-16);
  std::vector<double> f(grid.grid_size());
  AveragedDrift::oracle(spec.coupling, var, grid).evaluate_nodes(std::vector<double>(f.size(), 0.0), f);
  EXPECT_NEAR(f[15], 0.63600708598960572855, 1e-13);
  EXPECT_NEAR(f[0], 0.64410375108660238356, 1e-13);
}

TEST(AveragedDrift, OracleRejectsEntangledCoupling) {
  auto spec = fixtures::ou_system(4);
  spec.coupling = CouplingSpec::entangled();
  EXPECT_THROW(AveragedDrift::oracle(spec.coupling, std::vector<double>(4, 0.1), spec.collocation()),
               UnsupportedOracle);
}

TEST(AveragedDrift, DerivativeMatchesFiniteDifference) {
  const auto spec = fixtures::ou_system(6);
  const auto fbar = fixtures::ou_oracle(spec);
  SpectralField u(6), w(6);
  for (std::size_t k = 0; k < 6; ++k) {
    u[k] = 0.4 / (k + 1);
    w[k] = std::cos(1.0 + k);
  }
  const auto d = fbar.derivative(u, w);
  const double h = 1e-6;
  const auto fd = (1.0 / (2 * h)) * (fbar.evaluate(u + h * w) - fbar.evaluate(u - h * w));
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(d[k], fd[k], 1e-8);
}

TEST(AveragedDrift, ErgodicSeparableMatchesEmpiricalMean) {
  const auto spec = fixtures::ou_system(4, "affine:1,0", "sin_shift:0.2");
  std::vector<SpectralField> samples;
  for (int i = 0; i < 5; ++i) {
    SpectralField y(4);
    y[0] = 0.1 * i;
    y[2] = -0.05 * i;
    samples.push_back(y);
  }
  const auto grid = spec.collocation();
  const auto fbar = AveragedDrift::ergodic(spec.coupling, samples, grid);
  SpectralField u(4);
  u[1] = 0.3;
  SpectralField expect(4);
  for (const auto& y : samples) expect = expect + 0.2 * eval_F(spec.coupling, u, y, grid);
  const auto got = fbar.evaluate(u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(got[k], expect[k], 1e-14);
}

TEST(EstimateFbar, ErgodicAgreesWithOracleWithinStandardErrors) {
  const auto spec = fixtures::ou_system(8, "zero", "sin_shift:0.7");
  const RngStream rng(99, StreamTag::invariant);
  const auto mu = sample_invariant(spec, default_burn_in(spec), 4000, default_thinning(spec),
                                   default_thinning(spec), rng);
  const auto grid = spec.collocation();
  const SpectralField u(8);
  const auto est = estimate_fbar(spec.coupling, u, mu.samples, grid);
  std::vector<double> exact(grid.grid_size());
  fixtures::ou_oracle(spec).evaluate_nodes(grid.to_grid(u), exact);
  for (std::size_t j = 0; j < grid.grid_size(); ++j) {
    EXPECT_GT(est.node_stderr[j], 0.0);
    EXPECT_LE(std::abs(est.node_mean[j] - exact[j]), 4.0 * est.node_stderr[j]) << "node " << j;
  }
  EXPECT_THROW(estimate_fbar(spec.coupling, u, {}, grid), UsageError);
}

TEST(ExchangeCheck, DerivativeAndAverageCommute) {
  const auto spec = fixtures::ou_system(6, "scaled_tanh:0.5", "sin_shift:0.7");
  std::vector<SpectralField> samples;
  const RngStream rng(3, StreamTag::property);
  for (std::uint32_t i = 0; i < 64; ++i) {
    SpectralField y(6);
    rng.normals({i, 0}, y.span());
    samples.push_back(0.1 * y);
  }
  SpectralField u(6), w(6);
  u[0] = 1.0;
  w[0] = 1.0;
  const auto r = dfbar_exchange_check(spec.coupling, u, w, samples, spec.collocation());
  EXPECT_LT(r.discrepancy, 1e-4 * r.derivative_norm + 1e-9);
  auto ent = spec;
  ent.coupling = CouplingSpec::entangled();
  const auto r2 = dfbar_exchange_check(ent.coupling, u, w, samples, ent.collocation());
  EXPECT_LT(r2.discrepancy, 1e-3 * r2.derivative_norm);
}
