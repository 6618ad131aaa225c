#include <gtest/gtest.h>

#include <cmath>

#include "sfwave/errors.hpp"
#include "sfwave/slow_wave.hpp"
#include "support.hpp"

using namespace sfwave;

namespace {

MultiscaleConfig small_config(double eps) {
  MultiscaleConfig c;
  c.epsilon = eps;
  c.T = 0.1;
  c.h_slow = 0.01;
  c.micro_ratio = 4;
  return c;
}

WaveState start(std::size_t n) {
  WaveState x(n);
  x.u[0] = 1.0;
  x.v[1] = -0.5;
  return x;
}

}  // namespace

TEST(StepSlow, ZeroDriftZeroNoiseIsTheWaveGroup) {
  const auto b = make_basis(1.0, 6);
  WaveState x(6);
  for (std::size_t k = 0; k < 6; ++k) {
    x.u[k] = 1.0 / (k + 1);
    x.v[k] = 0.2 * k;
  }
  const auto y = step_slow(x, SpectralField(6), 0.013, b, WaveState(6));
  const auto exact = apply_wave_group(x, 0.013, b);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(y.u[k], exact.u[k], 1e-14);
    EXPECT_NEAR(y.v[k], exact.v[k], 1e-13);
  }
}

TEST(StepSlow, ConstantDriftMatchesClosedForm) {
  // u'' = -ω² u + f from rest: u = f(1 - cos ωt)/ω², u' = f sin(ωt)/ω.
  const auto b = make_basis(1.0, 3);
  SpectralField f(std::vector<double>{0.7, -1.2, 2.0});
  const double h = 0.21;
  const auto y = step_slow(WaveState(3), f, h, b, WaveState(3));
  for (std::size_t k = 0; k < 3; ++k) {
    const double w = b.omegas[k];
    EXPECT_NEAR(y.u[k], f[k] * (1 - std::cos(w * h)) / (w * w), 1e-15);
    EXPECT_NEAR(y.v[k], f[k] * std::sin(w * h) / w, 1e-14);
  }
  EXPECT_THROW(step_slow(WaveState(3), f, 0.0, b, WaveState(3)), UsageError);
}

TEST(WaveStepper, SubintervalWeightsSumToFullStep) {
  const auto b = make_basis(1.0, 5);
  const WaveStepper s(b, 0.02, QWienerSpec::power_law(5, 1, 2), 0.5);
  std::vector<double> su(5), sv(5), wu(5), wv(5);
  const int m = 7;
  for (int j = 0; j < m; ++j) {
    s.drift_weights(0.02 * j / m, 0.02 * (j + 1) / m, wu, wv);
    for (int k = 0; k < 5; ++k) {
      su[k] += wu[k];
      sv[k] += wv[k];
    }
  }
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(su[k], s.full_weight_u()[k], 1e-15);
    EXPECT_NEAR(sv[k], s.full_weight_v()[k], 1e-14);
  }
  EXPECT_THROW(s.drift_weights(0.01, 0.005, wu, wv), UsageError);
}

TEST(MultiscaleConfig, StepCountsAndValidation) {
  MultiscaleConfig c = small_config(0.5);
  EXPECT_EQ(c.slow_steps(), 10u);
  c.h_slow = 0.03;
  EXPECT_EQ(c.slow_steps(), 4u);
  EXPECT_NEAR(c.slow_step(), 0.025, 1e-15);
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.epsilon = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MultiscaleConfig, FastStepBoundAdaptsOrRejects) {
  auto spec = fixtures::ou_system(4);
  spec.reaction = ReactionSpec::parse("scaled_tanh:1");
  MultiscaleConfig c = small_config(0.01);
  const double bound = 0.1 / spec.basis.alphas.back();
  EXPECT_NEAR(fast_step_bound(c, spec), bound, 1e-15);
  const auto m = effective_micro_ratio(c, spec);
  EXPECT_LE(c.slow_step() / (c.epsilon * m), bound * (1 + 1e-12));
  c.adaptive_micro = false;
  EXPECT_THROW(effective_micro_ratio(c, spec), ConfigError);
  EXPECT_EQ(effective_micro_ratio(c, fixtures::ou_system(4)), c.micro_ratio);
}

TEST(Simulate, NullCouplingPathsAreBitIdentical) {
  const auto spec = fixtures::ou_system(6, "scaled_tanh:0.5", "zero");
  const auto fbar = fixtures::ou_oracle(spec);
  const auto x0 = start(6);
  SpectralField y0(6);
  y0[0] = 1.0;
  for (double eps : {0.5, 0.125}) {
    const auto cpl = simulate_coupled(x0, y0, small_config(eps), spec, 11, 4);
    const auto avg = simulate_averaged(x0, small_config(eps), fbar, spec, 11, 4);
    EXPECT_EQ(cpl.terminal, avg.terminal);
  }
}

TEST(Simulate, SlowNoiseStreamDoesNotDependOnEpsilon) {
  const auto spec = fixtures::ou_system(4);
  const auto fbar = fixtures::ou_oracle(spec);
  const auto a = simulate_averaged(start(4), small_config(0.5), fbar, spec, 3, 2);
  const auto b = simulate_averaged(start(4), small_config(0.01), fbar, spec, 3, 2);
  EXPECT_EQ(a.terminal, b.terminal);
  std::vector<double> za(4), zb(4), zc(4);
  fast_noise_stream(3, 0.5, 2).normals({0, 0}, za);
  fast_noise_stream(3, 0.25, 2).normals({0, 0}, zb);
  slow_noise_stream(3, 2).normals({0, 0}, zc);
  EXPECT_NE(za, zb);
  EXPECT_NE(za, zc);
}

TEST(Simulate, DeterministicGivenSeedAndReplica) {
  const auto spec = fixtures::ou_system(5);
  SpectralField y0(5);
  y0[1] = 0.3;
  const auto a = simulate_coupled(start(5), y0, small_config(0.25), spec, 8, 1);
  const auto b = simulate_coupled(start(5), y0, small_config(0.25), spec, 8, 1);
  const auto c = simulate_coupled(start(5), y0, small_config(0.25), spec, 8, 2);
  EXPECT_EQ(a.terminal, b.terminal);
  EXPECT_NE(a.terminal, c.terminal);
}

TEST(Simulate, MicroStepSamplingAgreesForSlowlyVaryingDrift) {
  // With σ₂ = 0 and y₀ = 0 the fast process stays at 0, so both drift
  // samplings apply the same constant-in-y drift.
  auto spec = fixtures::ou_system(4);
  spec.sigma2 = 0.0;
  auto c = small_config(0.25);
  const auto a = simulate_coupled(start(4), SpectralField(4), c, spec, 1, 0);
  c.drift_sampling = DriftSampling::micro_steps;
  const auto b = simulate_coupled(start(4), SpectralField(4), c, spec, 1, 0);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(a.terminal.u[k], b.terminal.u[k], 1e-14);
    EXPECT_NEAR(a.terminal.v[k], b.terminal.v[k], 1e-12);
  }
}

TEST(Simulate, SnapshotsAndGraphNorm) {
  const auto spec = fixtures::ou_system(4);
  const auto fbar = fixtures::ou_oracle(spec);
  PathOptions o;
  o.snapshot_every = 3;
  const auto p = simulate_averaged(start(4), small_config(0.5), fbar, spec, 1, 0, o);
  ASSERT_EQ(p.times.size(), 5u);  // steps 0, 3, 6, 9, 10
  EXPECT_NEAR(p.times.back(), 0.1, 1e-15);
  EXPECT_EQ(p.snapshots.back(), p.terminal);
  const auto g = graph_norm_diagnostic(p, spec.basis);
  EXPECT_NEAR(g.front().value, spec.basis.alphas[0] + 0.25, 1e-12);
}

TEST(Simulate, SizeMismatchIsAUsageError) {
  const auto spec = fixtures::ou_system(4);
  EXPECT_THROW(simulate_coupled(start(3), SpectralField(4), small_config(0.5), spec, 1, 0), UsageError);
}
