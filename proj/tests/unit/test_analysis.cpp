#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sfwave/errors.hpp"
#include "support.hpp"

using namespace sfwave;

namespace {

MultiscaleConfig short_config() {
  MultiscaleConfig c;
  c.T = 0.2;
  c.h_slow = 0.01;
  c.micro_ratio = 4;
  return c;
}

WaveState single_mode(std::size_t n) {
  WaveState x(n);
  x.u[0] = 1.0;
  return x;
}

std::vector<WeakErrorPoint> synthetic(const std::function<double(double)>& f,
                                      std::vector<double> eps, double se = 0.0) {
  std::vector<WeakErrorPoint> pts;
  for (double e : eps) pts.push_back({e, f(e), se, 100, 1});
  return pts;
}

}  // namespace

TEST(TestFunctional, ValuesAndDerivatives) {
  const SpectralField w(std::vector<double>{1.0, 0.5});
  const auto phi = TestFunctional::projection(w, 0.3);
  const SpectralField u(std::vector<double>{0.2, -0.4});
  EXPECT_NEAR(phi.value(u), std::sin(0.2 - 0.2 + 0.3), 1e-15);
  const SpectralField z(std::vector<double>{0.0, 1.0});
  EXPECT_NEAR(phi.derivative(u, z), std::cos(0.3) * 0.5, 1e-15);
  const auto bump = TestFunctional::bump();
  EXPECT_NEAR(bump.value(u), std::exp(-0.1), 1e-15);
  const double fd = (bump.value(u + 1e-6 * z) - bump.value(u - 1e-6 * z)) / 2e-6;
  EXPECT_NEAR(bump.derivative(u, z), fd, 1e-9);
}

TEST(RunningStats, MatchesTwoPassAndMergesAssociatively) {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(std::sin(0.37 * i) + 1e3);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  RunningStats all, a, b, c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    all.push(x[i]);
    (i < 300 ? a : i < 710 ? b : c).push(x[i]);
  }
  EXPECT_NEAR(all.mean, mean, 1e-9);
  EXPECT_NEAR(all.variance(), ss / 999, 1e-10);
  RunningStats left = a, right = b;
  left.merge(b);
  left.merge(c);
  right.merge(c);
  RunningStats alt = a;
  alt.merge(right);
  EXPECT_NEAR(left.mean, all.mean, 1e-9);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
  EXPECT_NEAR(alt.variance(), left.variance(), 1e-10);
  EXPECT_EQ(left.count, 1000u);
}

TEST(OrderFit, ExactOnSyntheticPowerLaws) {
  const std::vector<double> eps{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  for (double p : {1.0, 0.5, 2.0, 1.37, 0.25}) {
    const auto fit = order_fit(synthetic([&](double e) { return 0.3 * std::pow(e, p); }, eps));
    ASSERT_TRUE(fit.conclusive);
    EXPECT_NEAR(fit.slope, p, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(0.3), 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  }
  const auto neg = order_fit(synthetic([](double e) { return -0.3 * e; }, eps));
  EXPECT_NEAR(neg.slope, 1.0, 1e-12);
}

TEST(OrderFit, ExcludesNoiseDominatedPointsDeterministically) {
  auto pts = synthetic([](double e) { return 0.1 * e; }, {0.5, 0.25, 0.125, 0.0625, 0.03125}, 0.004);
  // 0.1·0.03125 = 0.0031 <= 0.008 and 0.1·0.0625 = 0.00625 <= 0.008 are excluded.
  const auto fit = order_fit(pts);
  EXPECT_EQ(fit.used_epsilons, (std::vector<double>{0.5, 0.25, 0.125}));
  EXPECT_EQ(fit.excluded_epsilons, (std::vector<double>{0.0625, 0.03125}));
  EXPECT_TRUE(fit.conclusive);
  EXPECT_EQ(order_fit(pts).excluded_epsilons, fit.excluded_epsilons);
  pts[2].stderr = 1.0;
  EXPECT_FALSE(order_fit(pts).conclusive);
}

TEST(SmallEpsilonSlope, ExactOnLinearData) {
  const auto pts = synthetic([](double e) { return 0.02 + 0.7 * e; }, {0.5, 0.25, 0.125, 0.0625});
  const auto s = small_epsilon_slope(pts, 3);
  EXPECT_NEAR(s.slope, 0.7, 1e-12);
  EXPECT_THROW(small_epsilon_slope(pts, 5), UsageError);
}

TEST(ExpansionResidual, SyntheticExactCorrector) {
  const auto pts = synthetic([](double e) { return 0.4 * e; }, {0.5, 0.25, 0.125}, 1e-3);
  CorrectorEstimate c;
  c.u1_value = 0.4;
  const auto r = expansion_residual(pts, c);
  for (const auto& row : r.rows) EXPECT_NEAR(row.r_eps, 0.0, 1e-15);
  EXPECT_TRUE(r.correction_not_worse);
  c.u1_value = -0.4;  // wrong sign doubles the residual
  EXPECT_FALSE(expansion_residual(pts, c).correction_not_worse);
}

TEST(WeakError, NeedsTwoReplicas) {
  const auto spec = fixtures::ou_system(4);
  MonteCarloOptions mc;
  mc.replicas = 1;
  EXPECT_THROW(weak_error(TestFunctional::bump(), single_mode(4), SpectralField(4), 0.5,
                          short_config(), spec, fixtures::ou_oracle(spec), mc),
               UsageError);
}

TEST(WeakError, NullCouplingGivesExactlyZero) {
  const auto spec = fixtures::ou_system(6, "scaled_tanh:0.5", "zero");
  MonteCarloOptions mc;
  mc.replicas = 40;
  const auto pts = weak_error_sweep(TestFunctional::projection(SpectralField::unit(6, 0), 0.0),
                                    single_mode(6), SpectralField::unit(6, 0), {0.5, 0.1},
                                    short_config(), spec, fixtures::ou_oracle(spec), mc);
  for (const auto& p : pts) {
    EXPECT_EQ(p.mean_diff, 0.0);
    EXPECT_EQ(p.stderr, 0.0);
  }
}

TEST(WeakError, IndependentOfThreadCount) {
  const auto spec = fixtures::ou_system(6);
  const auto fbar = fixtures::ou_oracle(spec);
  MonteCarloOptions mc;
  mc.replicas = 200;  // four chunks, the last one partial
  mc.seed = 5;
  const auto phi = TestFunctional::projection(SpectralField::unit(6, 0), 0.0);
  const auto one = weak_error(phi, single_mode(6), SpectralField::unit(6, 0), 0.25, short_config(), spec, fbar, mc);
  mc.threads = 3;
  const auto three = weak_error(phi, single_mode(6), SpectralField::unit(6, 0), 0.25, short_config(), spec, fbar, mc);
  EXPECT_EQ(one.mean_diff, three.mean_diff);
  EXPECT_EQ(one.stderr, three.stderr);
  EXPECT_EQ(one.replicas, 200u);
}

TEST(WeakError, CommonNoiseReducesVariance) {
  const auto spec = fixtures::ou_system(8);
  const auto fbar = fixtures::ou_oracle(spec);
  MonteCarloOptions mc;
  mc.replicas = 256;
  mc.seed = 17;
  const auto phi = TestFunctional::projection(SpectralField::unit(8, 0), 0.0);
  const auto crn = weak_error(phi, single_mode(8), SpectralField::unit(8, 0), 0.25, short_config(), spec, fbar, mc);
  mc.common_random_numbers = false;
  const auto ind = weak_error(phi, single_mode(8), SpectralField::unit(8, 0), 0.25, short_config(), spec, fbar, mc);
  EXPECT_LE(crn.stderr, ind.stderr);
  EXPECT_LT(crn.stderr, 0.2 * ind.stderr);
}

TEST(DirectionalDerivative, ZeroDirectionAndExactLinearity) {
  const auto spec = fixtures::ou_system(6);
  const auto fbar = fixtures::ou_oracle(spec);
  MonteCarloOptions mc;
  mc.replicas = 64;
  const auto phi = TestFunctional::projection(SpectralField::unit(6, 0), 0.2);
  WaveState h(6);
  h.u[0] = 0.3;
  h.v[2] = -1.0;
  WaveState h2(6);
  for (std::size_t k = 0; k < 6; ++k) {
    h2.u[k] = 2.5 * h.u[k];
    h2.v[k] = 2.5 * h.v[k];
  }
  const auto zero = directional_derivative_ubar(phi, single_mode(6), WaveState(6), short_config(), fbar, spec, mc);
  EXPECT_EQ(zero.value, 0.0);
  const auto s = variational_samples(phi, single_mode(6), {h, h2}, short_config(), fbar, spec, mc);
  for (std::size_t r = 0; r < mc.replicas; ++r) {
    EXPECT_NEAR(s[2 * r + 1], 2.5 * s[2 * r], 1e-10 * (1.0 + std::abs(s[2 * r])));
  }
}

TEST(DirectionalDerivative, LinearGaussianOracle) {
  // F̄ ≡ 0 (f1 = zero, E sin(Z) = 0): Ū_T is Gaussian with mean (S_T x)_u and
  // per-mode variance Σ_uu(T), and η_T = S_T h, so for φ = sin((u, w) + c)
  //   D ū·h = cos(m + c) exp(-s²/2) (S_T h)_u·w.
  const std::size_t n = 6;
  const auto spec = fixtures::ou_system(n, "zero", "sin_shift:0");
  const auto fbar = fixtures::ou_oracle(spec);
  const auto cfg = short_config();
  SpectralField w(n);
  w[0] = 1.0;
  w[1] = 0.5;
  const double c = 0.4;
  const auto phi = TestFunctional::projection(w, c);
  WaveState x0(n);
  x0.u[0] = 0.8;
  x0.v[1] = 1.0;
  WaveState h(n);
  h.u[1] = 1.0;
  h.v[0] = 2.0;
  const auto mean = apply_wave_group(x0, cfg.T, spec.basis);
  const auto sh = apply_wave_group(h, cfg.T, spec.basis);
  double m = 0, s2 = 0, dh = 0;
  for (std::size_t k = 0; k < n; ++k) {
    m += mean.u[k] * w[k];
    dh += sh.u[k] * w[k];
    s2 += w[k] * w[k] *
          wave_convolution_covariance(spec.q1.lambdas[k], spec.sigma1, spec.basis.omegas[k], cfg.T).uu;
  }
  const double expect = std::cos(m + c) * std::exp(-s2 / 2) * dh;
  MonteCarloOptions mc;
  mc.replicas = 4000;
  mc.seed = 23;
  const auto got = directional_derivative_ubar(phi, x0, h, cfg, fbar, spec, mc);
  EXPECT_GT(got.stderr, 0.0);
  EXPECT_LE(std::abs(got.value - expect), 3 * got.stderr) << got.value << " vs " << expect;
}

TEST(DecayCheck, NullCouplingStaysAtNoiseFloor) {
  const auto spec = fixtures::ou_system(6, "scaled_tanh:0.5", "zero");
  const auto fbar = fixtures::ou_oracle(spec);
  const auto rep = fbar_decay_check(spec, fbar, SpectralField::unit(6, 0), SpectralField::unit(6, 0),
                                    {0.0, 0.05, 0.1, 0.2}, 128, 3);
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    EXPECT_LE(std::abs(rep.distance[i]), 1e-20);
  }
  EXPECT_EQ(rep.points_used, 0u);
}

TEST(DecayCheck, OuSinShiftDecaysAtLeastAtEta) {
  const auto spec = fixtures::ou_system(8);
  const auto fbar = fixtures::ou_oracle(spec);
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.03 * i);
  const auto rep = fbar_decay_check(spec, fbar, SpectralField::unit(8, 0), SpectralField::unit(8, 0), t, 1024, 5);
  ASSERT_TRUE(rep.fitted_rate.has_value());
  EXPECT_GE(*rep.fitted_rate, 0.75 * spec.eta());
}

TEST(DecayCheck, InitialDistanceEnvelopeStableAcrossSeeds) {
  const auto spec = fixtures::ou_system(8);
  const auto fbar = fixtures::ou_oracle(spec);
  // d(0) is deterministic: the fast process starts at y.
  for (double scale : {0.5, 1.0, 2.0}) {
    const SpectralField y = scale * SpectralField::unit(8, 0);
    const auto a = fbar_decay_check(spec, fbar, SpectralField(8), y, {0.0, 0.1}, 256, 1);
    const auto b = fbar_decay_check(spec, fbar, SpectralField(8), y, {0.0, 0.1}, 256, 2);
    EXPECT_DOUBLE_EQ(a.distance[0], b.distance[0]);
    EXPECT_LE(a.distance[0], 4.0 * (1 + inner(y, y)));
    EXPECT_NEAR(a.distance[1] / b.distance[1], 1.0, 0.2);
  }
}

TEST(Corrector, NullCouplingGivesZero) {
  const auto spec = fixtures::ou_system(6, "scaled_tanh:0.5", "zero");
  MonteCarloOptions mc;
  mc.replicas = 32;
  CorrectorOptions o;
  o.inner_replicas = 64;
  o.quadrature_nodes = 32;
  const auto c = corrector_u1(TestFunctional::projection(SpectralField::unit(6, 0), 0.0), single_mode(6),
                              SpectralField::unit(6, 0), short_config(), spec, fixtures::ou_oracle(spec), o, mc);
  EXPECT_EQ(c.u1_value, 0.0);
  EXPECT_EQ(c.ci_halfwidth, 0.0);
  EXPECT_NEAR(c.s_max, 2 * std::log(1e3) / spec.eta(), 1e-12);
}

TEST(Corrector, RejectsNonMixingSpecs) {
  auto spec = fixtures::ou_system(4);
  spec.reaction.fn = ScalarFunction{ScalarFunction::Kind::affine, spec.basis.alphas[0] + 1.0, 0.0};
  MonteCarloOptions mc;
  mc.replicas = 8;
  EXPECT_THROW(corrector_u1(TestFunctional::bump(), single_mode(4), SpectralField(4), short_config(), spec,
                            fixtures::ou_oracle(fixtures::ou_system(4)), CorrectorOptions{}, mc),
               ConfigError);
}

TEST(Corrector, GrowsAtMostLinearlyInInitialFastState) {
  const std::size_t n = 6;
  const auto spec = fixtures::ou_system(n);
  const auto fbar = fixtures::ou_oracle(spec);
  MonteCarloOptions mc;
  mc.replicas = 128;
  CorrectorOptions o;
  o.inner_replicas = 256;
  o.quadrature_nodes = 64;
  const auto phi = TestFunctional::projection(SpectralField::unit(n, 0), 0.0);
  std::vector<double> lx, ly;
  for (double s : {1.0, 2.0, 4.0, 8.0}) {
    const SpectralField y = s * SpectralField::unit(n, 0);
    const auto c = corrector_u1(phi, single_mode(n), y, short_config(), spec, fbar, o, mc);
    lx.push_back(std::log(1 + std::sqrt(inner(y, y))));
    ly.push_back(std::log(std::abs(c.u1_value)));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 4;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_LE(sxy / sxx, 1.1);
}

TEST(Corrector, ScalingTheDiscrepancyScalesTheValue) {
  // u₁ is D ū·(0, v) evaluated through the linear variational flow, so a
  // doubled v doubles every per-replica sample.
  const std::size_t n = 6;
  const auto spec = fixtures::ou_system(n);
  const auto fbar = fixtures::ou_oracle(spec);
  MonteCarloOptions mc;
  mc.replicas = 64;
  CorrectorOptions o;
  o.inner_replicas = 128;
  o.quadrature_nodes = 32;
  const auto phi = TestFunctional::projection(SpectralField::unit(n, 0), 0.0);
  const auto c = corrector_u1(phi, single_mode(n), SpectralField::unit(n, 0), short_config(), spec, fbar, o, mc);
  const WaveState v(SpectralField(n), c.discrepancy);
  const WaveState v2(SpectralField(n), 2.0 * c.discrepancy);
  const auto s = variational_samples(phi, single_mode(n), {v, v2}, short_config(), fbar, spec, mc);
  double a = 0, b = 0;
  for (std::size_t r = 0; r < mc.replicas; ++r) {
    a += s[2 * r];
    b += s[2 * r + 1];
  }
  EXPECT_NEAR(b, 2 * a, 1e-10 * std::abs(a));
  EXPECT_NEAR(a / mc.replicas, c.u1_value, 1e-12 * (1 + std::abs(c.u1_value)));
}
