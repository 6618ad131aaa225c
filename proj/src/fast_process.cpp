#include "sfwave/fast_process.hpp"

#include <cmath>
#include <string>

#include "sfwave/errors.hpp"

namespace sfwave {

void SystemSpec::validate() const {
  if (basis.modes == 0) throw ConfigError("basis.N must be at least 1");
  if (grid_size != 0 && grid_size < basis.modes) {
    throw ConfigError("basis.grid_size must be >= basis.N");
  }
  q1.validate(basis.modes);
  q2.validate(basis.modes);
  if (!(sigma1 >= 0.0) || !std::isfinite(sigma1)) throw ConfigError("noise.sigma1 must be >= 0");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("noise.sigma2 must be >= 0");
  reaction.validate(basis);
}

namespace {

std::size_t step_count(double T, double h) {
  const double ratio = T / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::size_t>(rounded);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

}  // namespace

FastStepper::FastStepper(const SystemSpec& spec, double h)
    : h_(h),
      reaction_(spec.reaction),
      grid_(spec.collocation()),
      decay_(spec.modes()),
      conv_(spec.q2, spec.sigma2, h, spec.basis),
      nodes_(grid_.grid_size()),
      g_coeffs_(spec.modes()) {
  if (!(h > 0.0)) throw UsageError("fast step size must be positive");
  for (std::size_t k = 0; k < spec.modes(); ++k) decay_[k] = std::exp(-spec.basis.alphas[k] * h);
}

void FastStepper::advance(std::span<double> y, std::span<const double> normals) const {
  const std::size_t n = decay_.size();
  if (!reaction_.is_zero()) {
    grid_.to_grid(y, nodes_);
    for (double& v : nodes_) v = reaction_.fn.value(v);
    grid_.from_grid(nodes_, g_coeffs_);
    for (std::size_t k = 0; k < n; ++k) y[k] += h_ * g_coeffs_[k];
  }
  for (std::size_t k = 0; k < n; ++k) y[k] *= decay_[k];
  conv_.add_sample(normals, y);
}

FastState step_fast(const FastState& state, double h, const SystemSpec& spec, const RngStream& rng) {
  require_same_size(state.y.size(), spec.modes(), "step_fast");
  if (!(h > 0.0)) throw UsageError("step_fast: h must be positive");
  FastStepper stepper(spec, h);
  FastState next = state;
  std::vector<double> z(spec.modes());
  rng.normals({state.steps, 0}, z);
  stepper.advance(next.y.span(), z);
  next.tau += h;
  next.steps += 1;
  return next;
}

FastState simulate_fast(const FastState& y0, double T, double h, const SystemSpec& spec,
                        const RngStream& rng, FastTrajectory* trajectory,
                        std::size_t snapshot_every) {
  require_same_size(y0.y.size(), spec.modes(), "simulate_fast");
  if (T < 0.0) throw UsageError("simulate_fast: T must be nonnegative");
  if (trajectory != nullptr) {
    trajectory->times.push_back(y0.tau);
    trajectory->states.push_back(y0.y);
  }
  if (T == 0.0) return y0;
  if (!(h > 0.0) || h > T * (1.0 + 1e-12)) throw UsageError("simulate_fast: need 0 < h <= T");
  const std::size_t steps = step_count(T, h);
  const double dt = T / static_cast<double>(steps);
  FastStepper stepper(spec, dt);
  FastState s = y0;
  std::vector<double> z(spec.modes());
  const std::size_t every = std::max<std::size_t>(1, snapshot_every);
  for (std::size_t i = 0; i < steps; ++i) {
    rng.normals({s.steps, 0}, z);
    stepper.advance(s.y.span(), z);
    s.steps += 1;
    s.tau = y0.tau + dt * static_cast<double>(i + 1);
    if (trajectory != nullptr && ((i + 1) % every == 0 || i + 1 == steps)) {
      trajectory->times.push_back(s.tau);
      trajectory->states.push_back(s.y);
    }
  }
  return s;
}

ContractionCurve contraction_diagnostic(const SpectralField& y, const SpectralField& y2, double T,
                                        double h, const SystemSpec& spec, const RngStream& rng) {
  require_same_size(y.size(), spec.modes(), "contraction_diagnostic");
  require_same_size(y2.size(), spec.modes(), "contraction_diagnostic");
  if (!(h > 0.0) || !(T > 0.0)) throw UsageError("contraction_diagnostic: need T > 0 and h > 0");
  const std::size_t steps = step_count(T, h);
  const double dt = T / static_cast<double>(steps);
  FastStepper stepper(spec, dt);
  SpectralField a = y;
  SpectralField b = y2;
  std::vector<double> z(spec.modes());
  ContractionCurve curve;
  auto record = [&](double t) {
    std::vector<double> per_mode(spec.modes());
    double total = 0.0;
    for (std::size_t k = 0; k < spec.modes(); ++k) {
      const double d = a[k] - b[k];
      per_mode[k] = d * d;
      total += d * d;
    }
    curve.times.push_back(t);
    curve.squared_distance.push_back(total);
    curve.mode_squared.push_back(std::move(per_mode));
  };
  record(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto addr = NoiseAddress{static_cast<std::uint32_t>(i), 0};
    rng.normals(addr, z);
    stepper.advance(a.span(), z);
    stepper.advance(b.span(), z);
    record(dt * static_cast<double>(i + 1));
  }

  // Least-squares slope of log ‖Δ‖² against t over the representable part.
  double st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double d = curve.squared_distance[i];
    if (!(d > 1e-280)) continue;
    const double t = curve.times[i];
    const double l = std::log(d);
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
    ++m;
  }
  if (m >= 2) {
    const double denom = static_cast<double>(m) * stt - st * st;
    if (denom > 0.0) curve.fitted_rate = -(static_cast<double>(m) * stl - st * sl) / denom;
  }
  return curve;
}

std::vector<double> InvariantSample::mode_means() const {
  if (samples.empty()) return {};
  std::vector<double> m(samples.front().size(), 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += s[k];
  for (auto& v : m) v /= static_cast<double>(samples.size());
  return m;
}

std::vector<double> InvariantSample::mode_variances() const {
  if (samples.size() < 2) return std::vector<double>(samples.empty() ? 0 : samples.front().size(), 0.0);
  const auto m = mode_means();
  std::vector<double> v(m.size(), 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < m.size(); ++k) v[k] += (s[k] - m[k]) * (s[k] - m[k]);
  for (auto& x : v) x /= static_cast<double>(samples.size() - 1);
  return v;
}

double InvariantSample::mean_square_norm() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += inner(s, s);
  return acc / static_cast<double>(samples.size());
}

double default_burn_in(const SystemSpec& spec) { return 10.0 / spec.eta(); }
double default_thinning(const SystemSpec& spec) { return 1.0 / spec.eta(); }

InvariantSample sample_invariant(const SystemSpec& spec, double burn_in, std::size_t n, double thin,
                                 double h, const RngStream& rng) {
  spec.reaction.validate(spec.basis);
  if (n == 0) throw UsageError("sample_invariant: n must be positive");
  if (burn_in < 0.0 || !(thin > 0.0) || !(h > 0.0)) {
    throw UsageError("sample_invariant: need burn_in >= 0, thin > 0, h > 0");
  }
  const std::size_t per_thin = step_count(thin, std::min(h, thin));
  const double dt = thin / static_cast<double>(per_thin);
  const std::size_t burn_steps = burn_in > 0.0 ? step_count(burn_in, dt) : 0;
  FastStepper stepper(spec, dt);
  std::vector<double> z(spec.modes());
  SpectralField y(spec.modes());
  std::uint32_t counter = 0;
  auto advance = [&] {
    rng.normals({counter++, 0}, z);
    stepper.advance(y.span(), z);
  };
  for (std::size_t i = 0; i < burn_steps; ++i) advance();
  InvariantSample out;
  out.burn_in = dt * static_cast<double>(burn_steps);
  out.thinning = thin;
  out.samples.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < per_thin; ++i) advance();
    out.samples.push_back(y);
  }
  return out;
}

}  // namespace sfwave
