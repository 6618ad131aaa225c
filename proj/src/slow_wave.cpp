#include "sfwave/slow_wave.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "sfwave/errors.hpp"

namespace sfwave {

void MultiscaleConfig::validate() const {
  if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
  if (!(h_slow > 0.0)) throw ConfigError("numerics.h_slow must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("numerics.T must be positive");
  if (h_slow > T * (1.0 + 1e-12)) throw ConfigError("numerics.h_slow must not exceed T");
  if (micro_ratio < 1) throw ConfigError("numerics.micro_ratio must be at least 1");
}

std::size_t MultiscaleConfig::slow_steps() const {
  const double ratio = T / h_slow;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::size_t>(rounded);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

double MultiscaleConfig::slow_step() const { return T / static_cast<double>(slow_steps()); }

double fast_step_bound(const MultiscaleConfig& cfg, const SystemSpec& spec) {
  if (cfg.max_fast_step > 0.0) return cfg.max_fast_step;
  if (spec.reaction.is_zero()) return std::numeric_limits<double>::infinity();
  return 0.1 / spec.basis.alphas.back();
}

std::uint32_t effective_micro_ratio(const MultiscaleConfig& cfg, const SystemSpec& spec) {
  const double bound = fast_step_bound(cfg, spec);
  const double fast_interval = cfg.slow_step() / cfg.epsilon;
  const double fast_step = fast_interval / cfg.micro_ratio;
  if (fast_step <= bound * (1.0 + 1e-12)) return cfg.micro_ratio;
  if (!cfg.adaptive_micro) {
    throw ConfigError("fast step h_slow/(epsilon*micro_ratio) = " + std::to_string(fast_step) +
                      " exceeds the stability bound " + std::to_string(bound));
  }
  const double needed = std::ceil(fast_interval / bound - 1e-9);
  if (needed > 1e8) throw ConfigError("fast sub-stepping would exceed 1e8 steps per slow step");
  return static_cast<std::uint32_t>(needed);
}

WaveStepper::WaveStepper(const SpectralBasis& basis, double h, const QWienerSpec& q1, double sigma1)
    : h_(h),
      omega_(basis.omegas),
      cos_(basis.modes),
      sin_(basis.modes),
      psi_u_(basis.modes),
      psi_v_(basis.modes),
      noise_(q1, sigma1, h, basis) {
  for (std::size_t k = 0; k < basis.modes; ++k) {
    const double w = omega_[k];
    cos_[k] = std::cos(w * h);
    sin_[k] = std::sin(w * h);
    const double half = std::sin(0.5 * w * h);
    psi_u_[k] = 2.0 * half * half / (w * w);  // (1 - cos ωh)/ω²
    psi_v_[k] = sin_[k] / w;
  }
}

void WaveStepper::drift_weights(double a, double b, std::span<double> wu,
                                std::span<double> wv) const {
  if (a < 0.0 || b < a || b > h_ * (1.0 + 1e-12)) {
    throw UsageError("drift_weights: need 0 <= a <= b <= h");
  }
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    const double w = omega_[k];
    const double mid = 0.5 * w * (2.0 * h_ - a - b);
    const double half_width = std::sin(0.5 * w * (b - a));
    wu[k] = 2.0 * std::sin(mid) * half_width / (w * w);
    wv[k] = 2.0 * std::cos(mid) * half_width / w;
  }
}

void WaveStepper::advance_linear(WaveState& x, std::span<const double> kick_u,
                                 std::span<const double> kick_v) const {
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    const double u = x.u[k];
    const double v = x.v[k];
    x.u[k] = cos_[k] * u + sin_[k] / omega_[k] * v + kick_u[k];
    x.v[k] = -omega_[k] * sin_[k] * u + cos_[k] * v + kick_v[k];
  }
}

void WaveStepper::advance(WaveState& x, std::span<const double> kick_u,
                          std::span<const double> kick_v, std::span<const double> normals) const {
  advance_linear(x, kick_u, kick_v);
  noise_.add_sample(normals, x.u.span(), x.v.span());
}

WaveState step_slow(const WaveState& x, const SpectralField& drift, double h,
                    const SpectralBasis& basis, const WaveState& noise_sample) {
  require_same_size(x.size(), basis.modes, "step_slow");
  require_same_size(drift.size(), basis.modes, "step_slow");
  require_same_size(noise_sample.size(), basis.modes, "step_slow");
  if (!(h > 0.0)) throw UsageError("step_slow: h must be positive");
  const WaveStepper stepper(basis, h, QWienerSpec{std::vector<double>(basis.modes, 0.0)}, 0.0);
  std::vector<double> ku(basis.modes), kv(basis.modes);
  for (std::size_t k = 0; k < basis.modes; ++k) {
    ku[k] = stepper.full_weight_u()[k] * drift[k];
    kv[k] = stepper.full_weight_v()[k] * drift[k];
  }
  WaveState out = x;
  stepper.advance_linear(out, ku, kv);
  for (std::size_t k = 0; k < basis.modes; ++k) {
    out.u[k] += noise_sample.u[k];
    out.v[k] += noise_sample.v[k];
  }
  return out;
}

RngStream slow_noise_stream(std::uint64_t seed, std::uint32_t replica) {
  return RngStream(seed, StreamTag::slow_noise, 0, replica);
}

RngStream fast_noise_stream(std::uint64_t seed, double epsilon, std::uint32_t replica) {
  return RngStream(seed, StreamTag::fast_noise, std::bit_cast<std::uint64_t>(epsilon), replica);
}

namespace {

void record(SlowPath& path, const PathOptions& options, std::size_t step, std::size_t total,
            double t, const WaveState& x) {
  if (options.snapshot_every == 0) return;
  if (step % options.snapshot_every == 0 || step == total) {
    path.times.push_back(t);
    path.snapshots.push_back(x);
  }
}

void finish(SlowPath& path, const PathOptions& options, double T, const WaveState& x) {
  if (options.snapshot_every == 0) {
    path.times.push_back(T);
    path.snapshots.push_back(x);
  }
  path.terminal = x;
}

}  // namespace

SlowPath simulate_coupled(const WaveState& x0, const SpectralField& y0, const MultiscaleConfig& cfg,
                          const SystemSpec& spec, std::uint64_t seed, std::uint32_t replica,
                          const PathOptions& options) {
  cfg.validate();
  const std::size_t n = spec.modes();
  require_same_size(x0.size(), n, "simulate_coupled");
  require_same_size(y0.size(), n, "simulate_coupled");

  const std::size_t steps = cfg.slow_steps();
  const double h = cfg.slow_step();
  const std::uint32_t micro = effective_micro_ratio(cfg, spec);
  const double h_fast = h / (cfg.epsilon * micro);

  const WaveStepper wave(spec.basis, h, spec.q1, spec.sigma1);
  const FastStepper fast(spec, h_fast);
  const Collocation grid = spec.collocation();
  const RngStream slow_rng = slow_noise_stream(seed, replica);
  const RngStream fast_rng = fast_noise_stream(seed, cfg.epsilon, replica);
  const CouplingSpec& F = spec.coupling;

  const std::size_t g = grid.grid_size();
  std::vector<double> u_nodes(g), y_nodes(g), drift(n), kick_u(n), kick_v(n);
  std::vector<double> z_slow(wave.normals_needed()), z_fast(n);

  const bool per_micro = cfg.drift_sampling == DriftSampling::micro_steps;
  std::vector<double> wu, wv;
  if (per_micro) {
    wu.resize(micro * n);
    wv.resize(micro * n);
    const double dt = h / micro;
    for (std::uint32_t j = 0; j < micro; ++j) {
      wave.drift_weights(dt * j, j + 1 == micro ? h : dt * (j + 1),
                         std::span<double>(wu).subspan(j * n, n),
                         std::span<double>(wv).subspan(j * n, n));
    }
  }

  SlowPath path;
  WaveState x = x0;
  SpectralField y = y0;
  record(path, options, 0, steps, 0.0, x);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto step_id = static_cast<std::uint32_t>(i);
    grid.to_grid(x.u.span(), u_nodes);
    if (!per_micro) {
      grid.to_grid(y.span(), y_nodes);
      for (std::size_t j = 0; j < g; ++j) y_nodes[j] = F.value(u_nodes[j], y_nodes[j]);
      grid.from_grid(y_nodes, drift);
      for (std::size_t k = 0; k < n; ++k) {
        kick_u[k] = wave.full_weight_u()[k] * drift[k];
        kick_v[k] = wave.full_weight_v()[k] * drift[k];
      }
      for (std::uint32_t j = 0; j < micro; ++j) {
        fast_rng.normals({step_id, j}, z_fast);
        fast.advance(y.span(), z_fast);
      }
    } else {
      std::fill(kick_u.begin(), kick_u.end(), 0.0);
      std::fill(kick_v.begin(), kick_v.end(), 0.0);
      for (std::uint32_t j = 0; j < micro; ++j) {
        grid.to_grid(y.span(), y_nodes);
        for (std::size_t q = 0; q < g; ++q) y_nodes[q] = F.value(u_nodes[q], y_nodes[q]);
        grid.from_grid(y_nodes, drift);
        const double* au = &wu[j * n];
        const double* av = &wv[j * n];
        for (std::size_t k = 0; k < n; ++k) {
          kick_u[k] += au[k] * drift[k];
          kick_v[k] += av[k] * drift[k];
        }
        fast_rng.normals({step_id, j}, z_fast);
        fast.advance(y.span(), z_fast);
      }
    }
    slow_rng.normals({step_id, 0}, z_slow);
    wave.advance(x, kick_u, kick_v, z_slow);
    record(path, options, i + 1, steps, h * static_cast<double>(i + 1), x);
  }
  finish(path, options, cfg.T, x);
  return path;
}

SlowPath simulate_averaged(const WaveState& x0, const MultiscaleConfig& cfg,
                           const AveragedDrift& fbar, const SystemSpec& spec, std::uint64_t seed,
                           std::uint32_t replica, const PathOptions& options) {
  cfg.validate();
  const std::size_t n = spec.modes();
  require_same_size(x0.size(), n, "simulate_averaged");
  const std::size_t steps = cfg.slow_steps();
  const double h = cfg.slow_step();
  const WaveStepper wave(spec.basis, h, spec.q1, spec.sigma1);
  const Collocation& grid = fbar.grid();
  require_same_size(grid.modes(), n, "simulate_averaged");
  const RngStream slow_rng = slow_noise_stream(seed, replica);

  const std::size_t g = grid.grid_size();
  std::vector<double> u_nodes(g), f_nodes(g), drift(n), kick_u(n), kick_v(n);
  std::vector<double> z_slow(wave.normals_needed());

  SlowPath path;
  WaveState x = x0;
  record(path, options, 0, steps, 0.0, x);
  for (std::size_t i = 0; i < steps; ++i) {
    grid.to_grid(x.u.span(), u_nodes);
    fbar.evaluate_nodes(u_nodes, f_nodes);
    grid.from_grid(f_nodes, drift);
    for (std::size_t k = 0; k < n; ++k) {
      kick_u[k] = wave.full_weight_u()[k] * drift[k];
      kick_v[k] = wave.full_weight_v()[k] * drift[k];
    }
    slow_rng.normals({static_cast<std::uint32_t>(i), 0}, z_slow);
    wave.advance(x, kick_u, kick_v, z_slow);
    record(path, options, i + 1, steps, h * static_cast<double>(i + 1), x);
  }
  finish(path, options, cfg.T, x);
  return path;
}

std::vector<GraphNormPoint> graph_norm_diagnostic(const SlowPath& path, const SpectralBasis& basis) {
  std::vector<GraphNormPoint> out;
  out.reserve(path.snapshots.size());
  for (std::size_t i = 0; i < path.snapshots.size(); ++i) {
    const double n1 = product_norm(path.snapshots[i], 1.0, basis);
    out.push_back({path.times[i], n1 * n1});
  }
  return out;
}

}  // namespace sfwave
