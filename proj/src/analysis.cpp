#include "sfwave/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "sfwave/errors.hpp"

namespace sfwave {

namespace {

constexpr std::size_t kChunk = 64;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

// Decorrelates the averaged runs from the coupled ones when common random
// numbers are switched off.
constexpr std::uint64_t kIndependentSalt = 0x5eed0fa11ull;

struct LeastSquares {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LeastSquares fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LeastSquares f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace

TestFunctional TestFunctional::projection(SpectralField w, double c) {
  TestFunctional phi;
  phi.kind = Kind::bounded_projection;
  phi.direction = std::move(w);
  phi.phase = c;
  return phi;
}

TestFunctional TestFunctional::bump() {
  TestFunctional phi;
  phi.kind = Kind::gaussian_bump;
  return phi;
}

double TestFunctional::value(const SpectralField& u) const {
  if (kind == Kind::bounded_projection) return std::sin(inner(u, direction) + phase);
  return std::exp(-0.5 * inner(u, u));
}

double TestFunctional::derivative(const SpectralField& u, const SpectralField& z) const {
  if (kind == Kind::bounded_projection) {
    return std::cos(inner(u, direction) + phase) * inner(direction, z);
  }
  return -std::exp(-0.5 * inner(u, u)) * inner(u, z);
}

void RunningStats::push(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.count == 0) return;
  if (count == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(o.count);
  const double n = na + nb;
  const double delta = o.mean - mean;
  mean += delta * nb / n;
  m2 += o.m2 + delta * delta * na * nb / n;
  count += o.count;
}

double RunningStats::variance() const {
  return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
}

double RunningStats::stderr_of_mean() const {
  return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

void parallel_chunks(std::size_t chunks, unsigned threads,
                     const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          body(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = chunks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

void check_mc(const MonteCarloOptions& mc) {
  if (mc.replicas < 2) throw UsageError("weak_error: at least 2 replicas are needed for a stderr");
}

std::vector<double> averaged_observables(const TestFunctional& phi, const WaveState& x0,
                                         const MultiscaleConfig& cfg, const SystemSpec& spec,
                                         const AveragedDrift& fbar, const MonteCarloOptions& mc) {
  const std::uint64_t seed = mc.common_random_numbers ? mc.seed : mc.seed ^ kIndependentSalt;
  std::vector<double> out(mc.replicas);
  parallel_chunks(chunk_count(mc.replicas), mc.threads, [&](std::size_t c) {
    const std::size_t end = std::min(mc.replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const auto path = simulate_averaged(x0, cfg, fbar, spec, seed, static_cast<std::uint32_t>(r));
      out[r] = phi.value(path.terminal.u);
    }
  });
  return out;
}

WeakErrorPoint coupled_point(const TestFunctional& phi, const WaveState& x0,
                             const SpectralField& y0, const MultiscaleConfig& cfg,
                             const SystemSpec& spec, const std::vector<double>& averaged,
                             const MonteCarloOptions& mc) {
  const std::size_t chunks = chunk_count(mc.replicas);
  std::vector<RunningStats> partial(chunks);
  parallel_chunks(chunks, mc.threads, [&](std::size_t c) {
    const std::size_t end = std::min(mc.replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const auto path = simulate_coupled(x0, y0, cfg, spec, mc.seed, static_cast<std::uint32_t>(r));
      partial[c].push(phi.value(path.terminal.u) - averaged[r]);
    }
  });
  RunningStats total;
  for (const auto& p : partial) total.merge(p);
  return WeakErrorPoint{cfg.epsilon, total.mean, total.stderr_of_mean(), total.count, mc.seed};
}

}  // namespace

WeakErrorPoint weak_error(const TestFunctional& phi, const WaveState& x0, const SpectralField& y0,
                          double epsilon, const MultiscaleConfig& cfg, const SystemSpec& spec,
                          const AveragedDrift& fbar, const MonteCarloOptions& mc) {
  return weak_error_sweep(phi, x0, y0, {epsilon}, cfg, spec, fbar, mc).front();
}

std::vector<WeakErrorPoint> weak_error_sweep(const TestFunctional& phi, const WaveState& x0,
                                             const SpectralField& y0,
                                             const std::vector<double>& epsilons,
                                             const MultiscaleConfig& cfg, const SystemSpec& spec,
                                             const AveragedDrift& fbar,
                                             const MonteCarloOptions& mc) {
  check_mc(mc);
  spec.validate();
  std::vector<MultiscaleConfig> per_eps;
  for (double eps : epsilons) {
    MultiscaleConfig c = cfg;
    c.epsilon = eps;
    c.validate();
    (void)effective_micro_ratio(c, spec);
    per_eps.push_back(c);
  }
  const auto averaged = averaged_observables(phi, x0, cfg, spec, fbar, mc);
  std::vector<WeakErrorPoint> points;
  points.reserve(per_eps.size());
  for (const auto& c : per_eps) points.push_back(coupled_point(phi, x0, y0, c, spec, averaged, mc));
  return points;
}

OrderFit order_fit(const std::vector<WeakErrorPoint>& points) {
  OrderFit fit;
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    if (std::abs(p.mean_diff) > 2.0 * p.stderr && p.epsilon > 0.0) {
      fit.used_epsilons.push_back(p.epsilon);
      lx.push_back(std::log(p.epsilon));
      ly.push_back(std::log(std::abs(p.mean_diff)));
    } else {
      fit.excluded_epsilons.push_back(p.epsilon);
    }
  }
  if (lx.size() < 3) return fit;
  const auto line = fit_line(lx, ly);
  fit.conclusive = true;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  return fit;
}

LinearSlope small_epsilon_slope(const std::vector<WeakErrorPoint>& points, std::size_t count) {
  if (points.size() < count || count < 2) {
    throw UsageError("small_epsilon_slope: not enough points");
  }
  std::vector<WeakErrorPoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  sorted.resize(count);
  double mx = 0.0;
  for (const auto& p : sorted) mx += p.epsilon;
  mx /= static_cast<double>(count);
  double sxx = 0.0;
  for (const auto& p : sorted) sxx += (p.epsilon - mx) * (p.epsilon - mx);
  LinearSlope out;
  double var = 0.0;
  for (const auto& p : sorted) {
    const double c = (p.epsilon - mx) / sxx;
    out.slope += c * p.mean_diff;
    var += c * c * p.stderr * p.stderr;
  }
  out.stderr = std::sqrt(var);
  return out;
}

namespace {

// Uniform sub-stepping of [0, dt] no coarser than max_step (one step when exact).
std::size_t substeps_for(double dt, double max_step) {
  if (!std::isfinite(max_step)) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt / max_step - 1e-9)));
}

double resolve_fast_step(const SystemSpec& spec, double requested) {
  if (requested > 0.0) return requested;
  if (spec.reaction.is_zero()) return std::numeric_limits<double>::infinity();
  return 0.1 / spec.basis.alphas.back();
}

// Steppers for a fixed, nondecreasing time grid starting at 0.
struct GridSteppers {
  std::vector<std::size_t> substeps;
  std::vector<FastStepper> steppers;  // one per interval (index j covers t_{j-1} → t_j)

  GridSteppers(const SystemSpec& spec, const std::vector<double>& times, double max_step) {
    double prev = 0.0;
    substeps.reserve(times.size());
    steppers.reserve(times.size());
    for (double t : times) {
      const double dt = t - prev;
      const std::size_t m = dt > 0.0 ? substeps_for(dt, max_step) : 0;
      substeps.push_back(m);
      steppers.emplace_back(spec, m > 0 ? dt / static_cast<double>(m) : 1.0);
      prev = t;
    }
  }
};

}  // namespace

DecayReport fbar_decay_check(const SystemSpec& spec, const AveragedDrift& fbar,
                             const SpectralField& u, const SpectralField& y,
                             const std::vector<double>& t_grid, std::size_t inner_replicas,
                             std::uint64_t seed, double h_fast) {
  spec.validate();
  const std::size_t n = spec.modes();
  require_same_size(u.size(), n, "fbar_decay_check");
  require_same_size(y.size(), n, "fbar_decay_check");
  if (inner_replicas < 2) throw UsageError("fbar_decay_check: need at least 2 inner replicas");
  if (t_grid.empty() || t_grid.front() < 0.0 || !std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw UsageError("fbar_decay_check: t_grid must be nonempty, nonnegative and sorted");
  }
  const double max_step = resolve_fast_step(spec, h_fast);
  const SpectralField fbar_u = fbar.evaluate(u);
  const std::size_t nt = t_grid.size();
  const RngStream base(seed, StreamTag::inner, 0xdecaull);

  const std::size_t chunks = chunk_count(inner_replicas);
  std::vector<std::vector<RunningStats>> partial(chunks, std::vector<RunningStats>(nt * n));
  parallel_chunks(chunks, 1, [&](std::size_t c) {
    const GridSteppers grid_steppers(spec, t_grid, max_step);
    const Collocation grid = spec.collocation();
    const auto u_nodes = grid.to_grid(u);
    std::vector<double> nodes(grid.grid_size()), coeffs(n), z(n);
    const std::size_t end = std::min(inner_replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const RngStream rng = base.with_replica(static_cast<std::uint32_t>(r));
      SpectralField state = y;
      for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t s = 0; s < grid_steppers.substeps[j]; ++s) {
          rng.normals({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(s)}, z);
          grid_steppers.steppers[j].advance(state.span(), z);
        }
        grid.to_grid(state.span(), nodes);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
          nodes[q] = spec.coupling.value(u_nodes[q], nodes[q]);
        }
        grid.from_grid(nodes, coeffs);
        for (std::size_t k = 0; k < n; ++k) partial[c][j * n + k].push(coeffs[k]);
      }
    }
  });
  std::vector<RunningStats> total(nt * n);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(p[i]);

  DecayReport report;
  report.times = t_grid;
  std::vector<double> fx, fy;
  for (std::size_t j = 0; j < nt; ++j) {
    double dist = 0.0, floor = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& st = total[j * n + k];
      const double diff = fbar_u[k] - st.mean;
      const double var_mean = st.variance() / static_cast<double>(st.count);
      dist += diff * diff - var_mean;
      floor += var_mean;
    }
    report.distance.push_back(dist);
    report.noise_floor.push_back(floor);
    if (dist > 10.0 * floor && dist > 0.0) {
      fx.push_back(t_grid[j]);
      fy.push_back(std::log(dist));
    }
  }
  report.points_used = fx.size();
  if (fx.size() >= 2) report.fitted_rate = -fit_line(fx, fy).slope;
  return report;
}

std::vector<double> variational_samples(const TestFunctional& phi, const WaveState& x0,
                                        const std::vector<WaveState>& directions,
                                        const MultiscaleConfig& cfg, const AveragedDrift& fbar,
                                        const SystemSpec& spec, const MonteCarloOptions& mc) {
  cfg.validate();
  const std::size_t n = spec.modes();
  require_same_size(x0.size(), n, "variational_samples");
  for (const auto& d : directions) require_same_size(d.size(), n, "variational_samples");
  const std::size_t nd = directions.size();
  const std::size_t steps = cfg.slow_steps();
  const double h = cfg.slow_step();
  std::vector<double> out(mc.replicas * nd);

  parallel_chunks(chunk_count(mc.replicas), mc.threads, [&](std::size_t c) {
    const WaveStepper wave(spec.basis, h, spec.q1, spec.sigma1);
    const Collocation& grid = fbar.grid();
    const std::size_t g = grid.grid_size();
    std::vector<double> u_nodes(g), f_nodes(g), e_nodes(g), d_nodes(g), drift(n), ku(n), kv(n);
    std::vector<double> z(wave.normals_needed());
    const std::size_t end = std::min(mc.replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const RngStream rng = slow_noise_stream(mc.seed, static_cast<std::uint32_t>(r));
      WaveState x = x0;
      std::vector<WaveState> etas = directions;
      for (std::size_t i = 0; i < steps; ++i) {
        grid.to_grid(x.u.span(), u_nodes);
        for (auto& eta : etas) {
          grid.to_grid(eta.u.span(), e_nodes);
          fbar.derivative_nodes(u_nodes, e_nodes, d_nodes);
          grid.from_grid(d_nodes, drift);
          for (std::size_t k = 0; k < n; ++k) {
            ku[k] = wave.full_weight_u()[k] * drift[k];
            kv[k] = wave.full_weight_v()[k] * drift[k];
          }
          wave.advance_linear(eta, ku, kv);
        }
        fbar.evaluate_nodes(u_nodes, f_nodes);
        grid.from_grid(f_nodes, drift);
        for (std::size_t k = 0; k < n; ++k) {
          ku[k] = wave.full_weight_u()[k] * drift[k];
          kv[k] = wave.full_weight_v()[k] * drift[k];
        }
        rng.normals({static_cast<std::uint32_t>(i), 0}, z);
        wave.advance(x, ku, kv, z);
      }
      for (std::size_t d = 0; d < nd; ++d) out[r * nd + d] = phi.derivative(x.u, etas[d].u);
    }
  });
  return out;
}

DerivativeEstimate directional_derivative_ubar(const TestFunctional& phi, const WaveState& x0,
                                               const WaveState& direction,
                                               const MultiscaleConfig& cfg,
                                               const AveragedDrift& fbar, const SystemSpec& spec,
                                               const MonteCarloOptions& mc) {
  const auto samples = variational_samples(phi, x0, {direction}, cfg, fbar, spec, mc);
  RunningStats st;
  for (double s : samples) st.push(s);
  return {st.mean, st.stderr_of_mean()};
}

CorrectorEstimate corrector_u1(const TestFunctional& phi, const WaveState& x0,
                               const SpectralField& y0, const MultiscaleConfig& cfg,
                               const SystemSpec& spec, const AveragedDrift& fbar,
                               const CorrectorOptions& options, const MonteCarloOptions& mc) {
  spec.validate();
  const double eta = spec.eta();
  if (!(eta > 0.0)) throw ConfigError("corrector_u1: fast process is not mixing (eta <= 0)");
  if (!(options.tol > 0.0 && options.tol < 1.0)) throw UsageError("corrector_u1: tol must lie in (0, 1)");
  if (options.batches < 2 || options.inner_replicas < options.batches) {
    throw UsageError("corrector_u1: need at least 2 batches and one inner replica per batch");
  }
  if (mc.replicas < 2) throw UsageError("corrector_u1: need at least 2 outer replicas");
  const std::size_t n = spec.modes();
  require_same_size(y0.size(), n, "corrector_u1");

  CorrectorEstimate est;
  est.s_max = 2.0 * std::log(1.0 / options.tol) / eta;
  est.inner_replicas = options.inner_replicas;
  est.outer_replicas = mc.replicas;

  // Quadratically clustered nodes resolve the fast transients near s = 0.
  const std::size_t J = std::max<std::size_t>(2, options.quadrature_nodes);
  std::vector<double> s_nodes(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    const double r = static_cast<double>(j) / static_cast<double>(J);
    s_nodes[j] = est.s_max * r * r;
  }
  std::vector<double> weights(J + 1, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double ds = s_nodes[j + 1] - s_nodes[j];
    weights[j] += 0.5 * ds;
    weights[j + 1] += 0.5 * ds;
  }
  const std::vector<double> advance_times(s_nodes.begin() + 1, s_nodes.end());
  const double max_step = resolve_fast_step(spec, options.h_fast);
  const SpectralField fbar_x = fbar.evaluate(x0.u);
  const RngStream base(mc.seed, StreamTag::inner, 0xc0ffeeull);

  const std::size_t K = options.batches;
  const std::size_t chunks = chunk_count(options.inner_replicas);
  // Per chunk, per batch: sum of the integrated discrepancy.
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(K * n, 0.0));
  parallel_chunks(chunks, mc.threads, [&](std::size_t c) {
    const GridSteppers steppers(spec, advance_times, max_step);
    const Collocation grid = spec.collocation();
    const auto u_nodes = grid.to_grid(x0.u);
    std::vector<double> nodes(grid.grid_size()), coeffs(n), z(n), integral(n);
    const std::size_t end = std::min(options.inner_replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const RngStream rng = base.with_replica(static_cast<std::uint32_t>(r));
      SpectralField y = y0;
      std::fill(integral.begin(), integral.end(), 0.0);
      for (std::size_t j = 0; j <= J; ++j) {
        if (j > 0) {
          for (std::size_t s = 0; s < steppers.substeps[j - 1]; ++s) {
            rng.normals({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(s)}, z);
            steppers.steppers[j - 1].advance(y.span(), z);
          }
        }
        grid.to_grid(y.span(), nodes);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
          nodes[q] = spec.coupling.value(u_nodes[q], nodes[q]);
        }
        grid.from_grid(nodes, coeffs);
        for (std::size_t k = 0; k < n; ++k) integral[k] += weights[j] * (coeffs[k] - fbar_x[k]);
      }
      double* dst = &partial[c][(r % K) * n];
      for (std::size_t k = 0; k < n; ++k) dst[k] += integral[k];
    }
  });

  std::vector<std::size_t> batch_size(K, 0);
  for (std::size_t r = 0; r < options.inner_replicas; ++r) ++batch_size[r % K];
  std::vector<WaveState> directions(K, WaveState(n));
  est.discrepancy = SpectralField(n);
  for (std::size_t b = 0; b < K; ++b) {
    for (std::size_t c = 0; c < chunks; ++c)
      for (std::size_t k = 0; k < n; ++k) directions[b].v[k] += partial[c][b * n + k];
    for (std::size_t k = 0; k < n; ++k) {
      est.discrepancy[k] += directions[b].v[k];
      directions[b].v[k] /= static_cast<double>(batch_size[b]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    est.discrepancy[k] /= static_cast<double>(options.inner_replicas);
  }

  const auto samples = variational_samples(phi, x0, directions, cfg, fbar, spec, mc);
  std::vector<RunningStats> per_batch(K);
  RunningStats per_replica;
  for (std::size_t r = 0; r < mc.replicas; ++r) {
    double row = 0.0;
    for (std::size_t b = 0; b < K; ++b) {
      per_batch[b].push(samples[r * K + b]);
      row += samples[r * K + b] * static_cast<double>(batch_size[b]);
    }
    per_replica.push(row / static_cast<double>(options.inner_replicas));
  }
  RunningStats across_batches;
  for (const auto& b : per_batch) across_batches.push(b.mean);
  est.u1_value = per_replica.mean;
  const double inner_var = across_batches.variance() / static_cast<double>(K);
  const double outer_var = per_replica.variance() / static_cast<double>(mc.replicas);
  est.stderr = std::sqrt(inner_var + outer_var);
  est.ci_halfwidth = 1.96 * est.stderr;
  return est;
}

ResidualReport expansion_residual(const std::vector<WeakErrorPoint>& points,
                                  const CorrectorEstimate& corrector) {
  ResidualReport report;
  for (const auto& p : points) {
    ResidualRow row;
    row.epsilon = p.epsilon;
    row.mean_diff = p.mean_diff;
    row.r_eps = p.mean_diff - p.epsilon * corrector.u1_value;
    const double se_corr = p.epsilon * corrector.stderr;
    row.stderr = std::sqrt(p.stderr * p.stderr + se_corr * se_corr);
    report.rows.push_back(row);
  }
  if (!report.rows.empty()) {
    const auto smallest = std::min_element(report.rows.begin(), report.rows.end(),
                                           [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
    report.correction_not_worse =
        std::abs(smallest->r_eps) <= std::abs(smallest->mean_diff) + 2.0 * smallest->stderr;
  }
  return report;
}

}  // namespace sfwave
