#include "sfwave/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sfwave/errors.hpp"

#ifndef SFWAVE_VERSION
#define SFWAVE_VERSION "0.0.0"
#endif

namespace sfwave {

using nlohmann::json;
namespace fs = std::filesystem;

const char* version() { return SFWAVE_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw InternalError("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest start_manifest(const ExperimentConfig& cfg, const std::string& kind) {
  RunManifest m;
  m.kind = kind;
  m.config_name = cfg.name;
  m.config_hash = sha256_hex(cfg.canonical);
  m.base_seed = cfg.sweep.seed;
  m.version = version();
  m.started_utc = utc_now();
  return m;
}

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

json doubles(const SpectralField& f) { return doubles(f.coeffs); }

json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

// Step for invariant sampling: exact OU step per thinning interval, else the
// configured fast step (default 0.1/α_N).
double invariant_step(const SystemSpec& spec, double thin, double requested) {
  if (spec.fast_is_ou()) return thin;
  if (requested > 0.0) return requested;
  return 0.1 / spec.basis.alphas.back();
}

InvariantSample draw_mu(const ExperimentConfig& cfg, std::size_t n, double h_fast) {
  const SystemSpec& spec = cfg.system;
  const double burn = cfg.fbar.burn_in > 0.0 ? cfg.fbar.burn_in : default_burn_in(spec);
  const double thin = cfg.fbar.thin > 0.0 ? cfg.fbar.thin : default_thinning(spec);
  const RngStream rng(cfg.sweep.seed, StreamTag::invariant);
  return sample_invariant(spec, burn, n, thin, invariant_step(spec, thin, h_fast), rng);
}

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["kind"] = kind;
  j["config_name"] = config_name;
  j["config_hash"] = config_hash;
  j["base_seed"] = base_seed;
  j["streams"] = streams;
  j["version"] = version;
  j["started_utc"] = started_utc;
  j["finished_utc"] = finished_utc;
  j["outputs"] = json::array();
  for (const auto& o : outputs) {
    j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  }
  return j.dump(2) + "\n";
}

OutputSession::OutputSession(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw IoError("cannot create output directory '" + dir_ + "': " + ec.message());
  }
}

OutputSession::~OutputSession() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, final_path] : pending_) fs::remove(tmp, ec);
}

OutputFile OutputSession::add(const std::string& name, const std::string& content) {
  const fs::path final_path = fs::path(dir_) / name;
  const fs::path tmp = fs::path(dir_) / ("." + name + ".partial");
  pending_.emplace_back(tmp.string(), final_path.string());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  return OutputFile{final_path.string(), sha256_hex(content), content.size()};
}

void OutputSession::commit() {
  std::vector<std::string> done;
  for (const auto& [tmp, final_path] : pending_) {
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) {
      for (const auto& p : done) fs::remove(p, ec);
      throw IoError("cannot move output into place at '" + final_path + "': " + ec.message());
    }
    done.push_back(final_path);
  }
  committed_ = true;
}

AveragedDrift prepare_fbar(const ExperimentConfig& cfg) {
  const SystemSpec& spec = cfg.system;
  const Collocation grid = spec.collocation();
  if (cfg.fbar.mode == FbarSettings::Mode::oracle) {
    return AveragedDrift::oracle(spec.coupling,
                                 ou_stationary_variances(spec.q2.lambdas, spec.sigma2, spec.basis),
                                 grid);
  }
  return AveragedDrift::ergodic(spec.coupling, draw_mu(cfg, cfg.fbar.n, cfg.fbar.h_fast).samples,
                                grid);
}

SweepOutcome compute_sweep(const ExperimentConfig& cfg) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  const AveragedDrift fbar = prepare_fbar(cfg);
  const MonteCarloOptions mc = cfg.monte_carlo();
  SweepOutcome out;
  out.points = weak_error_sweep(cfg.functional, cfg.initial.x, cfg.initial.y, cfg.sweep.epsilons,
                                cfg.numerics, cfg.system, fbar, mc);
  out.fit = order_fit(out.points);
  if (out.points.size() >= 3) out.small_eps_slope = small_epsilon_slope(out.points, 3);
  if (cfg.corrector.enabled) {
    MonteCarloOptions outer = mc;
    if (cfg.corrector.outer_replicas > 0) outer.replicas = cfg.corrector.outer_replicas;
    out.corrector = corrector_u1(cfg.functional, cfg.initial.x, cfg.initial.y, cfg.numerics,
                                 cfg.system, fbar, cfg.corrector.options, outer);
    out.residual = expansion_residual(out.points, *out.corrector);
  }
  return out;
}

std::string sweep_csv(const std::vector<WeakErrorPoint>& points) {
  std::string out = "epsilon, mean_diff, stderr, replicas, seed\n";
  for (const auto& p : points) {
    out += format_double(p.epsilon) + ", " + format_double(p.mean_diff) + ", " +
           format_double(p.stderr) + ", " + std::to_string(p.replicas) + ", " +
           std::to_string(p.seed) + "\n";
  }
  return out;
}

std::string sweep_report_json(const SweepOutcome& o) {
  json j;
  j["conclusive"] = o.fit.conclusive;
  j["slope"] = o.fit.conclusive ? json(o.fit.slope) : json(nullptr);
  j["intercept"] = o.fit.conclusive ? json(o.fit.intercept) : json(nullptr);
  j["r_squared"] = o.fit.conclusive ? json(o.fit.r_squared) : json(nullptr);
  j["used_epsilons"] = doubles(o.fit.used_epsilons);
  j["excluded_epsilons"] = doubles(o.fit.excluded_epsilons);
  if (o.small_eps_slope) {
    j["small_eps_slope"] = {{"slope", o.small_eps_slope->slope},
                            {"stderr", o.small_eps_slope->stderr}};
  } else {
    j["small_eps_slope"] = nullptr;
  }
  if (o.corrector) {
    const auto& c = *o.corrector;
    j["u1"] = c.u1_value;
    j["u1_ci"] = {c.u1_value - c.ci_halfwidth, c.u1_value + c.ci_halfwidth};
    j["u1_stderr"] = c.stderr;
    j["s_max"] = c.s_max;
    j["inner_replicas"] = c.inner_replicas;
    j["outer_replicas"] = c.outer_replicas;
  } else {
    j["u1"] = nullptr;
    j["u1_ci"] = nullptr;
  }
  json table = json::array();
  if (o.residual) {
    for (const auto& r : o.residual->rows) {
      table.push_back({{"epsilon", r.epsilon},
                       {"mean_diff", r.mean_diff},
                       {"r_eps", r.r_eps},
                       {"stderr", r.stderr}});
    }
    j["correction_not_worse"] = o.residual->correction_not_worse;
  }
  j["r_eps_table"] = table;
  j["sign_convention"] = "mean_diff = E phi(U^eps_T) - E phi(Ubar_T) ~ +eps * u1";
  return j.dump(2) + "\n";
}

SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  RunManifest manifest = start_manifest(cfg, "sweep");
  OutputSession session(out_dir);
  SweepOutcome out = compute_sweep(cfg);
  manifest.streams = {"slow_noise", "fast_noise"};
  if (cfg.fbar.mode == FbarSettings::Mode::ergodic) manifest.streams.push_back("invariant");
  if (cfg.corrector.enabled) manifest.streams.push_back("inner");
  manifest.outputs.push_back(session.add("sweep.csv", sweep_csv(out.points)));
  manifest.outputs.push_back(session.add("report.json", sweep_report_json(out)));
  manifest.finished_utc = utc_now();
  session.add("manifest.json", manifest.to_json());
  session.commit();
  out.manifest = std::move(manifest);
  return out;
}

std::string compute_diagnostics(const ExperimentConfig& cfg) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  const SystemSpec& spec = cfg.system;
  const auto& d = cfg.diagnostics;
  const std::size_t n = spec.modes();
  const double eta = spec.eta();
  json j;
  j["config_name"] = cfg.name;
  j["alpha_1"] = spec.basis.alphas.front();
  j["reaction_lipschitz"] = spec.reaction.lipschitz();
  j["eta"] = eta;

  // Pathwise contraction under shared noise, from y₀ against 0.
  {
    const RngStream rng(cfg.sweep.seed, StreamTag::fast_diagnostic);
    const SpectralField zero(n);
    const auto curve = contraction_diagnostic(cfg.initial.y, zero, d.contraction_T, d.fast_h, spec, rng);
    json c;
    c["T"] = d.contraction_T;
    c["h"] = d.fast_h;
    c["fitted_rate"] = optional_number(curve.fitted_rate);
    c["rate_over_eta"] = curve.fitted_rate ? json(*curve.fitted_rate / eta) : json(nullptr);
    c["initial_squared_distance"] = curve.squared_distance.front();
    c["final_squared_distance"] = curve.squared_distance.back();
    if (spec.fast_is_ou()) {
      // Linear difference equation: (Δ_k(t))² = e^{-2α_k t} Δ_k(0)².
      double worst = 0.0;
      for (std::size_t i = 0; i < curve.times.size(); ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          const double d0 = curve.mode_squared.front()[k];
          const double expect = std::exp(-2.0 * spec.basis.alphas[k] * curve.times[i]) * d0;
          const double scale = std::max(d0, 1e-300);
          worst = std::max(worst, std::abs(curve.mode_squared[i][k] - expect) / scale);
        }
      }
      c["max_mode_relative_error"] = worst;
    }
    j["contraction"] = c;
  }

  // Invariant measure statistics from one thinned trajectory.
  const InvariantSample mu = draw_mu(cfg, d.invariant_samples, d.fast_h);
  {
    json m;
    m["samples"] = mu.samples.size();
    m["burn_in"] = mu.burn_in;
    m["thinning"] = mu.thinning;
    const auto var = mu.mode_variances();
    m["mode_means"] = doubles(mu.mode_means());
    m["mode_variances"] = doubles(var);
    m["mean_square_norm"] = mu.mean_square_norm();
    if (spec.fast_is_ou()) {
      const auto expect = ou_stationary_variances(spec.q2.lambdas, spec.sigma2, spec.basis);
      double worst = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (expect[k] > 0.0) worst = std::max(worst, std::abs(var[k] / expect[k] - 1.0));
      }
      m["expected_variances"] = doubles(expect);
      m["max_relative_variance_error"] = worst;
    }
    j["invariant"] = m;
  }

  const AveragedDrift fbar = prepare_fbar(cfg);

  // Decay of ‖F̄(x₁) - E F(x₁, Y_t(y₀))‖².
  {
    const double horizon = d.decay_horizon > 0.0 ? d.decay_horizon : 3.0 / eta;
    std::vector<double> grid(d.decay_points);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid[i] = horizon * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    }
    const auto rep = fbar_decay_check(spec, fbar, cfg.initial.x.u, cfg.initial.y, grid,
                                      d.decay_inner_replicas, cfg.sweep.seed,
                                      spec.fast_is_ou() ? 0.0 : d.fast_h);
    json dc;
    dc["times"] = doubles(rep.times);
    dc["distance"] = doubles(rep.distance);
    dc["noise_floor"] = doubles(rep.noise_floor);
    dc["points_used"] = rep.points_used;
    dc["fitted_rate"] = optional_number(rep.fitted_rate);
    dc["rate_over_eta"] = rep.fitted_rate ? json(*rep.fitted_rate / eta) : json(nullptr);
    j["decay"] = dc;
  }

  // Graph norm ‖U‖₁² + ‖V‖² along an averaged and a coupled path.
  {
    PathOptions opts;
    opts.snapshot_every = std::max<std::size_t>(1, d.graph_snapshot_every);
    MultiscaleConfig c = cfg.numerics;
    c.epsilon = cfg.sweep.epsilons.back();
    const auto avg = simulate_averaged(cfg.initial.x, c, fbar, spec, cfg.sweep.seed, 0, opts);
    const auto cpl = simulate_coupled(cfg.initial.x, cfg.initial.y, c, spec, cfg.sweep.seed, 0, opts);
    auto summarize = [&](const SlowPath& p) {
      const auto pts = graph_norm_diagnostic(p, spec.basis);
      json g;
      std::vector<double> t, v;
      double peak = 0.0;
      for (const auto& q : pts) {
        t.push_back(q.t);
        v.push_back(q.value);
        peak = std::max(peak, q.value);
      }
      g["times"] = doubles(t);
      g["values"] = doubles(v);
      g["max"] = peak;
      return g;
    };
    j["graph_norm"] = {{"epsilon", c.epsilon},
                       {"averaged", summarize(avg)},
                       {"coupled", summarize(cpl)}};
  }

  // Exchange of μ-average and u-derivative along w = e₁.
  {
    const std::size_t m = std::min(d.exchange_samples, mu.samples.size());
    const std::vector<SpectralField> sub(mu.samples.begin(), mu.samples.begin() + static_cast<std::ptrdiff_t>(m));
    const auto rep = dfbar_exchange_check(spec.coupling, cfg.initial.x.u, SpectralField::unit(n, 0),
                                          sub, spec.collocation());
    j["exchange"] = {{"samples", m},
                     {"delta", rep.delta},
                     {"discrepancy", rep.discrepancy},
                     {"derivative_norm", rep.derivative_norm},
                     {"derivative_stderr", rep.derivative_stderr}};
  }
  return j.dump(2) + "\n";
}

RunManifest run_diagnostics(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  RunManifest manifest = start_manifest(cfg, "diagnostics");
  OutputSession session(out_dir);
  const std::string report = compute_diagnostics(cfg);
  manifest.streams = {"fast_diagnostic", "invariant", "inner", "slow_noise", "fast_noise"};
  manifest.outputs.push_back(session.add("diagnostics.json", report));
  manifest.finished_utc = utc_now();
  session.add("diagnostics_manifest.json", manifest.to_json());
  session.commit();
  return manifest;
}

std::string fbar_json(const ExperimentConfig& cfg, std::size_t samples) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  const SystemSpec& spec = cfg.system;
  const Collocation grid = spec.collocation();
  const SpectralField& u = cfg.initial.x.u;
  json j;
  j["u"] = doubles(u);
  j["nodes"] = doubles(grid.nodes());
  j["frozen_mode"] = cfg.fbar.mode == FbarSettings::Mode::oracle ? "oracle" : "ergodic";
  j["frozen"] = doubles(prepare_fbar(cfg).evaluate(u));
  const bool oracle_ok = spec.fast_is_ou() && spec.coupling.kind == CouplingSpec::Kind::separable;
  if (oracle_ok) {
    const auto var = ou_stationary_variances(spec.q2.lambdas, spec.sigma2, spec.basis);
    const auto exact = fbar_oracle(spec.coupling, u, var, grid);
    j["oracle"] = doubles(exact);
    j["oracle_nodes"] = doubles(grid.to_grid(exact));
  }
  if (samples >= 2) {
    const auto mu = draw_mu(cfg, samples, cfg.fbar.h_fast);
    const auto est = estimate_fbar(spec.coupling, u, mu.samples, grid);
    j["ergodic"] = {{"samples", samples},
                    {"mean", doubles(est.mean)},
                    {"stderr", doubles(est.stderr_modes)},
                    {"node_mean", doubles(est.node_mean)},
                    {"node_stderr", doubles(est.node_stderr)}};
  }
  return j.dump(2) + "\n";
}

std::string fast_trajectory_csv(const ExperimentConfig& cfg, double horizon, double h,
                                std::size_t snapshot_every) {
  if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigInvalid(std::move(issues));
  if (!(horizon > 0.0) || !(h > 0.0)) throw UsageError("fast trajectory: horizon and h must be positive");
  const SystemSpec& spec = cfg.system;
  FastTrajectory traj;
  FastState s0;
  s0.y = cfg.initial.y;
  (void)simulate_fast(s0, horizon, std::min(h, horizon), spec,
                      RngStream(cfg.sweep.seed, StreamTag::fast_diagnostic, 1), &traj, snapshot_every);
  std::string out = "t";
  for (std::size_t k = 1; k <= spec.modes(); ++k) out += ", mode_" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += format_double(traj.times[i]);
    for (std::size_t k = 0; k < spec.modes(); ++k) out += ", " + format_double(traj.states[i][k]);
    out += "\n";
  }
  return out;
}

}  // namespace sfwave
