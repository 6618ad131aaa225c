// Command-line front end: validate, sweep, diagnostics, fbar, fast.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sfwave/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigInvalid = 2;
constexpr int kInconclusive = 3;
constexpr int kIoError = 4;

struct Common {
  std::string config;
  std::string preset;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
  auto* cfg = cmd->add_option("--config", c.config, "JSON experiment config");
  auto* pre = cmd->add_option("--preset", c.preset, "built-in config instead of --config");
  cfg->excludes(pre);
  if (needs_out) cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "override sweep.seed");
  cmd->add_option("--threads", c.threads, "worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
}

sfwave::ExperimentConfig load(const Common& c) {
  if (c.config.empty() && c.preset.empty()) {
    throw sfwave::UsageError("one of --config or --preset is required");
  }
  auto cfg = c.config.empty() ? sfwave::config_from_text(sfwave::preset_json(c.preset))
                              : sfwave::load_config(c.config);
  if (c.seed) sfwave::override_seed(cfg, *c.seed);
  sfwave::override_threads(cfg, c.threads);
  return cfg;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  sfwave::OutputSession session(dir);
  session.add(name, content);
  session.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow-fast stochastic wave equation: averaging and weak-order experiments"};
  app.set_version_flag("--version", std::string(sfwave::version()));
  app.require_subcommand(1);

  Common validate_opts, sweep_opts, diag_opts, fbar_opts, fast_opts;
  auto* validate = app.add_subcommand("validate", "check a config and report every violation");
  add_common(validate, validate_opts, false);

  auto* sweep = app.add_subcommand("sweep", "weak-error sweep, order fit and corrector");
  add_common(sweep, sweep_opts, true);

  auto* diag = app.add_subcommand("diagnostics", "fast-process and averaging diagnostics");
  add_common(diag, diag_opts, true);

  auto* fbar = app.add_subcommand("fbar", "export the averaged drift at u = x1");
  add_common(fbar, fbar_opts, true);
  std::size_t fbar_samples = 4096;
  fbar->add_option("--samples", fbar_samples, "invariant samples for the ergodic estimate (0: skip)")
      ->capture_default_str();

  auto* fast = app.add_subcommand("fast", "export a fast-process trajectory from y0 as CSV");
  add_common(fast, fast_opts, true);
  double horizon = 1.0, fast_h = 0.01;
  std::size_t every = 1;
  fast->add_option("--horizon", horizon, "fast time span")->capture_default_str();
  fast->add_option("--step", fast_h, "fast step")->capture_default_str();
  fast->add_option("--every", every, "keep every n-th step")->capture_default_str();

  app.add_subcommand("presets", "list built-in configs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("presets")) {
      for (const auto& name : sfwave::preset_names()) std::cout << name << "\n";
      return kOk;
    }
    if (validate->parsed()) {
      const auto cfg = load(validate_opts);
      std::cout << "config '" << cfg.name << "' is valid (hash "
                << sfwave::sha256_hex(cfg.canonical).substr(0, 16) << ")\n";
      return kOk;
    }
    if (sweep->parsed()) {
      const auto cfg = load(sweep_opts);
      const auto res = sfwave::run_sweep(cfg, sweep_opts.out);
      for (const auto& p : res.points) {
        std::printf("eps=%-10g mean_diff=% .6e stderr=%.3e\n", p.epsilon, p.mean_diff, p.stderr);
      }
      if (res.corrector) {
        std::printf("u1=% .6e  95%% ci half-width %.3e\n", res.corrector->u1_value,
                    res.corrector->ci_halfwidth);
      }
      if (!res.fit.conclusive) {
        std::printf("order fit inconclusive: %zu usable points (3 needed)\n",
                    res.fit.used_epsilons.size());
        return kInconclusive;
      }
      std::printf("order fit: slope=%.4f r2=%.4f over %zu points\n", res.fit.slope,
                  res.fit.r_squared, res.fit.used_epsilons.size());
      return kOk;
    }
    if (diag->parsed()) {
      const auto cfg = load(diag_opts);
      const auto manifest = sfwave::run_diagnostics(cfg, diag_opts.out);
      for (const auto& o : manifest.outputs) std::cout << "wrote " << o.path << "\n";
      return kOk;
    }
    if (fbar->parsed()) {
      const auto cfg = load(fbar_opts);
      write_file(fbar_opts.out, "fbar.json", sfwave::fbar_json(cfg, fbar_samples));
      std::cout << "wrote " << (std::filesystem::path(fbar_opts.out) / "fbar.json").string() << "\n";
      return kOk;
    }
    if (fast->parsed()) {
      const auto cfg = load(fast_opts);
      write_file(fast_opts.out, "fast.csv", sfwave::fast_trajectory_csv(cfg, horizon, fast_h, every));
      std::cout << "wrote " << (std::filesystem::path(fast_opts.out) / "fast.csv").string() << "\n";
      return kOk;
    }
  } catch (const sfwave::ConfigInvalid& e) {
    std::cerr << e.what() << "\n";
    return kConfigInvalid;
  } catch (const sfwave::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const sfwave::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const sfwave::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
