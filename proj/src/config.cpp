#include "sfwave/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sfwave/errors.hpp"

namespace sfwave {

using nlohmann::json;

namespace {

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> table = {
      {"acceptance", R"({
  "name": "acceptance",
  "basis": {"L": 1.0, "N": 16},
  "noise": {"sigma1": 0.5, "sigma2": 0.5,
            "q1": {"power_law": {"c": 1.0, "p": 2.0}},
            "q2": {"power_law": {"c": 1.0, "p": 2.0}}},
  "reaction": "zero",
  "coupling": {"kind": "separable", "f1": "scaled_tanh:0.5", "f2": "sin_shift:0.7"},
  "initial": {"preset": "single_mode"},
  "numerics": {"h_slow": 0.0025, "micro_ratio": 8, "T": 0.5, "drift_sampling": "left_endpoint"},
  "sweep": {"epsilons": [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
            "replicas": 4096, "seed": 20240601},
  "functional": {"kind": "bounded_projection", "c": 0.0},
  "fbar": {"mode": "oracle"},
  "corrector": {"enabled": true, "tol": 0.001, "inner_replicas": 2048, "batches": 8,
                "quadrature_nodes": 256}
})"},
      {"smoke", R"({
  "name": "smoke",
  "basis": {"L": 1.0, "N": 8},
  "noise": {"sigma1": 0.5, "sigma2": 0.5,
            "q1": {"power_law": {"c": 1.0, "p": 2.0}},
            "q2": {"power_law": {"c": 1.0, "p": 2.0}}},
  "reaction": "zero",
  "coupling": {"kind": "separable", "f1": "scaled_tanh:0.5", "f2": "sin_shift:0.7"},
  "initial": {"preset": "single_mode"},
  "numerics": {"h_slow": 0.005, "micro_ratio": 4, "T": 0.25},
  "sweep": {"epsilons": [0.5, 0.25], "replicas": 64, "seed": 7},
  "functional": {"kind": "bounded_projection", "c": 0.0},
  "fbar": {"mode": "oracle"},
  "corrector": {"enabled": true, "inner_replicas": 128, "batches": 4, "quadrature_nodes": 64},
  "diagnostics": {"invariant_samples": 2000, "decay_inner_replicas": 256, "exchange_samples": 256}
})"},
      {"null_coupling", R"({
  "name": "null_coupling",
  "basis": {"L": 1.0, "N": 16},
  "noise": {"sigma1": 0.5, "sigma2": 0.5,
            "q1": {"power_law": {"c": 1.0, "p": 2.0}},
            "q2": {"power_law": {"c": 1.0, "p": 2.0}}},
  "reaction": "zero",
  "coupling": {"kind": "separable", "f1": "scaled_tanh:0.5", "f2": "zero"},
  "initial": {"preset": "single_mode"},
  "numerics": {"h_slow": 0.0025, "micro_ratio": 8, "T": 0.5},
  "sweep": {"epsilons": [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
            "replicas": 1024, "seed": 20240601},
  "functional": {"kind": "bounded_projection", "c": 0.0},
  "fbar": {"mode": "oracle"},
  "corrector": {"enabled": true, "inner_replicas": 512, "batches": 8, "quadrature_nodes": 128}
})"},
      {"ou_diagnostics", R"({
  "name": "ou_diagnostics",
  "basis": {"L": 1.0, "N": 16},
  "noise": {"sigma1": 0.5, "sigma2": 0.5,
            "q1": {"power_law": {"c": 1.0, "p": 2.0}},
            "q2": {"power_law": {"c": 1.0, "p": 2.0}}},
  "reaction": "zero",
  "coupling": {"kind": "separable", "f1": "scaled_tanh:0.5", "f2": "sin_shift:0.7"},
  "initial": {"preset": "single_mode"},
  "numerics": {"h_slow": 0.0025, "micro_ratio": 8, "T": 0.5},
  "sweep": {"epsilons": [0.5, 0.25, 0.125], "replicas": 256, "seed": 11},
  "functional": {"kind": "bounded_projection", "c": 0.0},
  "fbar": {"mode": "oracle"},
  "diagnostics": {"fast_h": 0.01, "contraction_T": 1.0, "invariant_samples": 10000,
                  "decay_inner_replicas": 2048, "decay_points": 12, "exchange_samples": 2048}
})"},
      {"reaction_diagnostics", R"({
  "name": "reaction_diagnostics",
  "basis": {"L": 1.0, "N": 16},
  "noise": {"sigma1": 0.5, "sigma2": 0.5,
            "q1": {"power_law": {"c": 1.0, "p": 2.0}},
            "q2": {"power_law": {"c": 1.0, "p": 2.0}}},
  "reaction": "scaled_tanh:4.0",
  "coupling": {"kind": "entangled_sin"},
  "initial": {"preset": "smooth_bump"},
  "numerics": {"h_slow": 0.0025, "micro_ratio": 8, "T": 0.5},
  "sweep": {"epsilons": [0.5, 0.25], "replicas": 64, "seed": 13},
  "functional": {"kind": "gaussian_bump"},
  "fbar": {"mode": "ergodic", "n": 2000, "h_fast": 0.001},
  "corrector": {"enabled": false},
  "diagnostics": {"fast_h": 0.001, "contraction_T": 1.0, "invariant_samples": 2000,
                  "decay_inner_replicas": 256, "decay_points": 8, "exchange_samples": 512}
})"},
  };
  return table;
}

// Collects structural issues while reading a JSON tree with defaults.
class Reader {
 public:
  explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

  void issue(const std::string& field, const std::string& message) {
    issues_.push_back({field, message});
  }

  const json* child(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    (void)path;
    return &*it;
  }

  double number(const json& obj, const std::string& key, const std::string& path, double fallback) {
    const json* v = child(obj, key, path);
    if (v == nullptr) return fallback;
    if (!v->is_number()) {
      issue(path, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::uint64_t unsigned_int(const json& obj, const std::string& key, const std::string& path,
                             std::uint64_t fallback) {
    const json* v = child(obj, key, path);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned()) {
      if (v->is_number_integer() || v->is_number_float()) {
        issue(path, "expected a nonnegative integer");
      } else {
        issue(path, "expected an integer");
      }
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    const json* v = child(obj, key, path);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) {
      issue(path, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string string(const json& obj, const std::string& key, const std::string& path,
                     const std::string& fallback) {
    const json* v = child(obj, key, path);
    if (v == nullptr) return fallback;
    if (!v->is_string()) {
      issue(path, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    if (!v.is_array()) {
      issue(path, "expected a list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        issue(path + "[" + std::to_string(i) + "]", "expected a number");
        continue;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  std::vector<ConfigIssue>& issues_;
};

QWienerSpec read_spectrum(Reader& r, const json* node, const std::string& path, std::size_t n) {
  if (node == nullptr) return QWienerSpec::power_law(n, 1.0, 2.0);
  if (node->is_array()) return QWienerSpec{r.numbers(*node, path)};
  if (node->is_object() && node->contains("power_law")) {
    const json& pl = (*node)["power_law"];
    const double c = r.number(pl, "c", path + ".power_law.c", 1.0);
    const double p = r.number(pl, "p", path + ".power_law.p", 2.0);
    if (!(p > 1.0)) {
      r.issue(path + ".power_law.p", "must exceed 1 for a trace-class covariance");
      return QWienerSpec{std::vector<double>(n, 0.0)};
    }
    if (!(c >= 0.0)) {
      r.issue(path + ".power_law.c", "must be nonnegative");
      return QWienerSpec{std::vector<double>(n, 0.0)};
    }
    return QWienerSpec::power_law(n, c, p);
  }
  r.issue(path, "expected a list of eigenvalues or {\"power_law\": {\"c\", \"p\"}}");
  return QWienerSpec{std::vector<double>(n, 0.0)};
}

SpectralField read_field(Reader& r, const json& v, const std::string& path) {
  return SpectralField(r.numbers(v, path));
}

void apply_initial_preset(InitialData& init, std::size_t n) {
  init.x = WaveState(n);
  init.y = SpectralField(n);
  if (init.preset == "single_mode") {
    init.x.u[0] = 1.0;
    init.y[0] = 1.0;
  } else if (init.preset == "smooth_bump") {
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = static_cast<double>(k + 1);
      init.x.u[k] = 1.0 / (kk * kk * kk);
      init.y[k] = 1.0 / (kk * kk * kk);
    }
  }
}

}  // namespace

MonteCarloOptions ExperimentConfig::monte_carlo() const {
  MonteCarloOptions mc;
  mc.replicas = sweep.replicas;
  mc.seed = sweep.seed;
  mc.threads = sweep.threads;
  mc.common_random_numbers = sweep.common_random_numbers;
  return mc;
}

ConfigInvalid::ConfigInvalid(std::vector<ConfigIssue> issues)
    : ConfigError([&] {
        std::string msg = "invalid configuration:";
        for (const auto& i : issues) msg += "\n  " + i.field + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : presets()) names.push_back(name);
  return names;
}

std::string preset_json(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw UsageError("unknown preset '" + name + "'");
  return it->second;
}

ConfigParse parse_config(const std::string& json_text) {
  ConfigParse out;
  Reader r(out.issues);
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    r.issue("<root>", std::string("malformed JSON: ") + e.what());
    return out;
  }
  if (!root.is_object()) {
    r.issue("<root>", "expected a JSON object");
    return out;
  }
  if (root.contains("preset")) {
    if (!root["preset"].is_string() || presets().count(root["preset"].get<std::string>()) == 0) {
      r.issue("preset", "unknown preset (known: acceptance, smoke, null_coupling, ou_diagnostics, "
                        "reaction_diagnostics)");
      return out;
    }
    json base = json::parse(preset_json(root["preset"].get<std::string>()));
    json patch = root;
    patch.erase("preset");
    base.merge_patch(patch);
    root = std::move(base);
  }

  static const char* known[] = {"name",   "basis",      "noise", "reaction", "coupling",
                                "initial", "numerics",  "sweep", "functional", "fbar",
                                "corrector", "diagnostics"};
  for (const auto& [key, value] : root.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      r.issue(key, "unknown field");
    }
  }

  ExperimentConfig& cfg = out.config;
  cfg.name = r.string(root, "name", "name", "unnamed");

  const json empty = json::object();
  auto section = [&](const char* key) -> const json& {
    auto it = root.find(key);
    if (it == root.end()) return empty;
    if (!it->is_object()) {
      r.issue(key, "expected an object");
      return empty;
    }
    return *it;
  };
  auto known_keys = [&](const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
        r.issue(path + "." + key, "unknown field");
      }
    }
  };

  // basis
  const json& basis = section("basis");
  known_keys(basis, "basis", {"L", "N", "grid_size"});
  const std::size_t issues_before_basis = out.issues.size();
  const double L = r.number(basis, "L", "basis.L", 1.0);
  const auto N = r.unsigned_int(basis, "N", "basis.N", 16);
  const auto G = r.unsigned_int(basis, "grid_size", "basis.grid_size", 0);
  if (!(L > 0.0) || !std::isfinite(L)) r.issue("basis.L", "must be positive");
  if (N == 0) r.issue("basis.N", "must be at least 1");
  if (N > 4096) r.issue("basis.N", "must not exceed 4096");
  // Everything below is sized by the basis.
  if (out.issues.size() != issues_before_basis) return out;
  cfg.system.basis = make_basis(L, N);
  cfg.system.grid_size = G;

  // noise
  const json& noise = section("noise");
  known_keys(noise, "noise", {"sigma1", "sigma2", "q1", "q2"});
  cfg.system.sigma1 = r.number(noise, "sigma1", "noise.sigma1", 0.5);
  cfg.system.sigma2 = r.number(noise, "sigma2", "noise.sigma2", 0.5);
  cfg.system.q1 = read_spectrum(r, r.child(noise, "q1", "noise.q1"), "noise.q1", N);
  cfg.system.q2 = read_spectrum(r, r.child(noise, "q2", "noise.q2"), "noise.q2", N);

  // nonlinearities
  const std::string reaction = r.string(root, "reaction", "reaction", "zero");
  try {
    cfg.system.reaction = ReactionSpec::parse(reaction);
  } catch (const std::exception& e) {
    r.issue("reaction", e.what());
  }
  const json& coupling = section("coupling");
  known_keys(coupling, "coupling", {"kind", "f1", "f2"});
  const std::string kind = r.string(coupling, "kind", "coupling.kind", "separable");
  if (kind == "separable") {
    try {
      cfg.system.coupling = CouplingSpec::separable(
          ScalarFunction::parse(r.string(coupling, "f1", "coupling.f1", "zero")),
          ScalarFunction::parse(r.string(coupling, "f2", "coupling.f2", "zero")));
    } catch (const std::exception& e) {
      r.issue("coupling", e.what());
    }
  } else if (kind == "entangled_sin") {
    cfg.system.coupling = CouplingSpec::entangled();
  } else {
    r.issue("coupling.kind", "expected 'separable' or 'entangled_sin'");
  }

  // initial data
  const json& init = section("initial");
  known_keys(init, "initial", {"preset", "x1", "x2", "y"});
  cfg.initial.preset = r.string(init, "preset", "initial.preset", "");
  if (!cfg.initial.preset.empty()) {
    if (cfg.initial.preset != "single_mode" && cfg.initial.preset != "smooth_bump") {
      r.issue("initial.preset", "expected 'single_mode' or 'smooth_bump'");
    }
    apply_initial_preset(cfg.initial, N);
  } else {
    cfg.initial.x = WaveState(N);
    cfg.initial.y = SpectralField(N);
    if (const json* v = r.child(init, "x1", "initial.x1")) cfg.initial.x.u = read_field(r, *v, "initial.x1");
    if (const json* v = r.child(init, "x2", "initial.x2")) cfg.initial.x.v = read_field(r, *v, "initial.x2");
    if (const json* v = r.child(init, "y", "initial.y")) cfg.initial.y = read_field(r, *v, "initial.y");
  }

  // numerics
  const json& num = section("numerics");
  known_keys(num, "numerics", {"h_slow", "T", "micro_ratio", "max_fast_step", "adaptive_micro", "drift_sampling"});
  cfg.numerics.h_slow = r.number(num, "h_slow", "numerics.h_slow", 1e-2);
  cfg.numerics.T = r.number(num, "T", "numerics.T", 1.0);
  const auto micro = r.unsigned_int(num, "micro_ratio", "numerics.micro_ratio", 8);
  if (micro > 0xffffffffull) r.issue("numerics.micro_ratio", "too large");
  cfg.numerics.micro_ratio = static_cast<std::uint32_t>(micro);
  cfg.numerics.max_fast_step = r.number(num, "max_fast_step", "numerics.max_fast_step", 0.0);
  cfg.numerics.adaptive_micro = r.boolean(num, "adaptive_micro", "numerics.adaptive_micro", true);
  const std::string sampling =
      r.string(num, "drift_sampling", "numerics.drift_sampling", "left_endpoint");
  if (sampling == "left_endpoint") {
    cfg.numerics.drift_sampling = DriftSampling::left_endpoint;
  } else if (sampling == "micro_steps") {
    cfg.numerics.drift_sampling = DriftSampling::micro_steps;
  } else {
    r.issue("numerics.drift_sampling", "expected 'left_endpoint' or 'micro_steps'");
  }

  // sweep
  const json& sweep = section("sweep");
  known_keys(sweep, "sweep", {"epsilons", "replicas", "seed", "threads", "common_random_numbers"});
  if (const json* v = r.child(sweep, "epsilons", "sweep.epsilons")) {
    cfg.sweep.epsilons = r.numbers(*v, "sweep.epsilons");
  }
  cfg.sweep.replicas = r.unsigned_int(sweep, "replicas", "sweep.replicas", 256);
  cfg.sweep.seed = r.unsigned_int(sweep, "seed", "sweep.seed", 1);
  cfg.sweep.threads = static_cast<unsigned>(r.unsigned_int(sweep, "threads", "sweep.threads", 1));
  cfg.sweep.common_random_numbers =
      r.boolean(sweep, "common_random_numbers", "sweep.common_random_numbers", true);

  // functional
  const json& fn = section("functional");
  known_keys(fn, "functional", {"kind", "w", "c"});
  const std::string fkind = r.string(fn, "kind", "functional.kind", "bounded_projection");
  if (fkind == "bounded_projection") {
    SpectralField w = SpectralField::unit(N, 0);
    if (const json* v = r.child(fn, "w", "functional.w")) w = read_field(r, *v, "functional.w");
    cfg.functional = TestFunctional::projection(std::move(w), r.number(fn, "c", "functional.c", 0.0));
  } else if (fkind == "gaussian_bump") {
    cfg.functional = TestFunctional::bump();
  } else {
    r.issue("functional.kind", "expected 'bounded_projection' or 'gaussian_bump'");
  }

  // fbar
  const json& fb = section("fbar");
  known_keys(fb, "fbar", {"mode", "burn_in", "n", "thin", "h_fast"});
  const std::string mode = r.string(fb, "mode", "fbar.mode", "oracle");
  if (mode == "oracle") {
    cfg.fbar.mode = FbarSettings::Mode::oracle;
  } else if (mode == "ergodic") {
    cfg.fbar.mode = FbarSettings::Mode::ergodic;
  } else {
    r.issue("fbar.mode", "expected 'oracle' or 'ergodic'");
  }
  cfg.fbar.burn_in = r.number(fb, "burn_in", "fbar.burn_in", 0.0);
  cfg.fbar.n = r.unsigned_int(fb, "n", "fbar.n", 4096);
  cfg.fbar.thin = r.number(fb, "thin", "fbar.thin", 0.0);
  cfg.fbar.h_fast = r.number(fb, "h_fast", "fbar.h_fast", 0.0);

  // corrector
  const json& co = section("corrector");
  known_keys(co, "corrector", {"enabled", "tol", "inner_replicas", "batches", "quadrature_nodes", "h_fast", "outer_replicas"});
  cfg.corrector.enabled = r.boolean(co, "enabled", "corrector.enabled", true);
  cfg.corrector.options.tol = r.number(co, "tol", "corrector.tol", 1e-3);
  cfg.corrector.options.inner_replicas =
      r.unsigned_int(co, "inner_replicas", "corrector.inner_replicas", 2048);
  cfg.corrector.options.batches = r.unsigned_int(co, "batches", "corrector.batches", 8);
  cfg.corrector.options.quadrature_nodes =
      r.unsigned_int(co, "quadrature_nodes", "corrector.quadrature_nodes", 256);
  cfg.corrector.options.h_fast = r.number(co, "h_fast", "corrector.h_fast", 0.0);
  cfg.corrector.outer_replicas = r.unsigned_int(co, "outer_replicas", "corrector.outer_replicas", 0);

  // diagnostics
  const json& dg = section("diagnostics");
  known_keys(dg, "diagnostics", {"fast_h", "contraction_T", "invariant_samples", "decay_inner_replicas", "decay_points", "decay_horizon", "exchange_samples", "graph_snapshot_every"});
  auto& d = cfg.diagnostics;
  d.fast_h = r.number(dg, "fast_h", "diagnostics.fast_h", d.fast_h);
  d.contraction_T = r.number(dg, "contraction_T", "diagnostics.contraction_T", d.contraction_T);
  d.invariant_samples =
      r.unsigned_int(dg, "invariant_samples", "diagnostics.invariant_samples", d.invariant_samples);
  d.decay_inner_replicas = r.unsigned_int(dg, "decay_inner_replicas",
                                          "diagnostics.decay_inner_replicas", d.decay_inner_replicas);
  d.decay_points = r.unsigned_int(dg, "decay_points", "diagnostics.decay_points", d.decay_points);
  d.decay_horizon = r.number(dg, "decay_horizon", "diagnostics.decay_horizon", d.decay_horizon);
  d.exchange_samples =
      r.unsigned_int(dg, "exchange_samples", "diagnostics.exchange_samples", d.exchange_samples);
  d.graph_snapshot_every = r.unsigned_int(dg, "graph_snapshot_every",
                                          "diagnostics.graph_snapshot_every", d.graph_snapshot_every);

  json canon = root;
  if (canon.contains("sweep") && canon["sweep"].is_object()) canon["sweep"].erase("threads");
  cfg.canonical = canon.dump();
  return out;
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg) {
  std::vector<ConfigIssue> issues;
  auto add = [&](std::string field, std::string message) {
    issues.push_back({std::move(field), std::move(message)});
  };
  const SystemSpec& s = cfg.system;
  const std::size_t n = s.modes();
  if (n == 0 || s.basis.alphas.size() != n) {
    add("basis", "no usable basis (basis.L and basis.N must be valid)");
    return issues;
  }

  if (s.grid_size != 0 && s.grid_size < n) add("basis.grid_size", "must be 0 (auto) or >= basis.N");
  if (!(s.sigma1 >= 0.0) || !std::isfinite(s.sigma1)) add("noise.sigma1", "must be finite and >= 0");
  if (!(s.sigma2 >= 0.0) || !std::isfinite(s.sigma2)) add("noise.sigma2", "must be finite and >= 0");
  auto check_q = [&](const QWienerSpec& q, const std::string& path) {
    if (q.size() != n) {
      add(path, "expected " + std::to_string(n) + " eigenvalues, got " + std::to_string(q.size()));
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!(q.lambdas[k] >= 0.0) || !std::isfinite(q.lambdas[k])) {
        add(path + "[" + std::to_string(k) + "]", "eigenvalues must be finite and >= 0");
      }
    }
  };
  check_q(s.q1, "noise.q1");
  check_q(s.q2, "noise.q2");

  const double alpha1 = s.basis.alphas.front();
  if (!(s.reaction.lipschitz() < alpha1)) {
    std::ostringstream msg;
    msg << "reaction.lipschitz = " << s.reaction.lipschitz() << " >= alpha_1 = " << alpha1
        << ": spectral gap condition violated (L_g < alpha_1 required)";
    add("reaction", msg.str());
  }

  auto check_field = [&](const SpectralField& f, const std::string& path) {
    if (f.size() != n) {
      add(path, "expected " + std::to_string(n) + " coefficients, got " + std::to_string(f.size()));
    } else if (!f.is_finite()) {
      add(path, "coefficients must be finite");
    }
  };
  check_field(cfg.initial.x.u, "initial.x1");
  check_field(cfg.initial.x.v, "initial.x2");
  check_field(cfg.initial.y, "initial.y");

  const auto& num = cfg.numerics;
  bool numerics_ok = true;
  if (!(num.h_slow > 0.0) || !std::isfinite(num.h_slow)) {
    add("numerics.h_slow", "must be positive");
    numerics_ok = false;
  }
  if (!(num.T > 0.0) || !std::isfinite(num.T)) {
    add("numerics.T", "must be positive");
    numerics_ok = false;
  }
  if (numerics_ok && num.h_slow > num.T * (1.0 + 1e-12)) {
    add("numerics.h_slow", "must not exceed numerics.T");
    numerics_ok = false;
  }
  if (num.micro_ratio < 1) {
    add("numerics.micro_ratio", "must be at least 1");
    numerics_ok = false;
  }
  if (num.max_fast_step < 0.0 || !std::isfinite(num.max_fast_step)) {
    add("numerics.max_fast_step", "must be >= 0 (0 selects the default bound)");
    numerics_ok = false;
  }

  const auto& eps = cfg.sweep.epsilons;
  if (eps.empty()) add("sweep.epsilons", "must list at least one epsilon");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const std::string path = "sweep.epsilons[" + std::to_string(i) + "]";
    if (!(eps[i] > 0.0) || eps[i] > 1.0) add(path, "must lie in (0, 1]");
    if (i > 0 && !(eps[i] < eps[i - 1])) {
      add(path, "epsilons must be distinct and sorted in descending order");
    }
  }
  if (cfg.sweep.replicas < 2) add("sweep.replicas", "at least 2 replicas are needed for a stderr");
  if (cfg.sweep.replicas > 0xffffffffull) add("sweep.replicas", "must fit the 32-bit replica counter");
  if (cfg.sweep.threads < 1) add("sweep.threads", "must be at least 1");

  if (numerics_ok) {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0) || eps[i] > 1.0) continue;
      MultiscaleConfig c = num;
      c.epsilon = eps[i];
      try {
        (void)effective_micro_ratio(c, s);
      } catch (const ConfigError& e) {
        add("numerics.micro_ratio", std::string(e.what()) + " at epsilon = " + std::to_string(eps[i]));
      }
    }
  }

  if (cfg.functional.kind == TestFunctional::Kind::bounded_projection) {
    check_field(cfg.functional.direction, "functional.w");
    if (!std::isfinite(cfg.functional.phase)) add("functional.c", "must be finite");
  }

  const bool separable = s.coupling.kind == CouplingSpec::Kind::separable;
  if (cfg.fbar.mode == FbarSettings::Mode::oracle) {
    if (!s.fast_is_ou()) add("fbar.mode", "oracle requires reaction = zero (OU fast process)");
    if (!separable) add("fbar.mode", "oracle requires a separable coupling");
  } else {
    if (cfg.fbar.n < 2) add("fbar.n", "at least 2 invariant samples are required");
    if (cfg.fbar.burn_in < 0.0) add("fbar.burn_in", "must be >= 0 (0 selects 10/eta)");
    if (cfg.fbar.thin < 0.0) add("fbar.thin", "must be >= 0 (0 selects 1/eta)");
    if (cfg.fbar.h_fast < 0.0) add("fbar.h_fast", "must be >= 0");
  }

  if (cfg.corrector.enabled) {
    const auto& o = cfg.corrector.options;
    if (!(o.tol > 0.0 && o.tol < 1.0)) add("corrector.tol", "must lie in (0, 1)");
    if (o.batches < 2) add("corrector.batches", "must be at least 2");
    if (o.inner_replicas < o.batches) add("corrector.inner_replicas", "must be >= corrector.batches");
    if (o.quadrature_nodes < 2) add("corrector.quadrature_nodes", "must be at least 2");
    if (o.h_fast < 0.0) add("corrector.h_fast", "must be >= 0");
    if (cfg.corrector.outer_replicas == 1) add("corrector.outer_replicas", "must be 0 (sweep.replicas) or >= 2");
  }

  const auto& d = cfg.diagnostics;
  if (!(d.fast_h > 0.0)) add("diagnostics.fast_h", "must be positive");
  if (!(d.contraction_T > 0.0)) add("diagnostics.contraction_T", "must be positive");
  if (d.invariant_samples < 2) add("diagnostics.invariant_samples", "must be at least 2");
  if (d.decay_inner_replicas < 2) add("diagnostics.decay_inner_replicas", "must be at least 2");
  if (d.decay_points < 3) add("diagnostics.decay_points", "must be at least 3");
  if (d.decay_horizon < 0.0) add("diagnostics.decay_horizon", "must be >= 0 (0 selects 3/eta)");
  if (d.exchange_samples < 2) add("diagnostics.exchange_samples", "must be at least 2");
  return issues;
}

ExperimentConfig config_from_text(const std::string& json_text) {
  auto parsed = parse_config(json_text);
  if (!parsed.issues.empty()) throw ConfigInvalid(std::move(parsed.issues));
  auto issues = validate_config(parsed.config);
  if (!issues.empty()) throw ConfigInvalid(std::move(issues));
  return std::move(parsed.config);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading config file '" + path + "'");
  return config_from_text(buf.str());
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.sweep.seed = seed;
  json root = json::parse(cfg.canonical.empty() ? "{}" : cfg.canonical);
  root["sweep"]["seed"] = seed;
  cfg.canonical = root.dump();
}

void override_threads(ExperimentConfig& cfg, unsigned threads) {
  // Thread count does not change results, so it stays out of the canonical text.
  cfg.sweep.threads = std::max(1u, threads);
}

}  // namespace sfwave
