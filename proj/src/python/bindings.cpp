// Python bindings. Configs cross the boundary as JSON text; results come
// back as the same JSON documents the CLI writes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sfwave/harness.hpp"

namespace py = pybind11;
using namespace sfwave;

namespace {

ExperimentConfig with_threads(const std::string& text, unsigned threads) {
  auto cfg = config_from_text(text);
  override_threads(cfg, threads);
  return cfg;
}

std::vector<WeakErrorPoint> to_points(const std::vector<double>& eps, const std::vector<double>& md,
                                      const std::vector<double>& se) {
  if (eps.size() != md.size() || eps.size() != se.size()) {
    throw UsageError("epsilons, mean_diffs and stderrs must have equal length");
  }
  std::vector<WeakErrorPoint> pts;
  for (std::size_t i = 0; i < eps.size(); ++i) pts.push_back({eps[i], md[i], se[i], 0, 0});
  return pts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "slow-fast stochastic wave equation: averaging experiments";

  auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  // ConfigInvalid carries its issue list in the message, one per line.
  py::register_exception<ConfigInvalid>(m, "ConfigInvalid", base.ptr());

  m.def("version", &version);
  m.def("preset_names", &preset_names);
  m.def("preset_json", &preset_json, py::arg("name"));

  m.def(
      "validate",
      [](const std::string& text) {
        auto parsed = parse_config(text);
        auto issues = parsed.issues;
        if (issues.empty()) issues = validate_config(parsed.config);
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& i : issues) out.emplace_back(i.field, i.message);
        return out;
      },
      py::arg("config_json"), "List of (field, message) issues; empty when valid.");

  m.def(
      "config_hash", [](const std::string& text) { return sha256_hex(config_from_text(text).canonical); },
      py::arg("config_json"));

  m.def(
      "compute_sweep",
      [](const std::string& text, unsigned threads) {
        const auto cfg = with_threads(text, threads);
        SweepOutcome out;
        {
          py::gil_scoped_release release;
          out = compute_sweep(cfg);
        }
        return py::make_tuple(sweep_csv(out.points), sweep_report_json(out));
      },
      py::arg("config_json"), py::arg("threads") = 1, "Returns (csv_text, report_json).");

  m.def(
      "run_sweep",
      [](const std::string& text, const std::string& out_dir, unsigned threads) {
        const auto cfg = with_threads(text, threads);
        py::gil_scoped_release release;
        return run_sweep(cfg, out_dir).manifest.to_json();
      },
      py::arg("config_json"), py::arg("out_dir"), py::arg("threads") = 1, "Returns the manifest JSON.");

  m.def(
      "compute_diagnostics",
      [](const std::string& text) {
        const auto cfg = config_from_text(text);
        py::gil_scoped_release release;
        return compute_diagnostics(cfg);
      },
      py::arg("config_json"));

  m.def(
      "fbar_json", [](const std::string& text, std::size_t samples) { return fbar_json(config_from_text(text), samples); },
      py::arg("config_json"), py::arg("samples") = 4096);

  m.def(
      "order_fit",
      [](const std::vector<double>& eps, const std::vector<double>& md, const std::vector<double>& se) {
        const auto f = order_fit(to_points(eps, md, se));
        py::dict d;
        d["conclusive"] = f.conclusive;
        d["slope"] = f.conclusive ? py::object(py::float_(f.slope)) : py::none();
        d["intercept"] = f.conclusive ? py::object(py::float_(f.intercept)) : py::none();
        d["r_squared"] = f.conclusive ? py::object(py::float_(f.r_squared)) : py::none();
        d["used_epsilons"] = f.used_epsilons;
        d["excluded_epsilons"] = f.excluded_epsilons;
        return d;
      },
      py::arg("epsilons"), py::arg("mean_diffs"), py::arg("stderrs"));

  m.def(
      "sweep_csv",
      [](const std::vector<double>& eps, const std::vector<double>& md, const std::vector<double>& se) {
        return sweep_csv(to_points(eps, md, se));
      },
      py::arg("epsilons"), py::arg("mean_diffs"), py::arg("stderrs"));
}
