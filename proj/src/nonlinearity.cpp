#include "sfwave/nonlinearity.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sfwave/errors.hpp"

namespace sfwave {

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& whole) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse parameter '" + item + "' in '" + whole + "'");
    }
  }
  return out;
}

struct GaussHermite30 {
  std::array<double, 30> x{};
  std::array<double, 30> w{};

  GaussHermite30() {
    // Newton iteration on orthonormal Hermite recurrences (weight e^{-x²}).
    constexpr int n = 30;
    constexpr double pim4 = 0.7511255444649425;  // π^{-1/4}
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      if (i == 0) {
        z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
      } else if (i == 1) {
        z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
      } else if (i == 2) {
        z = 1.86 * z - 0.86 * x[0];
      } else if (i == 3) {
        z = 1.91 * z - 0.91 * x[1];
      } else {
        z = 2.0 * z - x[i - 2];
      }
      double pp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p1 = pim4;
        double p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(j / (j + 1.0)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
      }
      x[i] = z;
      x[n - 1 - i] = -z;
      w[i] = 2.0 / (pp * pp);
      w[n - 1 - i] = w[i];
    }
  }
};

const GaussHermite30& gauss_hermite() {
  static const GaussHermite30 rule;
  return rule;
}

struct Moments {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

// Batch-means standard error; plain sample standard error for short series.
Moments series_moments(const std::vector<std::vector<double>>& rows, std::size_t width) {
  constexpr std::size_t kBatches = 40;
  constexpr std::size_t kMinBatched = 400;
  const std::size_t n = rows.size();
  Moments m{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
  for (const auto& r : rows)
    for (std::size_t j = 0; j < width; ++j) m.mean[j] += r[j];
  for (auto& v : m.mean) v /= static_cast<double>(n);
  if (n < 2) return m;

  if (n >= kMinBatched) {
    const std::size_t bs = n / kBatches;
    std::vector<std::vector<double>> batch(kBatches, std::vector<double>(width, 0.0));
    for (std::size_t b = 0; b < kBatches; ++b) {
      for (std::size_t i = b * bs; i < (b + 1) * bs; ++i)
        for (std::size_t j = 0; j < width; ++j) batch[b][j] += rows[i][j];
      for (auto& v : batch[b]) v /= static_cast<double>(bs);
    }
    for (std::size_t j = 0; j < width; ++j) {
      double bm = 0.0;
      for (const auto& b : batch) bm += b[j];
      bm /= kBatches;
      double ss = 0.0;
      for (const auto& b : batch) ss += (b[j] - bm) * (b[j] - bm);
      m.stderr_[j] = std::sqrt(ss / (kBatches - 1) / kBatches);
    }
    return m;
  }
  for (std::size_t j = 0; j < width; ++j) {
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[j] - m.mean[j]) * (r[j] - m.mean[j]);
    m.stderr_[j] = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return m;
}

}  // namespace

ScalarFunction ScalarFunction::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  const auto params = args.empty() ? std::vector<double>{} : parse_numbers(args, text);
  auto want = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw ConfigError("wrong number of parameters in '" + text + "'");
    }
  };
  ScalarFunction f;
  if (name == "zero") {
    want(0, 0);
    f.kind = Kind::zero;
  } else if (name == "affine") {
    want(1, 2);
    f.kind = Kind::affine;
    f.a = params[0];
    f.b = params.size() > 1 ? params[1] : 0.0;
  } else if (name == "scaled_tanh") {
    want(1, 1);
    f.kind = Kind::scaled_tanh;
    f.a = params[0];
  } else if (name == "sin_shift" || name == "sin") {
    want(0, 1);
    f.kind = Kind::sin_shift;
    f.a = params.empty() ? 0.0 : params[0];
  } else {
    throw ConfigError("unknown scalar function '" + name + "'");
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw ConfigError("non-finite parameter in '" + text + "'");
  }
  return f;
}

std::string ScalarFunction::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::zero: return "zero";
    case Kind::affine: os << "affine:" << a << "," << b; break;
    case Kind::scaled_tanh: os << "scaled_tanh:" << a; break;
    case Kind::sin_shift: os << "sin_shift:" << a; break;
  }
  return os.str();
}

double ScalarFunction::value(double x) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::affine: return a * x + b;
    case Kind::scaled_tanh: return a * std::tanh(x);
    case Kind::sin_shift: return std::sin(x + a);
  }
  return 0.0;
}

double ScalarFunction::derivative(double x) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::affine: return a;
    case Kind::scaled_tanh: {
      const double t = std::tanh(x);
      return a * (1.0 - t * t);
    }
    case Kind::sin_shift: return std::cos(x + a);
  }
  return 0.0;
}

double ScalarFunction::lipschitz() const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::affine:
    case Kind::scaled_tanh: return std::abs(a);
    case Kind::sin_shift: return 1.0;
  }
  return 0.0;
}

bool ScalarFunction::is_odd() const {
  switch (kind) {
    case Kind::zero:
    case Kind::scaled_tanh: return true;
    case Kind::affine: return b == 0.0;
    case Kind::sin_shift: return a == 0.0;
  }
  return false;
}

ReactionSpec ReactionSpec::parse(const std::string& text) {
  ReactionSpec r{ScalarFunction::parse(text)};
  if (r.fn.kind == ScalarFunction::Kind::sin_shift) {
    throw ConfigError("reaction must be one of zero, affine, scaled_tanh");
  }
  return r;
}

void ReactionSpec::validate(const SpectralBasis& basis) const {
  if (!(lipschitz() < basis.alphas.front())) {
    std::ostringstream os;
    os.precision(10);
    os << "reaction.lipschitz = " << lipschitz() << " >= alpha_1 = " << basis.alphas.front()
       << ": spectral gap condition violated (L_g < alpha_1 required)";
    throw ConfigError(os.str());
  }
}

CouplingSpec CouplingSpec::separable(ScalarFunction f1, ScalarFunction f2) {
  return CouplingSpec{Kind::separable, f1, f2};
}

double CouplingSpec::lipschitz() const {
  if (kind == Kind::entangled_sin) return 1.0;
  return std::max(f1.lipschitz(), f2.lipschitz());
}

double CouplingSpec::derivative_bound() const {
  if (kind == Kind::entangled_sin) return 1.0;
  return f1.lipschitz();
}

bool CouplingSpec::depends_on_fast() const {
  return kind == Kind::entangled_sin || !f2.is_zero();
}

double CouplingSpec::value(double u, double y) const {
  if (kind == Kind::entangled_sin) return std::sin(u + y);
  return f1.value(u) + f2.value(y);
}

double CouplingSpec::du(double u, double y) const {
  if (kind == Kind::entangled_sin) return std::cos(u + y);
  return f1.derivative(u);
}

SpectralField eval_g(const ReactionSpec& spec, const SpectralField& y, const Collocation& grid) {
  auto nodes = grid.to_grid(y);
  for (double& v : nodes) v = spec.fn.value(v);
  return grid.from_grid(nodes);
}

SpectralField eval_F(const CouplingSpec& spec, const SpectralField& u, const SpectralField& y,
                     const Collocation& grid) {
  require_same_size(u.size(), y.size(), "eval_F");
  const auto un = grid.to_grid(u);
  auto yn = grid.to_grid(y);
  for (std::size_t j = 0; j < yn.size(); ++j) yn[j] = spec.value(un[j], yn[j]);
  return grid.from_grid(yn);
}

SpectralField dF_u(const CouplingSpec& spec, const SpectralField& u, const SpectralField& y,
                   const SpectralField& w, const Collocation& grid) {
  require_same_size(u.size(), y.size(), "dF_u");
  require_same_size(u.size(), w.size(), "dF_u");
  const auto un = grid.to_grid(u);
  const auto yn = grid.to_grid(y);
  auto wn = grid.to_grid(w);
  for (std::size_t j = 0; j < wn.size(); ++j) wn[j] *= spec.du(un[j], yn[j]);
  return grid.from_grid(wn);
}

double gauss_hermite_expectation(const ScalarFunction& f, double variance) {
  const auto& gh = gauss_hermite();
  const double scale = std::sqrt(2.0 * std::max(variance, 0.0));
  double s = 0.0;
  for (std::size_t i = 0; i < gh.x.size(); ++i) s += gh.w[i] * f.value(scale * gh.x[i]);
  return s / std::sqrt(std::numbers::pi);
}

double gaussian_expectation(const ScalarFunction& f, double variance) {
  switch (f.kind) {
    case ScalarFunction::Kind::zero: return 0.0;
    case ScalarFunction::Kind::affine: return f.b;
    case ScalarFunction::Kind::sin_shift: return std::sin(f.a) * std::exp(-0.5 * variance);
    case ScalarFunction::Kind::scaled_tanh: break;
  }
  return gauss_hermite_expectation(f, variance);
}

std::vector<double> pointwise_variance(const std::vector<double>& mode_variances,
                                       const Collocation& grid) {
  require_same_size(mode_variances.size(), grid.modes(), "pointwise_variance");
  std::vector<double> s2(grid.grid_size(), 0.0);
  for (std::size_t j = 0; j < grid.grid_size(); ++j) {
    for (std::size_t k = 0; k < grid.modes(); ++k) {
      const double e = grid.eval(j, k);
      s2[j] += mode_variances[k] * e * e;
    }
  }
  return s2;
}

std::vector<double> ou_stationary_variances(const std::vector<double>& lambdas, double sigma,
                                            const SpectralBasis& basis) {
  require_same_size(lambdas.size(), basis.modes, "ou_stationary_variances");
  std::vector<double> v(basis.modes);
  for (std::size_t k = 0; k < basis.modes; ++k) {
    v[k] = sigma * sigma * lambdas[k] / (2.0 * basis.alphas[k]);
  }
  return v;
}

SpectralField fbar_oracle(const CouplingSpec& spec, const SpectralField& u,
                          const std::vector<double>& ou_variances, const Collocation& grid) {
  return AveragedDrift::oracle(spec, ou_variances, grid).evaluate(u);
}

FbarEstimate estimate_fbar(const CouplingSpec& spec, const SpectralField& u,
                           const std::vector<SpectralField>& samples, const Collocation& grid) {
  if (samples.empty()) throw UsageError("estimate_fbar: empty invariant sample");
  const auto un = grid.to_grid(u);
  const std::size_t g = grid.grid_size();
  std::vector<std::vector<double>> node_rows;
  std::vector<std::vector<double>> mode_rows;
  node_rows.reserve(samples.size());
  mode_rows.reserve(samples.size());
  std::vector<double> yn(g);
  for (const auto& y : samples) {
    require_same_size(y.size(), u.size(), "estimate_fbar");
    grid.to_grid(y.span(), yn);
    for (std::size_t j = 0; j < g; ++j) yn[j] = spec.value(un[j], yn[j]);
    mode_rows.push_back(grid.from_grid(yn).coeffs);
    node_rows.push_back(yn);
  }
  const auto modes = series_moments(mode_rows, u.size());
  const auto nodes = series_moments(node_rows, g);
  return FbarEstimate{SpectralField(modes.mean), SpectralField(modes.stderr_), nodes.mean,
                      nodes.stderr_};
}

AveragedDrift::AveragedDrift(Mode mode, CouplingSpec spec, const Collocation& grid)
    : mode_(mode), spec_(spec), grid_(grid) {}

AveragedDrift AveragedDrift::oracle(const CouplingSpec& spec,
                                    const std::vector<double>& ou_variances,
                                    const Collocation& grid) {
  if (spec.kind != CouplingSpec::Kind::separable) {
    throw UnsupportedOracle("closed-form averaged drift requires a separable coupling");
  }
  AveragedDrift d(Mode::oracle, spec, grid);
  const auto s2 = pointwise_variance(ou_variances, grid);
  d.offset_nodes_.resize(s2.size());
  for (std::size_t j = 0; j < s2.size(); ++j) d.offset_nodes_[j] = gaussian_expectation(spec.f2, s2[j]);
  return d;
}

AveragedDrift AveragedDrift::ergodic(const CouplingSpec& spec, std::vector<SpectralField> samples,
                                     const Collocation& grid) {
  if (samples.empty()) throw UsageError("ergodic averaged drift needs a nonempty sample");
  AveragedDrift d(Mode::ergodic, spec, grid);
  const std::size_t g = grid.grid_size();
  std::vector<double> yn(g);
  if (spec.kind == CouplingSpec::Kind::separable) {
    d.offset_nodes_.assign(g, 0.0);
    for (const auto& y : samples) {
      grid.to_grid(y.span(), yn);
      for (std::size_t j = 0; j < g; ++j) d.offset_nodes_[j] += spec.f2.value(yn[j]);
    }
    for (auto& v : d.offset_nodes_) v /= static_cast<double>(samples.size());
  } else {
    d.sample_nodes_.reserve(samples.size());
    for (const auto& y : samples) d.sample_nodes_.push_back(grid.to_grid(y));
  }
  d.samples_ = std::move(samples);
  return d;
}

void AveragedDrift::evaluate_nodes(std::span<const double> u_nodes,
                                   std::span<double> out_nodes) const {
  const std::size_t g = u_nodes.size();
  if (spec_.kind == CouplingSpec::Kind::separable) {
    for (std::size_t j = 0; j < g; ++j) out_nodes[j] = spec_.f1.value(u_nodes[j]) + offset_nodes_[j];
    return;
  }
  for (std::size_t j = 0; j < g; ++j) out_nodes[j] = 0.0;
  for (const auto& yn : sample_nodes_)
    for (std::size_t j = 0; j < g; ++j) out_nodes[j] += std::sin(u_nodes[j] + yn[j]);
  const double inv = 1.0 / static_cast<double>(sample_nodes_.size());
  for (std::size_t j = 0; j < g; ++j) out_nodes[j] *= inv;
}

void AveragedDrift::derivative_nodes(std::span<const double> u_nodes,
                                     std::span<const double> w_nodes,
                                     std::span<double> out_nodes) const {
  const std::size_t g = u_nodes.size();
  if (spec_.kind == CouplingSpec::Kind::separable) {
    for (std::size_t j = 0; j < g; ++j) out_nodes[j] = spec_.f1.derivative(u_nodes[j]) * w_nodes[j];
    return;
  }
  for (std::size_t j = 0; j < g; ++j) out_nodes[j] = 0.0;
  for (const auto& yn : sample_nodes_)
    for (std::size_t j = 0; j < g; ++j) out_nodes[j] += std::cos(u_nodes[j] + yn[j]);
  const double inv = 1.0 / static_cast<double>(sample_nodes_.size());
  for (std::size_t j = 0; j < g; ++j) out_nodes[j] *= inv * w_nodes[j];
}

SpectralField AveragedDrift::evaluate(const SpectralField& u) const {
  require_same_size(u.size(), grid_.modes(), "AveragedDrift::evaluate");
  const auto un = grid_.to_grid(u);
  std::vector<double> out(un.size());
  evaluate_nodes(un, out);
  return grid_.from_grid(out);
}

SpectralField AveragedDrift::derivative(const SpectralField& u, const SpectralField& w) const {
  require_same_size(u.size(), grid_.modes(), "AveragedDrift::derivative");
  require_same_size(w.size(), grid_.modes(), "AveragedDrift::derivative");
  const auto un = grid_.to_grid(u);
  const auto wn = grid_.to_grid(w);
  std::vector<double> out(un.size());
  derivative_nodes(un, wn, out);
  return grid_.from_grid(out);
}

ExchangeReport dfbar_exchange_check(const CouplingSpec& spec, const SpectralField& u,
                                    const SpectralField& w, const std::vector<SpectralField>& samples,
                                    const Collocation& grid, double delta) {
  if (samples.empty()) throw UsageError("dfbar_exchange_check: empty invariant sample");
  if (!(delta > 0.0)) throw UsageError("dfbar_exchange_check: delta must be positive");
  const std::size_t n = u.size();
  SpectralField shifted(n);
  for (std::size_t k = 0; k < n; ++k) shifted[k] = u[k] + delta * w[k];

  SpectralField base_sum(n), shifted_sum(n), deriv_sum(n), deriv_sq(n);
  for (const auto& y : samples) {
    const auto f0 = eval_F(spec, u, y, grid);
    const auto f1 = eval_F(spec, shifted, y, grid);
    const auto d = dF_u(spec, u, y, w, grid);
    for (std::size_t k = 0; k < n; ++k) {
      base_sum[k] += f0[k];
      shifted_sum[k] += f1[k];
      deriv_sum[k] += d[k];
      deriv_sq[k] += d[k] * d[k];
    }
  }
  const double m = static_cast<double>(samples.size());
  ExchangeReport r;
  r.delta = delta;
  double disc = 0.0, dn = 0.0, se = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double fd = (shifted_sum[k] / m - base_sum[k] / m) / delta;
    const double avg = deriv_sum[k] / m;
    disc += (fd - avg) * (fd - avg);
    dn += avg * avg;
    if (samples.size() > 1) {
      const double var = std::max(0.0, deriv_sq[k] / m - avg * avg) * m / (m - 1.0);
      se += var / m;
    }
  }
  r.discrepancy = std::sqrt(disc);
  r.derivative_norm = std::sqrt(dn);
  r.derivative_stderr = std::sqrt(se);
  return r;
}

}  // namespace sfwave
