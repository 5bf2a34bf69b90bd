#include "flock/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "format.hpp"
#include "flock/error.hpp"
#include "flock/legendre.hpp"
#include "flock/quad.hpp"

namespace flock {

namespace {

constexpr int kPositivitySamples = 2001;

// Legendre coefficients of a polynomial of the given degree, from exact Gauss projection.
std::vector<double> project_polynomial(const std::function<double(double)>& f, int degree) {
  const auto rule = QuadratureRule::gauss_legendre(degree + 1);
  std::vector<double> c(static_cast<std::size_t>(degree + 1), 0.0);
  std::vector<double> p(c.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    legendre::values(degree, rule.nodes()[i], p);
    const double fw = rule.weights()[i] * f(rule.nodes()[i]);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += fw * p[k];
  }
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= (2.0 * static_cast<double>(k) + 1.0) / 2.0;
  return c;
}

void require_positive_d(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw ConfigError("noise constant d must be positive and finite, got " + std::to_string(d));
  }
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + detail::shortest(v[i]);
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + item + "' in " + context);
    }
  }
  return out;
}

}  // namespace

CollisionKernel::CollisionKernel(NuModel model, std::vector<double> params, std::vector<double> nu_series,
                                 double d)
    : model_(model), params_(std::move(params)), nu_series_(std::move(nu_series)), d_(d) {
  require_positive_d(d_);
  nu_prime_series_ = legendre::derivative(nu_series_);
  sigma_series_ = legendre::antiderivative(nu_series_, 0.0, 0.0);
  nu_min_ = nu(-1.0);
  for (int i = 0; i < kPositivitySamples; ++i) {
    const double mu = -1.0 + 2.0 * i / (kPositivitySamples - 1);
    nu_min_ = std::min(nu_min_, nu(mu));
  }
  if (!(nu_min_ > 0.0)) {
    throw ConfigError("alignment frequency must be positive on [-1,1]; sampled minimum " +
                      std::to_string(nu_min_) + " for kernel " + spec());
  }
}

CollisionKernel CollisionKernel::constant(double nu0, double d) {
  return CollisionKernel(NuModel::constant, {nu0}, {nu0}, d);
}

CollisionKernel CollisionKernel::affine(double a, double b, double d) {
  return CollisionKernel(NuModel::affine, {a, b}, {a, b}, d);
}

CollisionKernel CollisionKernel::even_polynomial(std::vector<double> coeffs, double d) {
  if (coeffs.empty()) throw ConfigError("even polynomial kernel needs at least one coefficient");
  const int degree = 2 * (static_cast<int>(coeffs.size()) - 1);
  auto series = project_polynomial(
      [&](double mu) {
        double s = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * mu * mu + *it;
        return s;
      },
      degree);
  return CollisionKernel(NuModel::even_polynomial, std::move(coeffs), std::move(series), d);
}

CollisionKernel CollisionKernel::tabulated(std::vector<std::pair<double, double>> samples, double d) {
  if (samples.empty()) throw ConfigError("tabulated kernel needs at least one sample");
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].first < -1.0 || samples[i].first > 1.0) {
      throw ConfigError("tabulated kernel sample mu = " + std::to_string(samples[i].first) +
                        " outside [-1,1]");
    }
    if (i > 0 && samples[i].first - samples[i - 1].first < 1e-12) {
      throw ConfigError("tabulated kernel has repeated mu = " + std::to_string(samples[i].first));
    }
  }
  const int n = static_cast<int>(samples.size());
  Eigen::MatrixXd vandermonde(n, n);
  Eigen::VectorXd rhs(n);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    legendre::values(n - 1, samples[static_cast<std::size_t>(i)].first, p);
    for (int k = 0; k < n; ++k) vandermonde(i, k) = p[static_cast<std::size_t>(k)];
    rhs(i) = samples[static_cast<std::size_t>(i)].second;
  }
  const Eigen::VectorXd c = vandermonde.colPivHouseholderQr().solve(rhs);
  std::vector<double> params;
  for (const auto& [mu, nu] : samples) {
    params.push_back(mu);
    params.push_back(nu);
  }
  return CollisionKernel(NuModel::tabulated, std::move(params), std::vector<double>(c.data(), c.data() + n), d);
}

KernelValues CollisionKernel::evaluate(double mu) const {
  if (!(mu >= -1.0 && mu <= 1.0)) {
    throw DomainError("kernel evaluated outside [-1,1] at mu = " + std::to_string(mu));
  }
  return {nu(mu), nu_prime(mu), sigma(mu)};
}

double CollisionKernel::nu(double mu) const { return legendre::evaluate(nu_series_, mu); }
double CollisionKernel::nu_prime(double mu) const { return legendre::evaluate(nu_prime_series_, mu); }
double CollisionKernel::sigma(double mu) const {
  return legendre::evaluate(sigma_series_, mu) + sigma_offset_;
}

std::string CollisionKernel::spec() const {
  switch (model_) {
    case NuModel::constant:
      return "const:" + join(params_);
    case NuModel::affine:
      return "affine:" + join(params_);
    case NuModel::even_polynomial:
      return "evenpoly:" + join(params_);
    case NuModel::tabulated: {
      std::string out = "table:";
      for (std::size_t i = 0; i + 1 < params_.size(); i += 2) {
        out += (i ? "," : "") + detail::shortest(params_[i]) + "@" + detail::shortest(params_[i + 1]);
      }
      return out;
    }
  }
  return {};
}

CollisionKernel CollisionKernel::with_d(double d) const {
  require_positive_d(d);
  CollisionKernel copy = *this;
  copy.d_ = d;
  return copy;
}

CollisionKernel CollisionKernel::with_sigma_offset(double offset) const {
  CollisionKernel copy = *this;
  copy.sigma_offset_ = offset;
  return copy;
}

CollisionKernel parse_kernel_spec(const std::string& spec, double d) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("kernel spec '" + spec + "' is missing ':'");
  const std::string model = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (model == "const" || model == "constant") {
    const auto v = parse_numbers(rest, "kernel spec " + spec);
    if (v.size() != 1) throw ConfigError("const kernel takes one parameter: " + spec);
    return CollisionKernel::constant(v[0], d);
  }
  if (model == "affine") {
    const auto v = parse_numbers(rest, "kernel spec " + spec);
    if (v.size() != 2) throw ConfigError("affine kernel takes two parameters a,b: " + spec);
    return CollisionKernel::affine(v[0], v[1], d);
  }
  if (model == "evenpoly") {
    return CollisionKernel::even_polynomial(parse_numbers(rest, "kernel spec " + spec), d);
  }
  if (model == "table") {
    std::vector<std::pair<double, double>> samples;
    std::stringstream in(rest);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw ConfigError("table sample '" + item + "' must be mu@nu");
      const auto mu = parse_numbers(item.substr(0, at), "kernel spec " + spec);
      const auto nu = parse_numbers(item.substr(at + 1), "kernel spec " + spec);
      if (mu.size() != 1 || nu.size() != 1) throw ConfigError("bad table sample '" + item + "'");
      samples.emplace_back(mu[0], nu[0]);
    }
    return CollisionKernel::tabulated(std::move(samples), d);
  }
  throw ConfigError("unknown kernel model '" + model + "' (expected const, affine, evenpoly, table)");
}

std::vector<NamedKernel> kernel_registry(double d) {
  std::vector<std::pair<double, double>> table;
  constexpr int kTablePoints = 9;
  for (int i = 0; i < kTablePoints; ++i) {
    const double mu = -std::cos(std::numbers::pi * (i + 0.5) / kTablePoints);
    table.emplace_back(mu, 1.1 + 0.3 * std::tanh(2.0 * mu));
  }
  return {
      {"constant", CollisionKernel::constant(1.0, d)},
      {"affine", CollisionKernel::affine(1.0, 0.5, d)},
      {"even-polynomial", CollisionKernel::even_polynomial({1.0, 0.5}, d)},
      {"tabulated", CollisionKernel::tabulated(std::move(table), d)},
  };
}

SpatialKernel SpatialKernel::ball(double radius) {
  if (!(radius > 0.0)) throw ConfigError("ball kernel radius must be positive");
  return {[radius](double r) { return r <= radius ? 1.0 : 0.0; }, radius, "ball"};
}

SpatialKernel SpatialKernel::gaussian(double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian kernel width must be positive");
  return {[width](double r) { return std::exp(-0.5 * r * r / (width * width)); }, std::nullopt, "gaussian"};
}

double spatial_moment(const SpatialKernel& kernel, int p) {
  if (!kernel.radial) throw ConfigError("spatial kernel has no radial profile");
  constexpr int kPanels = 16;
  constexpr int kPointsPerPanel = 32;
  const auto base = QuadratureRule::gauss_legendre(kPointsPerPanel);
  const double power = p + 2.0;
  double total = 0.0;
  if (kernel.support_radius) {
    const double radius = *kernel.support_radius;
    if (!(radius > 0.0)) throw ConfigError("spatial kernel support radius must be positive");
    for (int k = 0; k < kPanels; ++k) {
      const auto rule = base.mapped(radius * k / kPanels, radius * (k + 1) / kPanels);
      total += rule.integrate([&](double r) { return kernel.radial(r) * std::pow(r, power); });
    }
  } else {
    // The tail must decay faster than r^-(p+3) for the moment to exist.
    double previous = INFINITY;
    double peak = 0.0;
    for (double r = 0.5; r <= 64.0; r *= 2.0) peak = std::max(peak, std::abs(kernel.radial(r)) * std::pow(r, power + 1.0));
    for (double r : {1e2, 1e3, 1e4}) {
      const double tail = std::abs(kernel.radial(r)) * std::pow(r, power + 1.0);
      if (!std::isfinite(tail) || tail > previous * (1.0 + 1e-12)) {
        throw ConfigError("spatial kernel moment K_" + std::to_string(p) + " diverges (tail not integrable)");
      }
      previous = tail;
    }
    if (previous > 1e-6 * std::max(peak, 1e-300)) {
      throw ConfigError("spatial kernel moment K_" + std::to_string(p) + " diverges (tail not integrable)");
    }
    // r = t / (1 - t) maps [0, 1) onto [0, inf).
    for (int k = 0; k < kPanels; ++k) {
      const auto rule = base.mapped(static_cast<double>(k) / kPanels, static_cast<double>(k + 1) / kPanels);
      total += rule.integrate([&](double t) {
        const double r = t / (1.0 - t);
        const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
        return kernel.radial(r) * std::pow(r, power) * jac;
      });
    }
  }
  return 4.0 * std::numbers::pi * total;
}

double compute_kappa(const SpatialKernel& kernel) {
  const double k0 = spatial_moment(kernel, 0);
  const double k2 = spatial_moment(kernel, 2);
  if (!(k0 > 0.0) || !std::isfinite(k0) || !std::isfinite(k2)) {
    throw ConfigError("spatial kernel moments invalid: K0 = " + std::to_string(k0) + ", K2 = " + std::to_string(k2));
  }
  return k2 / (6.0 * k0);
}

double resolve_kappa(const KappaSource& source) {
  if (const auto* value = std::get_if<double>(&source)) {
    if (!std::isfinite(*value)) throw ConfigError("kappa must be finite");
    return *value;
  }
  return compute_kappa(std::get<SpatialKernel>(source));
}

}  // namespace flock
