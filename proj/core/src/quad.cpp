#include "flock/quad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "flock/error.hpp"

namespace flock {

namespace {

constexpr double kNewtonTolerance = 1e-15;
constexpr int kNewtonMaxIterations = 100;

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  const double pn = (n == 0) ? 1.0 : p1;
  const double pnm1 = (n == 0) ? 0.0 : p0;
  const double dp = n * (x * pn - pnm1) / (x * x - 1.0);
  return {pn, dp};
}

}  // namespace

QuadratureRule QuadratureRule::gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature rule needs n >= 1, got " + std::to_string(n));
  QuadratureRule rule;
  const auto size = static_cast<std::size_t>(n);
  rule.nodes_.assign(size, 0.0);
  rule.weights_.assign(size, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < kNewtonMaxIterations; ++it) {
      const auto [p, d] = legendre_with_derivative(n, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < kNewtonTolerance) break;
    }
    dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = size - 1 - lo;
    rule.nodes_[lo] = -x;
    rule.nodes_[hi] = x;
    rule.weights_[lo] = w;
    rule.weights_[hi] = w;
  }
  if (n % 2 == 1) rule.nodes_[size / 2] = 0.0;
  return rule;
}

QuadratureRule QuadratureRule::mapped(double a, double b) const {
  QuadratureRule out = *this;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < out.nodes_.size(); ++i) {
    out.nodes_[i] = mid + half * nodes_[i];
    out.weights_[i] = half * weights_[i];
  }
  return out;
}

QuadratureRule build_rule(int n) { return QuadratureRule::gauss_legendre(n); }

VonMisesEquilibrium::VonMisesEquilibrium(const CollisionKernel& kernel, QuadratureRule rule)
    : kernel_(kernel), rule_(std::move(rule)) {
  // sigma is increasing wherever nu > 0, so its maximum sits at mu = 1; the
  // nodes are checked too for robustness against tabulated kernels.
  sigma_ref_ = kernel_.sigma(1.0);
  for (double mu : rule_.nodes()) sigma_ref_ = std::max(sigma_ref_, kernel_.sigma(mu));
  const double d = kernel_.d();
  scaled_.resize(rule_.size());
  mass_ = 0.0;
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    scaled_[i] = std::exp((kernel_.sigma(rule_.nodes()[i]) - sigma_ref_) / d);
    mass_ += rule_.weights()[i] * scaled_[i];
  }
  log_c_ = -std::log(2.0 * std::numbers::pi * mass_) - sigma_ref_ / d;
}

double VonMisesEquilibrium::scaled_weight(double mu) const {
  return std::exp((kernel_.sigma(mu) - sigma_ref_) / kernel_.d());
}

double VonMisesEquilibrium::density(double mu) const {
  return std::exp(log_c_ + kernel_.sigma(mu) / kernel_.d());
}

double VonMisesEquilibrium::average(const std::function<double(double)>& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    const double mu = rule_.nodes()[i];
    const double v = g(mu);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite integrand in <g>_M at node " << i << " (mu = " << mu << ")";
      throw NumericError(msg.str());
    }
    s += rule_.weights()[i] * scaled_[i] * v;
  }
  return s / mass_;
}

double VonMisesEquilibrium::average_nodal(std::span<const double> g) const {
  if (g.size() != rule_.size()) throw PreconditionError("nodal values do not match the quadrature rule");
  double s = 0.0;
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    if (!std::isfinite(g[i])) {
      std::ostringstream msg;
      msg << "non-finite integrand in <g>_M at node " << i << " (mu = " << rule_.nodes()[i] << ")";
      throw NumericError(msg.str());
    }
    s += rule_.weights()[i] * scaled_[i] * g[i];
  }
  return s / mass_;
}

double average_weighted(const std::function<double(double)>& g,
                        const std::function<double(double)>& h_weight, const QuadratureRule& rule) {
  double num = 0.0;
  double den = 0.0;
  double abs_den = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double mu = rule.nodes()[i];
    const double w = rule.weights()[i];
    const double h = h_weight(mu);
    const double v = g(mu);
    if (!std::isfinite(h) || !std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite integrand in <g>_h at node " << i << " (mu = " << mu << ")";
      throw NumericError(msg.str());
    }
    num += w * v * h;
    den += w * h;
    abs_den += w * std::abs(h);
  }
  if (abs_den == 0.0 || std::abs(den) <= 1e-14 * abs_den) {
    throw NumericError("degenerate weight in <g>_h: int h dmu = " + std::to_string(den));
  }
  return num / den;
}

}  // namespace flock
