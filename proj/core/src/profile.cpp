#include "flock/profile.hpp"

#include <cmath>
#include <string>

#include "flock/error.hpp"
#include "flock/legendre.hpp"

namespace flock {

double endpoint_factor(double mu, double p) {
  if (p == 0.0) return 1.0;
  const double one_minus = std::max(0.0, (1.0 - mu) * (1.0 + mu));
  if (p == 1.0) return one_minus;
  if (p == 0.5) return std::sqrt(one_minus);
  return std::pow(one_minus, p);
}

MuProfile::MuProfile(std::vector<double> coeffs, double exponent, RuleRef rule)
    : coeffs_(std::move(coeffs)), exponent_(exponent), rule_(std::move(rule)) {
  if (!rule_) throw PreconditionError("profile needs a quadrature rule");
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  values_.resize(rule_->size());
  for (std::size_t i = 0; i < rule_->size(); ++i) values_[i] = (*this)(rule_->nodes()[i]);
}

MuProfile MuProfile::project(const std::function<double(double)>& f, int degree, double exponent, RuleRef rule) {
  if (degree < 0) throw DomainError("profile degree must be nonnegative");
  if (!rule) throw PreconditionError("profile needs a quadrature rule");
  // Weighted least squares on the Gauss nodes: minimize sum w (f - (1-mu^2)^e p)^2.
  // For exponent 0 and a rule with more than `degree` points this is the
  // orthogonal Legendre projection.
  const auto n = static_cast<std::size_t>(degree + 1);
  std::vector<double> c(n, 0.0);
  std::vector<double> p(n);
  if (exponent == 0.0) {
    for (std::size_t i = 0; i < rule->size(); ++i) {
      legendre::values(degree, rule->nodes()[i], p);
      const double fw = rule->weights()[i] * f(rule->nodes()[i]);
      for (std::size_t k = 0; k < n; ++k) c[k] += fw * p[k];
    }
    for (std::size_t k = 0; k < n; ++k) c[k] *= (2.0 * static_cast<double>(k) + 1.0) / 2.0;
  } else {
    // Project f / (1 - mu^2)^e; nodes are interior so the division is finite.
    for (std::size_t i = 0; i < rule->size(); ++i) {
      const double mu = rule->nodes()[i];
      legendre::values(degree, mu, p);
      const double fw = rule->weights()[i] * f(mu) / endpoint_factor(mu, exponent);
      for (std::size_t k = 0; k < n; ++k) c[k] += fw * p[k];
    }
    for (std::size_t k = 0; k < n; ++k) c[k] *= (2.0 * static_cast<double>(k) + 1.0) / 2.0;
  }
  return MuProfile(std::move(c), exponent, std::move(rule));
}

double MuProfile::operator()(double mu) const { return endpoint_factor(mu, exponent_) * smooth(mu); }

double MuProfile::smooth(double mu) const { return legendre::evaluate(coeffs_, mu); }

double MuProfile::smooth_derivative(double mu) const { return legendre::evaluate_derivative(coeffs_, mu); }

double MuProfile::smooth_second_derivative(double mu) const {
  return legendre::evaluate_second_derivative(coeffs_, mu);
}

MuProfile MuProfile::with_exponent(double exponent) const { return MuProfile(coeffs_, exponent, rule_); }

void MuProfile::require_plain(const char* op) const {
  if (exponent_ != 0.0) {
    throw PreconditionError(std::string(op) + " needs a profile without endpoint factor (exponent " +
                            std::to_string(exponent_) + ")");
  }
}

MuProfile MuProfile::derivative() const {
  require_plain("derivative");
  return MuProfile(legendre::derivative(coeffs_), 0.0, rule_);
}

MuProfile MuProfile::antiderivative(double anchor, double value_at_anchor) const {
  require_plain("antiderivative");
  return MuProfile(legendre::antiderivative(coeffs_, anchor, value_at_anchor), 0.0, rule_);
}

MuProfile MuProfile::plus_constant(double c) const {
  require_plain("plus_constant");
  auto coeffs = coeffs_;
  coeffs[0] += c;
  return MuProfile(std::move(coeffs), 0.0, rule_);
}

MuProfile MuProfile::scaled(double factor) const {
  auto coeffs = coeffs_;
  for (double& v : coeffs) v *= factor;
  return MuProfile(std::move(coeffs), exponent_, rule_);
}

}  // namespace flock
