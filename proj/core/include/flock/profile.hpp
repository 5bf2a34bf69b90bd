#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "flock/quad.hpp"

namespace flock {

using RuleRef = std::shared_ptr<const QuadratureRule>;

/// A smooth function of mu = cos(theta) written as
///
///     f(mu) = (1 - mu^2)^exponent * sum_k coeffs[k] P_k(mu),
///
/// together with its values at the nodes of a quadrature rule. The endpoint
/// factor carries the (sin theta)^k behaviour of an azimuthal mode k, so the
/// Legendre part stays a smooth polynomial and converges spectrally.
class MuProfile {
 public:
  MuProfile(std::vector<double> coeffs, double exponent, RuleRef rule);

  /// Least-squares projection of f onto the degree-`degree` space with the given
  /// endpoint factor, using the rule's Gauss weights.
  static MuProfile project(const std::function<double(double)>& f, int degree, double exponent, RuleRef rule);

  double operator()(double mu) const;
  /// The polynomial factor (Legendre series) alone.
  double smooth(double mu) const;
  double smooth_derivative(double mu) const;
  double smooth_second_derivative(double mu) const;

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double exponent() const noexcept { return exponent_; }
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const QuadratureRule& rule() const noexcept { return *rule_; }
  const RuleRef& rule_ref() const noexcept { return rule_; }

  /// Values at the rule nodes.
  std::span<const double> nodal_values() const noexcept { return values_; }

  /// Same Legendre part with a different endpoint factor, i.e. multiplication by
  /// (1 - mu^2)^(exponent - this->exponent()).
  MuProfile with_exponent(double exponent) const;

  // The following require exponent() == 0.
  MuProfile derivative() const;
  MuProfile antiderivative(double anchor = 0.0, double value_at_anchor = 0.0) const;
  MuProfile plus_constant(double c) const;

  MuProfile scaled(double factor) const;

 private:
  void require_plain(const char* op) const;

  std::vector<double> coeffs_;
  double exponent_;
  RuleRef rule_;
  std::vector<double> values_;
};

/// (1 - mu^2)^p with p possibly fractional; zero at the endpoints for p > 0.
double endpoint_factor(double mu, double p);

}  // namespace flock
