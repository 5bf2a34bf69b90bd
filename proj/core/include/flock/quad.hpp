#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "flock/kernel.hpp"

namespace flock {

/// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 2n - 1.
class QuadratureRule {
 public:
  static QuadratureRule gauss_legendre(int n);

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  int exact_degree() const noexcept { return 2 * static_cast<int>(nodes_.size()) - 1; }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
    return s;
  }

  /// Affine map of the rule onto [a, b].
  QuadratureRule mapped(double a, double b) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Throws DomainError for n < 1.
QuadratureRule build_rule(int n);

/// The Von-Mises equilibrium M(omega) = C exp(sigma(omega . Omega) / d) reduced to
/// mu = cos(theta), tabulated on a quadrature rule.
///
/// Internally the weight exp((sigma - sigma_ref) / d) is used with sigma_ref the
/// maximum of sigma on [-1, 1]; every average is a ratio, so the reference shift
/// cancels and exp never overflows.
class VonMisesEquilibrium {
 public:
  VonMisesEquilibrium(const CollisionKernel& kernel, QuadratureRule rule);

  const CollisionKernel& kernel() const noexcept { return kernel_; }
  const QuadratureRule& rule() const noexcept { return rule_; }

  /// exp((sigma(mu) - sigma_ref) / d), the scaled Boltzmann factor.
  double scaled_weight(double mu) const;
  std::span<const double> scaled_weights() const noexcept { return scaled_; }
  double reference_sigma() const noexcept { return sigma_ref_; }

  /// log of C with 2 pi C int exp(sigma / d) dmu = 1.
  double log_normalization() const noexcept { return log_c_; }
  /// M as a density on the sphere, evaluated at mu.
  double density(double mu) const;
  /// int_{-1}^{1} exp((sigma - sigma_ref) / d) dmu.
  double scaled_mass() const noexcept { return mass_; }

  /// <g>_M. Throws NumericError naming the node if g is not finite there.
  double average(const std::function<double(double)>& g) const;
  /// <g>_M for g given by its values at the rule nodes.
  double average_nodal(std::span<const double> g) const;

 private:
  CollisionKernel kernel_;
  QuadratureRule rule_;
  double sigma_ref_;
  double log_c_;
  double mass_;
  std::vector<double> scaled_;
};

/// <g>_h = int g h dmu / int h dmu on the given rule. The weight may be of either
/// sign; throws NumericError when int h dmu vanishes relative to int |h| dmu.
double average_weighted(const std::function<double(double)>& g,
                        const std::function<double(double)>& h_weight, const QuadratureRule& rule);

}  // namespace flock
