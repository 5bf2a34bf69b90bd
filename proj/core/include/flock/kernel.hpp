#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace flock {

struct KernelValues {
  double nu;
  double nu_prime;
  double sigma;
};

enum class NuModel { constant, affine, even_polynomial, tabulated };

/// Alignment frequency nu(mu), its derivative, its antiderivative sigma and the
/// noise constant d. Every registered model is a polynomial in mu, held as a
/// Legendre series, so sigma is exact. sigma(0) = sigma_offset (0 by default);
/// the offset cancels in every normalized quantity downstream.
///
/// Immutable after construction.
class CollisionKernel {
 public:
  static CollisionKernel constant(double nu0, double d);
  /// nu(mu) = a + b mu.
  static CollisionKernel affine(double a, double b, double d);
  /// nu(mu) = sum_k coeffs[k] mu^(2k).
  static CollisionKernel even_polynomial(std::vector<double> coeffs, double d);
  /// Interpolating polynomial through (mu_i, nu_i); mu_i distinct in [-1, 1].
  static CollisionKernel tabulated(std::vector<std::pair<double, double>> samples, double d);

  /// Throws DomainError for mu outside [-1, 1].
  KernelValues evaluate(double mu) const;

  // Unchecked evaluation for quadrature loops (mu assumed in range).
  double nu(double mu) const;
  double nu_prime(double mu) const;
  double sigma(double mu) const;

  double d() const noexcept { return d_; }
  double nu_min() const noexcept { return nu_min_; }
  double sigma_offset() const noexcept { return sigma_offset_; }
  NuModel model() const noexcept { return model_; }
  const std::vector<double>& params() const noexcept { return params_; }

  /// Textual form accepted by parse_kernel_spec, e.g. "const:1".
  std::string spec() const;

  CollisionKernel with_d(double d) const;
  CollisionKernel with_sigma_offset(double offset) const;

 private:
  CollisionKernel(NuModel model, std::vector<double> params, std::vector<double> nu_series, double d);

  NuModel model_;
  std::vector<double> params_;
  std::vector<double> nu_series_;
  std::vector<double> nu_prime_series_;
  std::vector<double> sigma_series_;
  double d_;
  double sigma_offset_ = 0.0;
  double nu_min_ = 0.0;
};

/// Parses "const:1", "affine:1,0.5", "evenpoly:1,0.5", "table:-1@1.2,0@1,1@1.5".
CollisionKernel parse_kernel_spec(const std::string& spec, double d);

struct NamedKernel {
  std::string name;
  CollisionKernel kernel;
};

/// The closed registry of kernel models used by sweeps and property checks.
std::vector<NamedKernel> kernel_registry(double d);

/// Radial interaction kernel K(|x - y|).
struct SpatialKernel {
  std::function<double(double)> radial;
  /// Compact support radius; nullopt declares infinite support with rapid decay.
  std::optional<double> support_radius;
  std::string name = "custom";

  static SpatialKernel ball(double radius);
  static SpatialKernel gaussian(double width);
};

/// Full 3D radial moment K_p = 4 pi int_0^inf K(r) r^(p+2) dr.
double spatial_moment(const SpatialKernel& kernel, int p);

/// K_2 / (6 K_0). Throws ConfigError for a divergent moment or K_0 <= 0.
double compute_kappa(const SpatialKernel& kernel);

/// The nonlocality constant is either given directly or derived from a kernel.
using KappaSource = std::variant<double, SpatialKernel>;
double resolve_kappa(const KappaSource& source);

}  // namespace flock
