#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "flock/error.hpp"
#include "flock/kernel.hpp"
#include "flock/quad.hpp"
#include "support/generators.hpp"

using namespace flock;

TEST(Kernel, ConstantValues) {
  const auto k = CollisionKernel::constant(1.0, 1.0);
  const auto v = k.evaluate(0.5);
  EXPECT_DOUBLE_EQ(v.nu, 1.0);
  EXPECT_DOUBLE_EQ(v.nu_prime, 0.0);
  EXPECT_NEAR(v.sigma, 0.5, 1e-15);
  const auto z = k.evaluate(0.0);
  EXPECT_NEAR(z.sigma, 0.0, 1e-15);
}

TEST(Kernel, EvenPolynomialAtOne) {
  const auto k = parse_kernel_spec("evenpoly:1,0.5", 1.0);
  const auto v = k.evaluate(1.0);
  EXPECT_NEAR(v.nu, 1.5, 1e-14);
  EXPECT_NEAR(v.nu_prime, 1.0, 1e-14);
  EXPECT_NEAR(v.sigma, 7.0 / 6.0, 1e-14);
}

TEST(Kernel, AffineAndTable) {
  const auto a = parse_kernel_spec("affine:1,0.3", 0.5);
  EXPECT_NEAR(a.nu(0.5), 1.15, 1e-14);
  EXPECT_NEAR(a.nu_prime(-0.2), 0.3, 1e-14);
  EXPECT_NEAR(a.sigma(1.0), 1.15, 1e-14);

  // Quadratic interpolant through three samples.
  const auto t = parse_kernel_spec("table:-1@1.2,0@1,1@1.5", 0.5);
  EXPECT_NEAR(t.nu(-1.0), 1.2, 1e-13);
  EXPECT_NEAR(t.nu(0.0), 1.0, 1e-13);
  EXPECT_NEAR(t.nu(1.0), 1.5, 1e-13);
  EXPECT_NEAR(t.nu(0.5), 1.0 + 0.15 * 0.5 + 0.35 * 0.25, 1e-13);
}

TEST(Kernel, OutOfRangeIsDomainError) {
  const auto k = CollisionKernel::constant(1.0, 1.0);
  EXPECT_THROW(k.evaluate(1.0 + 1e-9), DomainError);
  EXPECT_THROW(k.evaluate(-1.5), DomainError);
  EXPECT_THROW(k.evaluate(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(Kernel, RejectsBadInput) {
  EXPECT_THROW(parse_kernel_spec("const", 1.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("const:1,2", 1.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("const:x", 1.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("spline:1", 1.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("table:0@1,0@2", 1.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("affine:1,2", 1.0), ConfigError);  // negative at mu = -1
  EXPECT_THROW(parse_kernel_spec("const:1", 0.0), ConfigError);
  EXPECT_THROW(parse_kernel_spec("const:1", -1.0), ConfigError);
}

TEST(Kernel, SpecRoundTrip) {
  for (const char* spec : {"const:1", "affine:1,0.3", "evenpoly:1,0.5", "table:-1@1.2,0@1,1@1.5"}) {
    const auto k = parse_kernel_spec(spec, 0.7);
    const auto again = parse_kernel_spec(k.spec(), 0.7);
    for (double mu : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
      EXPECT_NEAR(k.nu(mu), again.nu(mu), 1e-14) << spec;
      EXPECT_NEAR(k.sigma(mu), again.sigma(mu), 1e-14) << spec;
    }
  }
}

TEST(Kernel, RegistryIsPositive) {
  for (const auto& nk : kernel_registry(1.0)) {
    EXPECT_GT(nk.kernel.nu_min(), 0.0) << nk.name;
    for (int i = 0; i <= 200; ++i) EXPECT_GE(nk.kernel.nu(-1.0 + i * 0.01), nk.kernel.nu_min() - 1e-14);
  }
}

// sigma' = nu and nu' = d nu/d mu by central differences, O(delta^2).
TEST(KernelProperty, DerivativesMatchFiniteDifferences) {
  for (auto seed : gen::seeds(40)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const double mu = g.uniform(-0.99, 0.99);
    SCOPED_TRACE("seed " + std::to_string(seed) + " kernel " + k.spec());
    for (double delta : {1e-3, 5e-4}) {
      const double ds = (k.sigma(mu + delta) - k.sigma(mu - delta)) / (2 * delta);
      const double dn = (k.nu(mu + delta) - k.nu(mu - delta)) / (2 * delta);
      EXPECT_NEAR(ds, k.nu(mu), 5.0 * delta * delta);
      EXPECT_NEAR(dn, k.nu_prime(mu), 20.0 * delta * delta);
    }
  }
}

TEST(KernelProperty, SigmaIsAntiderivativeOnRandomIntervals) {
  const auto rule = build_rule(40);
  for (auto seed : gen::seeds(40)) {
    gen::Gen g(seed);
    const auto k = g.kernel(1.0);
    double a = g.mu();
    double b = g.mu();
    if (a > b) std::swap(a, b);
    const auto mapped = rule.mapped(a, b);
    const double integral = mapped.integrate([&](double mu) { return k.nu(mu); });
    EXPECT_NEAR(k.sigma(b) - k.sigma(a), integral, 1e-12) << "seed " << seed << " " << k.spec();
  }
}

TEST(KernelProperty, SigmaOffsetOnlyShifts) {
  for (auto seed : gen::seeds(10)) {
    gen::Gen g(seed);
    const auto k = g.kernel(1.0);
    const double c = g.uniform(-5, 5);
    const auto shifted = k.with_sigma_offset(c);
    const double mu = g.mu();
    EXPECT_NEAR(shifted.sigma(mu) - k.sigma(mu), c, 1e-13);
    EXPECT_DOUBLE_EQ(shifted.nu(mu), k.nu(mu));
  }
}

TEST(SpatialKernel, BallKappa) {
  EXPECT_NEAR(compute_kappa(SpatialKernel::ball(1.0)), 0.1, 1e-12);
  EXPECT_NEAR(compute_kappa(SpatialKernel::ball(2.0)), 0.4, 1e-12);
}

TEST(SpatialKernel, GaussianKappa) {
  // K2 / K0 = 3 w^2 for a Gaussian profile.
  EXPECT_NEAR(compute_kappa(SpatialKernel::gaussian(0.7)), 0.49 / 2.0, 1e-10);
}

TEST(SpatialKernel, MomentsOfBall) {
  const double r = 1.3;
  for (int p : {0, 2}) {
    EXPECT_NEAR(spatial_moment(SpatialKernel::ball(r), p), 4.0 * M_PI * std::pow(r, p + 3) / (p + 3), 1e-11);
  }
}

TEST(SpatialKernel, KappaPassThrough) {
  EXPECT_DOUBLE_EQ(resolve_kappa(KappaSource{0.37}), 0.37);
  EXPECT_NEAR(resolve_kappa(KappaSource{SpatialKernel::ball(1.0)}), 0.1, 1e-12);
}

TEST(SpatialKernel, DivergentMomentIsConfigError) {
  SpatialKernel heavy{[](double r) { return 1.0 / (1.0 + r * r * r); }, std::nullopt, "heavy"};
  EXPECT_THROW(compute_kappa(heavy), ConfigError);
  EXPECT_THROW(SpatialKernel::ball(0.0), ConfigError);
  EXPECT_THROW(SpatialKernel::gaussian(-1.0), ConfigError);
}

TEST(SpatialKernelProperty, KappaIsHomogeneous) {
  for (auto seed : gen::seeds(10)) {
    gen::Gen g(seed);
    const double w = g.uniform(0.3, 2.0);
    const double lambda = g.log_uniform(1e-3, 1e3);
    const auto base = SpatialKernel::gaussian(w);
    SpatialKernel scaled{[=](double r) { return lambda * base.radial(r); }, std::nullopt, "scaled"};
    EXPECT_NEAR(compute_kappa(scaled), compute_kappa(base), 1e-12 * compute_kappa(base)) << "seed " << seed;
  }
}
