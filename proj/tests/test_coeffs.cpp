#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "flock/coeffs.hpp"
#include "flock/error.hpp"
#include "flock/io.hpp"
#include "support/generators.hpp"

using namespace flock;

namespace {

const std::vector<double> kSweep = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};

double langevin(double k) { return 1.0 / std::tanh(k) - 1.0 / k; }

// Every scalar output, in a fixed order.
std::vector<double> flatten(const HydroCoefficients& h) {
  std::vector<double> v = {h.c.c1, h.c.c2, h.c.c3, h.beta, h.gamma, h.beta_dirichlet, h.prefactor, h.xi};
  const auto& L = h.lambda;
  v.insert(v.end(), {L.l1_11, L.l1_12, L.l2_11, L.l2_12, L.l_21, L.l_22, L.l_23});
  const auto& E = h.eta;
  v.insert(v.end(), {E.e1_11, E.e1_12, E.e1_13, E.e2_11, E.e2_12, E.e4_11, E.e4_12, E.e1_21, E.e1_22, E.e2_21,
                     E.e2_22, E.e2_23});
  const auto& X = h.xi_brackets;
  v.insert(v.end(), {X.x1_1, X.x1_2, X.x2_1, X.x2_2});
  for (const auto* table : {&h.lambda_second, &h.eta_prime, &h.xi_slots, &h.zeta}) {
    v.insert(v.end(), table->begin(), table->end());
  }
  v.insert(v.end(), h.lambda_prime.begin(), h.lambda_prime.end());
  return v;
}

}  // namespace

TEST(C123, ConstantKernelClosedForms) {
  for (double d : kSweep) {
    const auto k = CollisionKernel::constant(1.0, d);
    const auto disc = Discretization::make(k, 64);
    const auto gci = solve_gci(k, 64, disc.rule);
    const auto r = compute_c123(disc, gci);
    EXPECT_NEAR(r.c.c1, langevin(1.0 / d), 1e-10) << d;
    EXPECT_NEAR(r.c.c3, d, 1e-12) << d;
  }
}

TEST(C123, RelationsForSpecifiedKernels) {
  for (const char* spec : {"const:1", "evenpoly:1,0.5"}) {
    for (double d : kSweep) {
      const auto k = parse_kernel_spec(spec, d);
      const auto disc = Discretization::make(k, 64);
      const auto r = compute_c123(disc, solve_gci(k, 64, disc.rule));
      EXPECT_LT(std::abs(r.relations.mass), 1e-9) << spec << " " << d;
      EXPECT_LT(std::abs(r.relations.flux), 1e-9) << spec << " " << d;
      EXPECT_LT(std::abs(r.relations.lambda), 1e-9) << spec << " " << d;
    }
  }
}

TEST(C123Property, OrderingOverRegistry) {
  for (double d : kSweep) {
    for (const auto& nk : kernel_registry(d)) {
      const auto disc = Discretization::make(nk.kernel, 64);
      const auto c = compute_c123(disc, solve_gci(nk.kernel, 64, disc.rule)).c;
      EXPECT_GT(c.c2, 0.0) << nk.name << " " << d;
      EXPECT_LT(c.c1, 1.0) << nk.name << " " << d;
      EXPECT_GT(c.c3, 0.0) << nk.name << " " << d;
      // A kernel growing with mu tilts the c2 weight forward; at weak alignment
      // that beats c1, so c2 < c1 is only asserted for even kernels or d <= 1.
      if (nk.name == "constant" || nk.name == "even-polynomial" || d <= 1.0) {
        EXPECT_LT(c.c2, c.c1) << nk.name << " " << d;
      }
    }
  }
}

TEST(C123Property, OrderingForEvenRandomKernels) {
  for (auto seed : gen::seeds(15)) {
    gen::Gen g(seed);
    const double d = g.log_uniform(0.05, 5.0);
    const auto k = CollisionKernel::even_polynomial({g.uniform(0.5, 1.5), g.uniform(0.0, 1.0)}, d);
    const auto disc = Discretization::make(k, 64);
    const auto c = compute_c123(disc, solve_gci(k, 64, disc.rule)).c;
    EXPECT_GT(c.c2, 0.0) << "seed " << seed;
    EXPECT_LT(c.c2, c.c1) << "seed " << seed << " " << k.spec() << " d " << d;
    EXPECT_LT(c.c1, 1.0) << "seed " << seed;
  }
}

TEST(Profiles, DataForAParHasZeroMean) {
  const auto k = parse_kernel_spec("affine:1,0.3", 0.4);
  const auto disc = Discretization::make(k, 64);
  const auto c = compute_c123(disc, solve_gci(k, 64, disc.rule)).c;
  const auto f = ProfileData::a_par(disc, c);
  const double mean = disc.rule->integrate(f);
  const double scale = disc.rule->integrate([&](double mu) { return std::abs(f(mu)); });
  EXPECT_LT(std::abs(mean), 1e-13 * scale);
}

TEST(Profiles, InconsistentCIsRejected) {
  const auto k = CollisionKernel::constant(1.0, 1.0);
  const auto disc = Discretization::make(k, 32);
  auto c = compute_c123(disc, solve_gci(k, 32, disc.rule)).c;
  c.c1 += 0.01;
  EXPECT_THROW(solve_profiles(disc, c), PreconditionError);
}

TEST(ProfilesProperty, ZeroMeanRelations) {
  for (auto seed : gen::seeds(15)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const auto disc = Discretization::make(k, 64);
    const auto c = compute_c123(disc, solve_gci(k, 64, disc.rule)).c;
    const auto p = solve_profiles(disc, c);
    const auto rel = profile_relations(disc, p);
    SCOPED_TRACE("seed " + std::to_string(seed) + " " + k.spec() + " d " + std::to_string(k.d()));
    EXPECT_LT(std::abs(rel.a_perp), 1e-9);
    EXPECT_LT(std::abs(rel.a_par), 1e-9);
    EXPECT_LT(std::abs(rel.b_perp), 1e-9);
    EXPECT_LT(std::abs(rel.b_par), 1e-9);
    for (const auto& [name, diag] : p.diagnostics) EXPECT_LT(diag.residual, 1e-8) << name;
  }
}

TEST(R1, BetaPositiveAndDirichletIdentity) {
  for (double d : kSweep) {
    for (const auto& nk : kernel_registry(d)) {
      const auto h = compute_coefficients(nk.kernel, 0.1, 64);
      EXPECT_GT(h.beta, 1e-12) << nk.name << " " << d;
      EXPECT_NEAR(h.beta, h.beta_dirichlet, 1e-8 * h.beta) << nk.name << " " << d;
    }
  }
}

TEST(R1, BetaIsContinuousInD) {
  // First differences shrink linearly with the step.
  const auto b = [](double x) { return compute_coefficients(CollisionKernel::constant(1.0, x), 0.1, 64).beta; };
  for (double d = 0.1; d <= 2.0; d += 0.19) {
    const double base = b(d);
    EXPECT_GT(base, 0.0);
    const double coarse = std::abs(b(d + 1e-3) - base);
    const double fine = std::abs(b(d + 1e-4) - base);
    EXPECT_GT(coarse, 0.0) << d;
    EXPECT_NEAR(coarse / fine, 10.0, 0.5) << d;
  }
}

TEST(R1, NegativeBetaIsInvariantError) {
  const auto k = CollisionKernel::constant(1.0, 1.0);
  const auto disc = Discretization::make(k, 32);
  const auto c = compute_c123(disc, solve_gci(k, 32, disc.rule)).c;
  auto p = solve_profiles(disc, c);
  p.a_par = p.a_par.scaled(-1.0);
  EXPECT_THROW(compute_r1_coeffs(disc, p), InvariantError);
}

TEST(Zeta, AssemblyIdentity) {
  const auto h = compute_coefficients(parse_kernel_spec("evenpoly:1,0.5", 0.8), 0.3, 64);
  for (std::size_t j = 0; j < 13; ++j) {
    const double expected = h.prefactor * (h.lambda_second[j] + h.eta_prime[j] + h.xi_slots[j]);
    EXPECT_NEAR(h.zeta[j], expected, 1e-14 * (1 + std::abs(expected))) << "zeta" << j + 1;
  }
  // Missing entries are zero.
  EXPECT_EQ(h.lambda_second[11], 0.0);
  EXPECT_EQ(h.lambda_second[12], 0.0);
  for (std::size_t j : {6u, 9u, 12u}) EXPECT_EQ(h.eta_prime[j], 0.0);
  for (std::size_t j : {4u, 6u, 8u, 9u}) EXPECT_EQ(h.xi_slots[j], 0.0);
}

TEST(Zeta, NoNonlocalityMeansNoXi) {
  const auto h = compute_coefficients(CollisionKernel::constant(1.0, 1.0), 0.0, 64);
  EXPECT_EQ(h.xi, 0.0);
  for (double v : h.xi_slots) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(h.zeta[12], 0.0);
}

TEST(Zeta, XiSlotRelations) {
  const auto h = compute_coefficients(CollisionKernel::constant(1.0, 0.6), 0.25, 64);
  ASSERT_NE(h.xi, 0.0);
  const auto& x = h.xi_slots;
  EXPECT_EQ(x[0], h.xi);
  EXPECT_EQ(x[3], -x[0]);
  EXPECT_EQ(x[1], 0.5 * x[0]);
  EXPECT_EQ(x[11], 0.5 * x[0]);
  EXPECT_EQ(x[12], 0.5 * x[0]);
  EXPECT_NEAR(h.xi, 0.25 * (h.xi_brackets.x1_1 + h.xi_brackets.x1_2 + h.xi_brackets.x2_1 + h.xi_brackets.x2_2),
              1e-15);
}

TEST(Zeta, LambdaSecondTenFromIndependentLambdaPrime) {
  const auto h = compute_coefficients(parse_kernel_spec("affine:1,0.3", 1.3), 0.1, 64);
  const double lp5 = -0.5 * h.lambda.l1_12;
  EXPECT_DOUBLE_EQ(h.lambda_prime[4], lp5);
  EXPECT_NEAR(h.lambda_second[9], -lp5 * h.c.c2, 1e-16);
}

TEST(Zeta, HPrimeFiniteDifferencePathAgrees) {
  for (const char* spec : {"const:1", "evenpoly:1,0.5", "affine:1,0.3"}) {
    const auto k = parse_kernel_spec(spec, 0.7);
    const auto a = compute_coefficients(k, 0.1, 64);
    const auto b = compute_coefficients(k, 0.1, 64, HPrimeMethod::finite_difference);
    for (std::size_t j = 0; j < 13; ++j) {
      EXPECT_NEAR(a.zeta[j], b.zeta[j], 1e-6 * (1 + std::abs(a.zeta[j]))) << spec << " zeta" << j + 1;
    }
  }
}

TEST(Zeta, TheoremMapping) {
  HydroCoefficients h;
  for (std::size_t j = 0; j < 13; ++j) h.zeta[j] = static_cast<double>(j + 1);
  const double rho = 2.0;
  EXPECT_EQ(h.q(1, rho), 7.0 / 2.0);
  EXPECT_EQ(h.q(2, rho), 1.0);
  EXPECT_EQ(h.q(3, rho), 3.0);
  EXPECT_EQ(h.q(4, rho), 4.0);
  EXPECT_EQ(h.q(5, rho), 6.0);
  EXPECT_EQ(h.q(6, rho), 16.0);
  EXPECT_EQ(h.q(7, rho), 18.0);
  EXPECT_EQ(h.q(8, rho), 20.0);
  EXPECT_EQ(h.dcoef(1, rho), 5.0);
  EXPECT_EQ(h.dcoef(2, rho), 22.0);
  EXPECT_EQ(h.dcoef(3, rho), 4.0);
  EXPECT_EQ(h.dcoef(4, rho), 24.0);
  EXPECT_EQ(h.dcoef(5, rho), 26.0);
  EXPECT_THROW(h.q(1, 0.0), StateError);
  EXPECT_THROW(h.q(9, 1.0), DomainError);
  EXPECT_THROW(h.dcoef(0, 1.0), DomainError);
}

TEST(Pipeline, SmallDegreeIsConfigError) {
  EXPECT_THROW(Discretization::make(CollisionKernel::constant(1.0, 1.0), 7), ConfigError);
}

TEST(Pipeline, ResidualKeys) {
  const auto h = compute_coefficients(CollisionKernel::constant(1.0, 1.0), 0.1, 32);
  for (const char* key : {"c1_relation", "c2_relation", "c3_relation", "a_perp_mean", "a_par_mean", "b_perp_mean",
                          "b_par_mean", "beta_dirichlet_gap", "gci_residual", "a_perp_residual", "a_par_residual",
                          "b1_residual", "b2_residual", "b_par_residual"}) {
    EXPECT_EQ(h.residuals.count(key), 1u) << key;
  }
}

TEST(PipelineProperty, BitwiseDeterminism) {
  for (auto seed : gen::seeds(5)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const auto a = compute_coefficients(k, 0.1, 64);
    const auto b = compute_coefficients(k, 0.1, 64);
    EXPECT_EQ(io::coefficients_to_json(a), io::coefficients_to_json(b)) << "seed " << seed;
    const auto fa = flatten(a);
    const auto fb = flatten(b);
    EXPECT_EQ(0, std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)));
  }
}

TEST(PipelineProperty, SelfConvergence) {
  for (auto seed : gen::seeds(8)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const auto a = flatten(compute_coefficients(k, 0.1, 64));
    const auto b = flatten(compute_coefficients(k, 0.1, 128));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-9) << "seed " << seed << " " << k.spec() << " d " << k.d() << " entry " << i;
    }
  }
}

TEST(PipelineProperty, SigmaShiftInvariance) {
  for (auto seed : gen::seeds(8)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const auto a = flatten(compute_coefficients(k, 0.1, 64));
    const auto b = flatten(compute_coefficients(k.with_sigma_offset(g.uniform(-20, 20)), 0.1, 64));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + std::abs(a[i]))) << "seed " << seed << " entry " << i;
    }
  }
}

TEST(PipelineProperty, RelationsOnRandomKernels) {
  for (auto seed : gen::seeds(15)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.log_uniform(0.05, 5.0));
    const auto h = compute_coefficients(k, 0.1, 64);
    SCOPED_TRACE("seed " + std::to_string(seed) + " " + k.spec() + " d " + std::to_string(k.d()));
    EXPECT_GT(h.beta, 0.0);
    for (const char* key : {"c1_relation", "c2_relation", "c3_relation", "a_perp_mean", "a_par_mean", "b_perp_mean",
                            "b_par_mean"}) {
      EXPECT_LT(std::abs(h.residuals.at(key)), 1e-9) << key;
    }
    EXPECT_LT(h.residuals.at("beta_dirichlet_gap"), 1e-8);
  }
}
