#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>

#include "flock/coeffs.hpp"
#include "flock/error.hpp"
#include "flock/io.hpp"
#include "flock/oracle.hpp"
#include "support/generators.hpp"

using namespace flock;
using namespace flock::oracle;

namespace {

double w_of(double mu) { return (1.0 - mu) * (1.0 + mu); }

std::vector<double> on_grid(const DenseGrid1D& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.nodes.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(g.nodes[j]);
  return v;
}

double max_error(const FdSolution& s, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t j = 0; j < s.values.size(); ++j) e = std::max(e, std::abs(s.values[j] - exact(s.grid.nodes[j])));
  return e;
}

// int E u (A v) dmu by quadrature on u's rule.
double form(const CollisionKernel& k, int mode, const MuProfile& u, const MuProfile& v) {
  const auto e = OperatorWeight::boltzmann(k);
  const MuProfile av = mode_apply(ModeOperator{k, mode}, v);
  return u.rule().integrate([&](double mu) { return e.value(mu) * u(mu) * av(mu); });
}

}  // namespace

TEST(DenseGrid, NodesInsideInterval) {
  const auto g = DenseGrid1D::make(200);
  EXPECT_EQ(g.nodes.size(), 200u);
  EXPECT_DOUBLE_EQ(g.spacing, 0.01);
  EXPECT_GT(g.nodes.front(), -1.0);
  EXPECT_LT(g.nodes.back(), 1.0);
  EXPECT_NEAR(g.nodes.front(), -0.995, 1e-15);
  EXPECT_DOUBLE_EQ(g.face(0), -1.0);
  EXPECT_DOUBLE_EQ(g.face(200), 1.0);
  EXPECT_THROW(DenseGrid1D::make(0), DomainError);
}

TEST(ModeApply, ConstantIsInKernelOfModeZero) {
  const auto k = parse_kernel_spec("evenpoly:1,0.5", 0.7);
  const MuProfile one({1.0}, 0.0, default_rule(16));
  for (double mu : {-0.9, 0.0, 0.5}) EXPECT_NEAR(mode_apply(ModeOperator{k, 0}, one, mu), 0.0, 1e-14);
  EXPECT_THROW(mode_apply(ModeOperator{k, -1}, one, 0.0), DomainError);
}

TEST(ModeApply, GciImage) {
  for (double d : {0.2, 1.0, 3.0}) {
    const auto k = CollisionKernel::constant(1.0, d);
    const auto gci = solve_gci(k, 64);
    for (double mu : {-0.99, -0.3, 0.2, 0.97}) {
      EXPECT_NEAR(mode_apply(ModeOperator{k, 1}, gci.g, mu), -d * std::sqrt(w_of(mu)), 1e-8) << d;
    }
  }
}

TEST(ModeApplyProperty, QuadraticFormSymmetricAndNonnegative) {
  const auto rule = default_rule(48);
  for (auto seed : gen::seeds(10)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    for (int mode : {0, 1, 2}) {
      const double s = 0.5 * mode;
      const MuProfile u(g.coefficients(10), s, rule);
      const MuProfile v(g.coefficients(10), s, rule);
      const double uv = form(k, mode, u, v);
      const double vu = form(k, mode, v, u);
      const double uu = form(k, mode, u, u);
      const double vv = form(k, mode, v, v);
      SCOPED_TRACE("seed " + std::to_string(seed) + " k " + std::to_string(mode));
      EXPECT_NEAR(uv, vu, 1e-10 * (std::abs(uu) + std::abs(vv)));
      if (mode == 0) {
        EXPECT_GE(uu, -1e-12 * std::abs(vv));
      } else {
        EXPECT_GT(uu, 0.0);
        EXPECT_GT(vv, 0.0);
      }
      // Cauchy-Schwarz for a nonnegative form.
      EXPECT_LE(uv * uv, uu * vv * (1 + 1e-9));
    }
  }
}

TEST(FdSolve, ZeroDataGivesZero) {
  const auto k = CollisionKernel::constant(1.0, 0.5);
  const auto s = fd_solve(k, 1, [](double) { return 1.0; }, [](double) { return 0.0; }, 300);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(FdSolve, Type2Legendre) {
  // sigma == 0. g = mu is reproduced exactly by the conservative stencil.
  const int m = 400;
  const auto g = DenseGrid1D::make(m);
  const auto s = fd_solve(OperatorWeight::unit(), 2, {}, on_grid(g, [](double mu) { return 2.0 * mu; }), m);
  EXPECT_LT(max_error(s, [](double mu) { return mu; }), 1e-11);
  EXPECT_LT(std::abs(s.multiplier), 1e-11);

  // P3 with eigenvalue 12 is not, and converges at second order.
  auto p3 = [](double mu) { return 0.5 * (5 * mu * mu * mu - 3 * mu); };
  auto err = [&](int mm) {
    const auto gg = DenseGrid1D::make(mm);
    return max_error(fd_solve(OperatorWeight::unit(), 2, {}, on_grid(gg, [&](double mu) { return 12 * p3(mu); }), mm),
                     p3);
  };
  EXPECT_LT(err(400), 1e-3);
  const double r = err(400) / err(800);
  EXPECT_GT(r, 3.5);
  EXPECT_LT(r, 4.5);
}

TEST(FdSolve, Type1ManufacturedSecondOrder) {
  // sigma == 0, alpha == 1. Plain unknown: g* = w.
  auto f0 = [](double mu) { return -w_of(mu) * (-2.0 * w_of(mu) + 4.0 * mu * mu) + w_of(mu); };
  // Substituted unknown with s = 1/2: g* = sqrt(w) e^mu, so u = e^mu is smooth and
  // f = sqrt(w) e^mu (-w^2 + 4 mu w + w - mu^2 + 1).
  auto g1 = [](double mu) { return std::sqrt(w_of(mu)) * std::exp(mu); };
  auto f1 = [](double mu) {
    const double w = w_of(mu);
    return std::sqrt(w) * std::exp(mu) * (-w * w + 4 * mu * w + w - mu * mu + 1);
  };
  struct Case {
    double exponent;
    std::function<double(double)> f, g;
  };
  for (const Case& c : {Case{0.0, f0, w_of}, Case{0.5, f1, g1}}) {
    auto err = [&](int m) {
      const auto g = DenseGrid1D::make(m);
      const auto s = fd_solve(OperatorWeight::unit(), 1, on_grid(g, [](double) { return 1.0; }), on_grid(g, c.f), m,
                              FdOptions{1e-10, c.exponent});
      return max_error(s, c.g);
    };
    EXPECT_LT(err(400), 1e-4) << c.exponent;
    const double r = err(400) / err(800);
    EXPECT_GT(r, 3.5) << c.exponent;
    EXPECT_LT(r, 4.5) << c.exponent;
  }
}

TEST(FdSolve, Preconditions) {
  const auto k = CollisionKernel::constant(1.0, 1.0);
  auto one = [](double) { return 1.0; };
  EXPECT_THROW(fd_solve(k, 1, one, one, 99), PreconditionError);
  EXPECT_THROW(fd_solve(k, 3, one, one, 200), PreconditionError);
  EXPECT_THROW(fd_solve(k, 1, [](double) { return 0.0; }, one, 200), PreconditionError);
  EXPECT_THROW(fd_solve(k, 1, one, one, 200, FdOptions{1e-10, 0.3}), PreconditionError);
  try {
    fd_solve(k, 2, one, one, 200);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("mean"), std::string::npos) << e.what();
  }
  const std::vector<double> short_data(10, 1.0);
  EXPECT_THROW(fd_solve(OperatorWeight::unit(), 2, {}, short_data, 200), PreconditionError);
}

TEST(FdSolve, RelativeL2Difference) {
  FdSolution s;
  s.grid = DenseGrid1D::make(100);
  s.values.assign(100, 2.0);
  EXPECT_NEAR(relative_l2_difference(s, std::vector<double>(100, 1.0)), 1.0, 1e-15);
  EXPECT_EQ(relative_l2_difference(s, std::vector<double>(100, 2.0)), 0.0);
  EXPECT_THROW(relative_l2_difference(s, std::vector<double>(3, 1.0)), PreconditionError);
}

TEST(Orthogonality, EquilibriumTrialIsOrthogonal) {
  const auto k = parse_kernel_spec("affine:1,0.3", 0.6);
  const auto gci = solve_gci(k, 32);
  const MuProfile one({1.0}, 0.0, gci.g.rule_ref());
  EXPECT_LT(gci_orthogonality(k, gci, one, 0).value, 1e-14);
}

TEST(OrthogonalityProperty, RandomTrials) {
  for (auto seed : gen::seeds(10)) {
    gen::Gen g(seed);
    const auto k = g.kernel(g.d());
    const auto gci = solve_gci(k, 64);
    for (int mode : {0, 1, 2}) {
      auto c = g.coefficients(12);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] /= (1.0 + i) * (1.0 + i);
      const MuProfile trial(c, 0.5 * mode, gci.g.rule_ref());
      const auto r = gci_orthogonality(k, gci, trial, mode);
      EXPECT_GT(r.trial_norm, 0.0);
      EXPECT_LT(r.value / r.trial_norm, 1e-8) << "seed " << seed << " k " << mode << " " << k.spec();
    }
  }
}

TEST(Orthogonality, FluxAlignment) {
  const auto k = parse_kernel_spec("evenpoly:1,0.5", 0.8);
  const auto disc = Discretization::make(k, 64);
  const auto gci = solve_gci(k, 64, disc.rule);
  const auto c = compute_c123(disc, gci).c;
  EXPECT_LT(std::abs(flux_alignment_defect(disc, gci, ProfileData::a_perp(disc, c))), 1e-9);
  EXPECT_LT(std::abs(flux_alignment_defect(disc, gci, ProfileData::b_par(disc, c))), 1e-9);
  // A generic k = 1 right-hand side is not aligned.
  EXPECT_GT(std::abs(flux_alignment_defect(disc, gci, [](double mu) { return std::sqrt(w_of(mu)); })), 1e-3);
}

TEST(Reassemble, MatchesLibraryAssembly) {
  for (const char* spec : {"const:1", "table:-1@1.2,0@1,1@1.5"}) {
    const auto h = compute_coefficients(parse_kernel_spec(spec, 0.9), 0.2, 64);
    const auto t = reassemble(h);
    for (std::size_t j = 0; j < 13; ++j) {
      EXPECT_NEAR(t.zeta[j], h.zeta[j], 1e-12 * (1 + std::abs(h.zeta[j]))) << spec << " zeta" << j + 1;
      EXPECT_NEAR(t.xi_slots[j], h.xi_slots[j], 1e-14) << spec;
    }
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(t.lambda_prime[j], h.lambda_prime[j], 1e-14) << spec;
  }
}

TEST(Verification, DefaultSuitePasses) {
  const auto report = run_verification(VerifyOptions{});
  std::set<std::string> tiers;
  for (const auto& c : report.checks) {
    EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured << " tolerance " << c.tolerance;
    tiers.insert(c.tier);
  }
  EXPECT_EQ(tiers, (std::set<std::string>{"trivial", "derived", "analytic"}));
  EXPECT_TRUE(report.passed());
  EXPECT_NE(report.to_json().find("\"checks\""), std::string::npos);
}

TEST(Verification, SmallDSuitePasses) {
  VerifyOptions opt;
  opt.kernel = "evenpoly:1,0.5";
  opt.d = 0.1;
  const auto report = run_verification(opt);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured;
}

TEST(Verification, InjectedFaultIsCaught) {
  VerifyOptions opt;
  opt.inject_fault = "zeta-sign";
  const auto report = run_verification(opt);
  EXPECT_FALSE(report.passed());
  std::set<std::string> failed;
  for (const auto& c : report.checks)
    if (!c.passed) failed.insert(c.name);
  EXPECT_TRUE(failed.count("table.zeta_reassembly")) << "zeta reassembly should flag the flipped sign";
  opt.inject_fault = "other";
  EXPECT_THROW(run_verification(opt), ConfigError);
}

TEST(Verification, QuickRunsOnlyTrivialTier) {
  VerifyOptions opt;
  opt.quick = true;
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_verification(opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 1.0);
  EXPECT_FALSE(report.checks.empty());
  for (const auto& c : report.checks) EXPECT_EQ(c.tier, "trivial") << c.name;
  EXPECT_TRUE(report.passed());
}

TEST(Verification, TableChecksSurviveJsonRoundTrip) {
  auto h = compute_coefficients(parse_kernel_spec("affine:1,0.3", 0.5), 0.1, 64);
  for (bool faulty : {false, true}) {
    if (faulty) assemble_zeta(h, AssemblyFault::zeta_sign);
    const auto direct = verify_coefficient_table(h);
    const auto back = io::coefficients_from_json(io::coefficients_to_json(h));
    ASSERT_EQ(back.size(), 1u);
    const auto again = verify_coefficient_table(back[0]);
    ASSERT_EQ(direct.size(), again.size());
    bool all = true;
    for (std::size_t i = 0; i < direct.size(); ++i) {
      EXPECT_EQ(direct[i].name, again[i].name);
      EXPECT_EQ(direct[i].passed, again[i].passed) << direct[i].name;
      all = all && direct[i].passed;
    }
    EXPECT_EQ(all, !faulty);
  }
}
