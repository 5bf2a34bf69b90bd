#include "flock/coeffs.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "flock/error.hpp"

namespace flock {

namespace {

// Nodal tabulation of everything the brackets need.
struct Nodes {
  std::vector<double> mu, s2, nu, dnu;
};

Nodes tabulate(const Discretization& disc) {
  Nodes t;
  for (double mu : disc.rule->nodes()) {
    t.mu.push_back(mu);
    t.s2.push_back((1.0 - mu) * (1.0 + mu));
    t.nu.push_back(disc.kernel.nu(mu));
    t.dnu.push_back(disc.kernel.nu_prime(mu));
  }
  return t;
}

template <class F>
double bracket(const Discretization& disc, F&& f) {
  const auto size = disc.rule->size();
  std::vector<double> v(size);
  for (std::size_t i = 0; i < size; ++i) v[i] = f(i);
  return disc.equilibrium.average_nodal(v);
}

// int f relative to int |scale|, the size of the terms before they cancel.
template <class F, class G>
double relative_integral(const QuadratureRule& rule, F&& f, G&& scale) {
  double s = 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    s += rule.weights()[i] * f(i);
    a += rule.weights()[i] * std::abs(scale(i));
  }
  return a > 0.0 ? s / a : 0.0;
}

void require_same_rule(const Discretization& disc, const MuProfile& p, const char* name) {
  if (p.rule_ref() != disc.rule) {
    throw PreconditionError(std::string(name) + " was not computed on the pipeline's quadrature rule");
  }
}

std::vector<double> fd_derivative(const MuProfile& h) {
  // Fourth-order centred differences of the polynomial h around each node.
  constexpr double delta = 1e-3;
  std::vector<double> out;
  for (double mu : h.rule().nodes()) {
    const double f1 = h.smooth(mu + delta) - h.smooth(mu - delta);
    const double f2 = h.smooth(mu + 2.0 * delta) - h.smooth(mu - 2.0 * delta);
    out.push_back((8.0 * f1 - f2) / (12.0 * delta));
  }
  return out;
}

}  // namespace

Discretization Discretization::make(const CollisionKernel& kernel, int n) {
  if (n < 8) throw ConfigError("polynomial degree n must be >= 8, got " + std::to_string(n));
  RuleRef rule = default_rule(n);
  return Discretization{kernel, n, rule, VonMisesEquilibrium(kernel, *rule), OperatorWeight::boltzmann(kernel)};
}

CResult compute_c123(const Discretization& disc, const GciSolution& gci) {
  require_same_rule(disc, gci.h, "GCI profile");
  const Nodes t = tabulate(disc);
  const auto h = gci.h.nodal_values();
  const auto e = disc.equilibrium.scaled_weights();
  const double d = disc.kernel.d();
  const auto& rule = *disc.rule;

  CResult out;
  out.c.c1 = bracket(disc, [&](std::size_t i) { return t.mu[i]; });

  double num2 = 0.0, num3 = 0.0, den = 0.0, abs_den = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double w = rule.weights()[i] * t.s2[i] * h[i] * e[i];
    num2 += w * t.nu[i] * t.mu[i];
    num3 += w;
    den += w * t.nu[i];
    abs_den += std::abs(w * t.nu[i]);
  }
  if (abs_den == 0.0 || std::abs(den) <= 1e-14 * abs_den) {
    throw NumericError("degenerate weight (1-mu^2) nu h M: its integral vanishes");
  }
  out.c.c2 = num2 / den;
  out.c.c3 = d * num3 / den;

  const auto& c = out.c;
  out.relations.mass = relative_integral(
      rule, [&](std::size_t i) { return (t.mu[i] - c.c1) * e[i]; },
      [&](std::size_t i) { return (std::abs(t.mu[i]) + std::abs(c.c1)) * e[i]; });
  out.relations.flux = relative_integral(
      rule, [&](std::size_t i) { return t.nu[i] / d * (t.mu[i] - c.c2) * t.s2[i] * h[i] * e[i]; },
      [&](std::size_t i) { return t.nu[i] / d * (std::abs(t.mu[i]) + std::abs(c.c2)) * t.s2[i] * h[i] * e[i]; });
  out.relations.lambda = relative_integral(
      rule, [&](std::size_t i) { return (1.0 - t.nu[i] * c.c3 / d) * t.s2[i] * h[i] * e[i]; },
      [&](std::size_t i) { return (1.0 + t.nu[i] * c.c3 / d) * t.s2[i] * h[i] * e[i]; });
  return out;
}

MuFunction ProfileData::a_perp(const Discretization& disc, const CCoefficients& c) {
  const auto& k = disc.kernel;
  const auto e = disc.weight.value;
  const double c3 = c.c3;
  return [k, e, c3](double mu) {
    const double d = k.d();
    const double q = (1.0 - mu) * (1.0 + mu);
    return e(mu) / d * (1.0 - c3 * k.nu(mu) / d) * q * std::sqrt(q);
  };
}

MuFunction ProfileData::a_par(const Discretization& disc, const CCoefficients& c) {
  const auto e = disc.weight.value;
  const double d = disc.kernel.d();
  const double c1 = c.c1;
  return [e, d, c1](double mu) { return e(mu) / d * (mu - c1); };
}

MuFunction ProfileData::b1(const Discretization& disc) {
  const auto& k = disc.kernel;
  const auto e = disc.weight.value;
  return [k, e](double mu) {
    const double d = k.d();
    const double q = (1.0 - mu) * (1.0 + mu);
    return k.nu(mu) / (d * d) * e(mu) * q * q;
  };
}

MuFunction ProfileData::b2(const Discretization& disc, const CCoefficients& c, const MuProfile& b1) {
  const auto e = disc.weight.value;
  const double d = disc.kernel.d();
  const double c1 = c.c1;
  return [e, d, c1, b1](double mu) { return e(mu) * (2.0 * b1(mu) - c1 / d); };
}

MuFunction ProfileData::b_par(const Discretization& disc, const CCoefficients& c) {
  const auto& k = disc.kernel;
  const auto e = disc.weight.value;
  const double c2 = c.c2;
  return [k, e, c2](double mu) {
    const double d = k.d();
    const double q = (1.0 - mu) * (1.0 + mu);
    return k.nu(mu) / (d * d) * e(mu) * (mu - c2) * q * std::sqrt(q);
  };
}

ProfileSet solve_profiles(const Discretization& disc, const CCoefficients& c) {
  const auto& e = disc.weight.value;
  const auto& w = disc.weight;
  const int n = disc.n;
  const double e_min = e(-1.0);
  const MuFunction alpha1 = e;
  const MuFunction alpha4 = [&e](double mu) { return 4.0 * e(mu); };

  auto a_perp = solve_type1(w, alpha1, 0.5 * e_min, ProfileData::a_perp(disc, c), n, 0.5, disc.rule);
  auto a_par = solve_type2(w, ProfileData::a_par(disc, c), n, disc.rule);
  auto b1 = solve_type1(w, alpha4, 2.0 * e_min, ProfileData::b1(disc), n, 1.0, disc.rule);
  MuProfile b1_plain = b1.profile.with_exponent(0.0);
  auto b2 = solve_type2(w, ProfileData::b2(disc, c, b1_plain), n, disc.rule);
  auto b_par = solve_type1(w, alpha1, 0.5 * e_min, ProfileData::b_par(disc, c), n, 0.5, disc.rule);

  // Gauges: <a_par>_M = 0 and <b1 sin^2 / 2 + b2>_M = 0.
  MuProfile a_par_g = a_par.profile.plus_constant(-disc.equilibrium.average_nodal(a_par.profile.nodal_values()));
  const auto b1v = b1_plain.nodal_values();
  const auto b2v = b2.profile.nodal_values();
  const auto nodes = disc.rule->nodes();
  const double shift = bracket(disc, [&](std::size_t i) {
    const double s2 = (1.0 - nodes[i]) * (1.0 + nodes[i]);
    return 0.5 * b1v[i] * s2 + b2v[i];
  });
  MuProfile b2_g = b2.profile.plus_constant(-shift);

  ProfileSet out{a_perp.profile,
                 a_perp.profile.with_exponent(0.0),
                 std::move(a_par_g),
                 b1.profile,
                 std::move(b1_plain),
                 std::move(b2_g),
                 b_par.profile,
                 b_par.profile.with_exponent(0.0),
                 {}};
  out.diagnostics = {{"a_perp", a_perp.diagnostics},
                     {"a_par", a_par.diagnostics},
                     {"b1", b1.diagnostics},
                     {"b2", b2.diagnostics},
                     {"b_par", b_par.diagnostics}};
  return out;
}

ProfileRelations profile_relations(const Discretization& disc, const ProfileSet& p) {
  const Nodes t = tabulate(disc);
  const auto ap = p.a_perp.nodal_values();
  const auto al = p.a_par.nodal_values();
  const auto b1 = p.b1.nodal_values();
  const auto b2 = p.b2.nodal_values();
  const auto bp = p.b_par.nodal_values();
  ProfileRelations r;
  r.a_perp = bracket(disc, [&](std::size_t i) { return ap[i] * t.s2[i]; });
  r.a_par = bracket(disc, [&](std::size_t i) { return al[i]; });
  r.b_perp = bracket(disc, [&](std::size_t i) { return 0.5 * b1[i] * t.s2[i] + b2[i]; });
  r.b_par = bracket(disc, [&](std::size_t i) { return bp[i] * t.s2[i]; });
  return r;
}

R1Coefficients compute_r1_coeffs(const Discretization& disc, const ProfileSet& p) {
  require_same_rule(disc, p.a_par, "a_par");
  const Nodes t = tabulate(disc);
  const auto al = p.a_par.nodal_values();
  const auto b1 = p.b1.nodal_values();
  const auto b2 = p.b2.nodal_values();
  R1Coefficients r;
  r.beta = bracket(disc, [&](std::size_t i) { return al[i] * t.mu[i]; });
  r.gamma = bracket(disc, [&](std::size_t i) { return (0.5 * b1[i] * t.s2[i] + b2[i]) * t.mu[i]; });

  const MuProfile da = p.a_par.derivative();
  const auto dav = da.nodal_values();
  r.beta_dirichlet =
      disc.kernel.d() * bracket(disc, [&](std::size_t i) { return t.s2[i] * dav[i] * dav[i]; });

  if (!(r.beta > 0.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "mass diffusion coefficient beta = " << r.beta << " is not positive (d = " << disc.kernel.d() << ")";
    throw InvariantError(msg.str());
  }
  return r;
}

void assemble_zeta(HydroCoefficients& o, AssemblyFault fault) {
  const auto& L = o.lambda;
  const auto& E = o.eta;
  const double c1 = o.c.c1, c2 = o.c.c2, c3 = o.c.c3;

  // lambda'_1..7
  auto& lp = o.lambda_prime;
  lp[0] = L.l1_11;
  lp[1] = -L.l1_11 + L.l2_11 - L.l_21;
  lp[2] = L.l1_12;
  lp[3] = 0.5 * L.l1_12 - L.l_23;
  lp[4] = -0.5 * L.l1_12;
  lp[5] = 0.5 * L.l1_12 + L.l2_12 - L.l_22;
  lp[6] = L.l1_12;
  auto lpj = [&lp](int j) { return lp[static_cast<std::size_t>(j - 1)]; };

  auto& ls = o.lambda_second;
  ls.fill(0.0);
  ls[0] = -1.5 * c1 * lpj(1) - lpj(6) * c3;
  ls[1] = -lpj(1) * c1;
  ls[2] = -0.5 * lpj(1) * c1 - lpj(4) * c3;
  ls[3] = -0.5 * lpj(1) * c1 - lpj(5) * c3;
  ls[4] = -lpj(1) * c1 - lpj(7) * c3;
  ls[5] = -lpj(1) * c1 - lpj(2) * c2 - lpj(3) * c1;
  ls[6] = -lpj(2) * c3 + lpj(7) * c3;
  ls[7] = -lpj(3) * c1 - lpj(6) * c2;
  ls[8] = -lpj(4) * c2;
  ls[9] = -lpj(5) * c2;
  ls[10] = -lpj(7) * c2;

  auto& ep = o.eta_prime;
  ep.fill(0.0);
  ep[0] = 0.5 * E.e1_11 + E.e1_12 + 1.5 * E.e2_11 - 2.0 * E.e1_21;
  ep[1] = E.e1_12;
  ep[2] = 0.5 * E.e1_11 + E.e1_13 + 0.5 * E.e2_11 - E.e1_21;
  ep[3] = 0.5 * E.e1_11 - 0.5 * E.e2_11;
  ep[4] = E.e1_11 + E.e2_11;
  ep[5] = E.e4_11 - E.e2_21;
  ep[7] = -E.e1_12 + E.e2_12 + E.e4_12 - 2.0 * E.e1_22 - E.e2_23;
  ep[8] = -E.e1_22 - E.e2_22;
  ep[10] = 2.0 * E.e2_12;
  ep[11] = E.e1_13;

  auto& xs = o.xi_slots;
  const double x = o.xi;
  xs = {x, 0.5 * x, x, -x, 0.0, 2.0 * x, 0.0, 0.5 * x, 0.0, 0.0, x, 0.5 * x, 0.5 * x};

  const double eta_sign = fault == AssemblyFault::zeta_sign ? -1.0 : 1.0;
  for (std::size_t j = 0; j < 13; ++j) o.zeta[j] = o.prefactor * (ls[j] + eta_sign * ep[j] + xs[j]);
}

HydroCoefficients compute_r2_coeffs(const Discretization& disc, const GciSolution& gci, const ProfileSet& p,
                                    const CCoefficients& c, double kappa, HPrimeMethod method) {
  require_same_rule(disc, gci.h, "GCI profile");
  require_same_rule(disc, p.a_perp, "profile set");
  const Nodes t = tabulate(disc);
  const auto h = gci.h.nodal_values();
  std::vector<double> hp_fd;
  std::span<const double> hp = gci.h_prime.nodal_values();
  if (method == HPrimeMethod::finite_difference) {
    hp_fd = fd_derivative(gci.h);
    hp = hp_fd;
  }
  const auto ap = p.a_perp.nodal_values();
  const auto al = p.a_par.nodal_values();
  const auto b1 = p.b1.nodal_values();
  const auto b2 = p.b2.nodal_values();
  const auto bp = p.b_par.nodal_values();
  const auto& mu = t.mu;
  const auto& s2 = t.s2;

  HydroCoefficients o;
  o.kernel = disc.kernel.spec();
  o.d = disc.kernel.d();
  o.kappa = kappa;
  o.n = disc.n;
  o.c = c;

  auto br = [&disc](auto&& f) { return bracket(disc, f); };
  auto& L = o.lambda;
  L.l1_11 = br([&](std::size_t i) { return 0.5 * s2[i] * ap[i] * h[i]; });
  L.l1_12 = br([&](std::size_t i) { return 0.5 * s2[i] * bp[i] * h[i]; });
  L.l2_11 = br([&](std::size_t i) { return mu[i] * al[i] * h[i]; });
  L.l2_12 = br([&](std::size_t i) { return (0.5 * s2[i] * mu[i] * b1[i] + mu[i] * b2[i]) * h[i]; });
  L.l_21 = br([&](std::size_t i) { return 0.5 * s2[i] * al[i] * hp[i]; });
  L.l_22 = br([&](std::size_t i) { return (0.25 * s2[i] * s2[i] * b1[i] + 0.5 * s2[i] * b2[i]) * hp[i]; });
  L.l_23 = br([&](std::size_t i) { return 0.125 * s2[i] * s2[i] * b1[i] * hp[i]; });

  auto& E = o.eta;
  E.e1_11 = br([&](std::size_t i) { return 0.5 * s2[i] * al[i] * h[i]; });
  E.e1_12 = br([&](std::size_t i) { return (0.25 * s2[i] * s2[i] * b1[i] + 0.5 * s2[i] * b2[i]) * h[i]; });
  E.e1_13 = br([&](std::size_t i) { return 0.125 * s2[i] * s2[i] * b1[i] * h[i]; });
  E.e2_11 = br([&](std::size_t i) { return 0.5 * s2[i] * mu[i] * ap[i] * h[i]; });
  E.e2_12 = br([&](std::size_t i) { return 0.5 * s2[i] * mu[i] * bp[i] * h[i]; });
  E.e4_11 = br([&](std::size_t i) { return mu[i] * mu[i] * al[i] * h[i]; });
  E.e4_12 = br([&](std::size_t i) { return (0.5 * s2[i] * b1[i] + b2[i]) * mu[i] * mu[i] * h[i]; });
  E.e1_21 = br([&](std::size_t i) { return 0.125 * s2[i] * s2[i] * ap[i] * hp[i]; });
  E.e1_22 = br([&](std::size_t i) { return 0.125 * s2[i] * s2[i] * bp[i] * hp[i]; });
  E.e2_21 = br([&](std::size_t i) { return 0.5 * s2[i] * mu[i] * al[i] * hp[i]; });
  E.e2_22 = br([&](std::size_t i) { return 0.125 * s2[i] * s2[i] * mu[i] * b1[i] * hp[i]; });
  E.e2_23 = br([&](std::size_t i) { return (0.25 * s2[i] * s2[i] * b1[i] + 0.5 * s2[i] * b2[i]) * mu[i] * hp[i]; });

  auto& X = o.xi_brackets;
  X.x1_1 = -br([&](std::size_t i) { return 0.5 * s2[i] * mu[i] * t.nu[i] * hp[i]; });
  X.x1_2 = br([&](std::size_t i) { return 0.5 * s2[i] * s2[i] * t.dnu[i] * hp[i]; });
  X.x2_1 = br([&](std::size_t i) { return (1.0 - 0.5 * s2[i]) * t.nu[i] * h[i]; });
  X.x2_2 = -br([&](std::size_t i) { return 0.5 * s2[i] * mu[i] * t.dnu[i] * h[i]; });
  o.xi = kappa * (X.x1_1 + X.x1_2 + X.x2_1 + X.x2_2);

  const double weight = br([&](std::size_t i) { return s2[i] * t.nu[i] * h[i]; });
  if (weight == 0.0 || !std::isfinite(weight)) {
    throw NumericError("degenerate prefactor: <sin^2 nu h>_M = " + std::to_string(weight));
  }
  o.prefactor = 2.0 * o.d / weight;
  assemble_zeta(o);
  return o;
}

HydroCoefficients compute_coefficients(const CollisionKernel& kernel, double kappa, int n, HPrimeMethod method) {
  const Discretization disc = Discretization::make(kernel, n);
  const GciSolution gci = solve_gci(kernel, n, disc.rule);
  const CResult cr = compute_c123(disc, gci);
  const ProfileSet profiles = solve_profiles(disc, cr.c);
  const R1Coefficients r1 = compute_r1_coeffs(disc, profiles);
  HydroCoefficients out = compute_r2_coeffs(disc, gci, profiles, cr.c, kappa, method);
  out.beta = r1.beta;
  out.gamma = r1.gamma;
  out.beta_dirichlet = r1.beta_dirichlet;

  const ProfileRelations rel = profile_relations(disc, profiles);
  auto& r = out.residuals;
  r["c1_relation"] = cr.relations.mass;
  r["c2_relation"] = cr.relations.flux;
  r["c3_relation"] = cr.relations.lambda;
  r["a_perp_mean"] = rel.a_perp;
  r["a_par_mean"] = rel.a_par;
  r["b_perp_mean"] = rel.b_perp;
  r["b_par_mean"] = rel.b_par;
  r["beta_dirichlet_gap"] = std::abs(r1.beta - r1.beta_dirichlet) / std::abs(r1.beta);
  r["gci_residual"] = gci.diagnostics.residual;
  for (const auto& [name, diag] : profiles.diagnostics) r[name + "_residual"] = diag.residual;
  return out;
}

double HydroCoefficients::q(int i, double rho) const {
  switch (i) {
    case 1:
      if (rho == 0.0) throw StateError("Q_1 = zeta_7 / rho is undefined at rho = 0");
      return zeta[6] / rho;
    case 2: return zeta[0];
    case 3: return zeta[2];
    case 4: return zeta[3];
    case 5: return zeta[5];
    case 6: return rho * zeta[7];
    case 7: return rho * zeta[8];
    case 8: return rho * zeta[9];
    default: throw DomainError("quadratic coefficient index must be in 1..8, got " + std::to_string(i));
  }
}

double HydroCoefficients::dcoef(int i, double rho) const {
  switch (i) {
    case 1: return zeta[4];
    case 2: return rho * zeta[10];
    case 3: return rho * zeta[1];
    case 4: return rho * zeta[11];
    case 5: return rho * zeta[12];
    default: throw DomainError("derivative coefficient index must be in 1..5, got " + std::to_string(i));
  }
}

}  // namespace flock
