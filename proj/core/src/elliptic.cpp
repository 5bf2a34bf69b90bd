#include "flock/elliptic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "flock/error.hpp"
#include "flock/legendre.hpp"

namespace flock {

namespace {

constexpr double kMinReciprocalCondition = 1e-15;
constexpr double kSolvabilityTolerance = 1e-10;

struct Basis {
  // Rows are nodes, columns are P_0..P_n.
  Eigen::MatrixXd p;
  Eigen::MatrixXd dp;
};

Basis tabulate(const QuadratureRule& rule, int n) {
  const auto m = static_cast<Eigen::Index>(rule.size());
  Basis b{Eigen::MatrixXd(m, n + 1), Eigen::MatrixXd(m, n + 1)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto v = legendre::basis(n, rule.nodes()[static_cast<std::size_t>(i)]);
    for (int k = 0; k <= n; ++k) {
      b.p(i, k) = v.p[static_cast<std::size_t>(k)];
      b.dp(i, k) = v.dp[static_cast<std::size_t>(k)];
    }
  }
  return b;
}

RuleRef resolve_rule(RuleRef rule, int n) {
  if (n < 0) throw DomainError("polynomial degree must be nonnegative, got " + std::to_string(n));
  if (!rule) return default_rule(n);
  if (static_cast<int>(rule->size()) < n + 2) {
    throw PreconditionError("quadrature rule with " + std::to_string(rule->size()) +
                            " points is too coarse for degree " + std::to_string(n));
  }
  return rule;
}

// Row and column equilibration followed by a pivoted LU solve.
Eigen::VectorXd solve_scaled(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs, const char* what,
                             SolveDiagnostics& diag) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd r(n), c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = a.row(i).cwiseAbs().maxCoeff();
    r(i) = v > 0.0 ? 1.0 / v : 1.0;
  }
  const Eigen::MatrixXd ar = r.asDiagonal() * a;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = ar.col(j).cwiseAbs().maxCoeff();
    c(j) = v > 0.0 ? 1.0 / v : 1.0;
  }
  const Eigen::MatrixXd as = ar * c.asDiagonal();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(as);
  const double rcond = lu.rcond();
  diag.condition_estimate = rcond > 0.0 ? 1.0 / rcond : INFINITY;
  if (!(rcond > kMinReciprocalCondition)) {
    throw SolverError(std::string(what) + " system is numerically singular", diag.condition_estimate);
  }
  Eigen::VectorXd x = c.asDiagonal() * lu.solve(r.asDiagonal() * rhs);
  if (!x.allFinite()) {
    throw SolverError(std::string(what) + " solve produced non-finite coefficients", diag.condition_estimate);
  }
  return x;
}

double relative_defect(const Eigen::VectorXd& r, const Eigen::VectorXd& b) {
  const double scale = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  const double err = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  return scale > 0.0 ? err / scale : err;
}

// Residual of the strong form divided by E, relative to max |f / E|.
template <class Apply>
double strong_residual(const QuadratureRule& rule, const OperatorWeight& weight, const MuFunction& f,
                       Apply&& apply) {
  double err = 0.0;
  double scale = 0.0;
  for (double mu : rule.nodes()) {
    const double e = weight.value(mu);
    const double fv = f(mu) / e;
    err = std::max(err, std::abs(apply(mu) / e - fv));
    scale = std::max(scale, std::abs(fv));
  }
  return scale > 0.0 ? err / scale : err;
}

}  // namespace

OperatorWeight OperatorWeight::boltzmann(const CollisionKernel& kernel) {
  const double ref = kernel.sigma(1.0);
  const double d = kernel.d();
  return {[kernel, ref, d](double mu) { return std::exp((kernel.sigma(mu) - ref) / d); },
          [kernel, d](double mu) { return kernel.nu(mu) / d; }};
}

OperatorWeight OperatorWeight::unit() {
  return {[](double) { return 1.0; }, [](double) { return 0.0; }};
}

RuleRef default_rule(int n) {
  if (n < 0) throw DomainError("polynomial degree must be nonnegative, got " + std::to_string(n));
  return std::make_shared<const QuadratureRule>(QuadratureRule::gauss_legendre(2 * n + 64));
}

double apply_type1(const OperatorWeight& weight, const MuFunction& alpha, const MuProfile& g, double mu) {
  const double s = g.exponent();
  const double u = g.smooth(mu);
  const double du = g.smooth_derivative(mu);
  const double d2u = g.smooth_second_derivative(mu);
  const double q = (1.0 - mu) * (1.0 + mu);
  const double p = -2.0 * s * mu * u + q * du;
  const double dp = -2.0 * s * u - 2.0 * (s + 1.0) * mu * du + q * d2u;
  const double e = weight.value(mu);
  const double inner = -e * ((weight.log_slope(mu) * q - 2.0 * s * mu) * p + q * dp) + alpha(mu) * u;
  return endpoint_factor(mu, s) * inner;
}

double apply_type2(const OperatorWeight& weight, const MuProfile& g, double mu) {
  if (g.exponent() != 0.0) throw PreconditionError("type 2 operator expects a profile without endpoint factor");
  const double du = g.smooth_derivative(mu);
  const double d2u = g.smooth_second_derivative(mu);
  const double q = (1.0 - mu) * (1.0 + mu);
  return -weight.value(mu) * (weight.log_slope(mu) * q * du - 2.0 * mu * du + q * d2u);
}

EllipticSolution solve_type1(const OperatorWeight& weight, const MuFunction& alpha, double alpha0,
                             const MuFunction& f, int n, double exponent, RuleRef rule) {
  if (!(alpha0 > 0.0)) {
    throw PreconditionError("type 1 problem needs alpha0 > 0, got " + std::to_string(alpha0));
  }
  if (exponent < 0.5) {
    throw PreconditionError("type 1 endpoint exponent must be >= 1/2, got " + std::to_string(exponent));
  }
  rule = resolve_rule(std::move(rule), n);
  const auto m = static_cast<Eigen::Index>(rule->size());
  const Basis b = tabulate(*rule, n);
  const double s = exponent;

  // The equation is divided by E before testing, so every entry is an
  // unweighted integral:
  //   int (1-mu^2) g' v' - int l (1-mu^2) g' v + int (alpha/E) g v / (1-mu^2)
  //     = int (f/E) v / (1-mu^2),   l = E'/E,
  // with g = (1-mu^2)^s u and v = (1-mu^2)^s P_i. Writing g' = (1-mu^2)^(s-1) Pu,
  // Pu = -2 s mu u + (1-mu^2) u', all weights become powers of (1-mu^2).
  Eigen::MatrixXd grad(m, n + 1);
  Eigen::VectorXd w_dd(m), w_dv(m), w_vv(m), scaled_f(m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = rule->nodes()[static_cast<std::size_t>(i)];
    const double w = rule->weights()[static_cast<std::size_t>(i)];
    const double q = (1.0 - mu) * (1.0 + mu);
    const double a = alpha(mu);
    if (!(a >= alpha0)) {
      std::ostringstream msg;
      msg << "alpha(" << mu << ") = " << a << " is below the declared bound alpha0 = " << alpha0;
      throw PreconditionError(msg.str());
    }
    const double e = weight.value(mu);
    const double fv = f(mu);
    if (!std::isfinite(e) || !(e > 0.0) || !std::isfinite(fv)) {
      std::ostringstream msg;
      msg << "non-finite coefficient in type 1 problem at mu = " << mu;
      throw NumericError(msg.str());
    }
    const double q_pow = endpoint_factor(mu, 2.0 * s - 1.0);
    grad.row(i) = -2.0 * s * mu * b.p.row(i) + q * b.dp.row(i);
    w_dd(i) = w * q_pow;
    w_dv(i) = -w * weight.log_slope(mu) * q_pow * q;
    w_vv(i) = w * (a / e) * q_pow;
    scaled_f(i) = fv / e;
    rhs += (w * scaled_f(i) * endpoint_factor(mu, s - 1.0)) * b.p.row(i).transpose();
  }
  const Eigen::MatrixXd a = grad.transpose() * w_dd.asDiagonal() * grad +
                            b.p.transpose() * w_dv.asDiagonal() * grad +
                            b.p.transpose() * w_vv.asDiagonal() * b.p;

  SolveDiagnostics diag;
  const Eigen::VectorXd coeffs = solve_scaled(a, rhs, "type 1", diag);
  diag.galerkin_defect = relative_defect(a * coeffs - rhs, rhs);

  MuProfile g(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()), s, rule);
  diag.residual = strong_residual(*rule, weight, f, [&](double mu) { return apply_type1(weight, alpha, g, mu); });
  return {std::move(g), diag};
}

EllipticSolution solve_type1(const CollisionKernel& kernel, const MuFunction& alpha, double alpha0,
                             const MuFunction& f, int n, double exponent, RuleRef rule) {
  return solve_type1(OperatorWeight::boltzmann(kernel), alpha, alpha0, f, n, exponent, std::move(rule));
}

EllipticSolution solve_type2(const OperatorWeight& weight, const MuFunction& f, int n, RuleRef rule) {
  rule = resolve_rule(std::move(rule), n);
  const auto m = static_cast<Eigen::Index>(rule->size());
  const Basis b = tabulate(*rule, n);

  // Divided by E:  int (1-mu^2) u' v' - int l (1-mu^2) u' v = int (f/E) v.
  Eigen::VectorXd w_dd(m), w_dv(m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  double mean_f = 0.0;
  double abs_f = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = rule->nodes()[static_cast<std::size_t>(i)];
    const double w = rule->weights()[static_cast<std::size_t>(i)];
    const double e = weight.value(mu);
    const double fv = f(mu);
    if (!std::isfinite(e) || !(e > 0.0) || !std::isfinite(fv)) {
      std::ostringstream msg;
      msg << "non-finite coefficient in type 2 problem at mu = " << mu;
      throw NumericError(msg.str());
    }
    const double q = (1.0 - mu) * (1.0 + mu);
    w_dd(i) = w * q;
    w_dv(i) = -w * weight.log_slope(mu) * q;
    rhs += (w * fv / e) * b.p.row(i).transpose();
    mean_f += w * fv;
    abs_f += w * std::abs(fv);
  }
  if (std::abs(mean_f) > kSolvabilityTolerance * std::max(1.0, abs_f)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "type 2 data must have zero mean; int f dmu = " << mean_f;
    throw PreconditionError(msg.str());
  }

  const Eigen::MatrixXd k = b.dp.transpose() * w_dd.asDiagonal() * b.dp + b.p.transpose() * w_dv.asDiagonal() * b.dp;

  SolveDiagnostics diag;
  diag.null_space_defect = k.col(0).cwiseAbs().maxCoeff();

  // Bordered system: the constraint int g dmu = 2 u_0 = 0 and its multiplier.
  // The multiplier also absorbs the (truncation-level) inconsistency of the
  // row tested against constants.
  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 2, n + 2);
  bordered.topLeftCorner(n + 1, n + 1) = k;
  bordered(0, n + 1) = 2.0;
  bordered(n + 1, 0) = 2.0;
  Eigen::VectorXd brhs = Eigen::VectorXd::Zero(n + 2);
  brhs.head(n + 1) = rhs;
  const Eigen::VectorXd y = solve_scaled(bordered, brhs, "type 2", diag);
  const Eigen::VectorXd coeffs = y.head(n + 1);
  diag.galerkin_defect = relative_defect((k * coeffs - rhs).tail(n), rhs.tail(n));

  MuProfile g(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()), 0.0, rule);
  diag.residual = strong_residual(*rule, weight, f, [&](double mu) { return apply_type2(weight, g, mu); });
  return {std::move(g), diag};
}

EllipticSolution solve_type2(const CollisionKernel& kernel, const MuFunction& f, int n, RuleRef rule) {
  return solve_type2(OperatorWeight::boltzmann(kernel), f, n, std::move(rule));
}

namespace {

FormSpectrum spectrum_of(const Eigen::MatrixXd& a, Eigen::Index skip) {
  FormSpectrum out;
  const double amax = a.cwiseAbs().maxCoeff();
  out.symmetry_defect = amax > 0.0 ? (a - a.transpose()).cwiseAbs().maxCoeff() / amax : 0.0;
  const Eigen::Index n = a.rows() - skip;
  const Eigen::MatrixXd sub = a.bottomRightCorner(n, n);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = sub(i, i) > 0.0 ? 1.0 / std::sqrt(sub(i, i)) : 1.0;
  const Eigen::MatrixXd scaled = s.asDiagonal() * sub * s.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (scaled + scaled.transpose()),
                                                           Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues()(0);
  out.max_eigenvalue = eig.eigenvalues()(n - 1);
  return out;
}

}  // namespace

FormSpectrum type1_form_spectrum(const OperatorWeight& weight, const MuFunction& alpha, int n, double exponent,
                                 RuleRef rule) {
  rule = resolve_rule(std::move(rule), n);
  const auto m = static_cast<Eigen::Index>(rule->size());
  const Basis b = tabulate(*rule, n);
  const double s = exponent;
  Eigen::MatrixXd grad(m, n + 1);
  Eigen::VectorXd wd(m), wa(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = rule->nodes()[static_cast<std::size_t>(i)];
    const double w = rule->weights()[static_cast<std::size_t>(i)];
    const double q_pow = endpoint_factor(mu, 2.0 * s - 1.0);
    grad.row(i) = -2.0 * s * mu * b.p.row(i) + (1.0 - mu) * (1.0 + mu) * b.dp.row(i);
    wd(i) = w * weight.value(mu) * q_pow;
    wa(i) = w * alpha(mu) * q_pow;
  }
  const Eigen::MatrixXd a = grad.transpose() * wd.asDiagonal() * grad + b.p.transpose() * wa.asDiagonal() * b.p;
  return spectrum_of(a, 0);
}

FormSpectrum type2_form_spectrum(const OperatorWeight& weight, int n, RuleRef rule) {
  rule = resolve_rule(std::move(rule), n);
  const auto m = static_cast<Eigen::Index>(rule->size());
  const Basis b = tabulate(*rule, n);
  Eigen::VectorXd wd(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = rule->nodes()[static_cast<std::size_t>(i)];
    wd(i) = rule->weights()[static_cast<std::size_t>(i)] * weight.value(mu) * (1.0 - mu) * (1.0 + mu);
  }
  const Eigen::MatrixXd k = b.dp.transpose() * wd.asDiagonal() * b.dp;
  FormSpectrum out = spectrum_of(k, 1);
  out.null_space_defect = std::max(k.row(0).cwiseAbs().maxCoeff(), k.col(0).cwiseAbs().maxCoeff());
  return out;
}

GciSolution solve_gci(const CollisionKernel& kernel, int n, RuleRef rule) {
  const OperatorWeight weight = OperatorWeight::boltzmann(kernel);
  const auto& e = weight.value;
  // alpha = E is bounded below by E(-1) since sigma increases.
  const double alpha0 = 0.5 * e(-1.0);
  auto sol = solve_type1(
      weight, e, alpha0,
      [&e](double mu) {
        const double q = (1.0 - mu) * (1.0 + mu);
        return -q * std::sqrt(q) * e(mu);
      },
      n, 0.5, std::move(rule));
  MuProfile h = sol.profile.with_exponent(0.0);
  MuProfile h_prime = h.derivative();
  return {std::move(sol.profile), std::move(h), std::move(h_prime), sol.diagnostics};
}

}  // namespace flock
