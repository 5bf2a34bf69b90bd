#pragma once

#include <functional>

#include "flock/kernel.hpp"
#include "flock/profile.hpp"

namespace flock {

using MuFunction = std::function<double(double)>;

/// The weight E(mu) multiplying the diffusion term of both degenerate operators,
/// with its logarithmic slope E'/E (needed for strong-form residuals).
///
/// For a collision kernel E = exp((sigma - sigma(1)) / d): the same scaled
/// Boltzmann factor as VonMisesEquilibrium, so callers building alpha and f
/// from it stay consistent with every bracket average.
struct OperatorWeight {
  MuFunction value;
  MuFunction log_slope;

  static OperatorWeight boltzmann(const CollisionKernel& kernel);
  /// E == 1, i.e. sigma == 0 (the pure Legendre operator).
  static OperatorWeight unit();
};

struct SolveDiagnostics {
  /// max |(L g - f) / E| / max |f / E| over the rule nodes (absolute if f == 0).
  double residual = 0.0;
  /// 1-norm condition estimate of the equilibrated system.
  double condition_estimate = 1.0;
  /// max_i |a(g, phi_i) - l(phi_i)| / max_i |l(phi_i)| from the assembled system.
  double galerkin_defect = 0.0;
  /// Type 2 only: largest entry of the stiffness column belonging to constants.
  double null_space_defect = 0.0;
};

struct EllipticSolution {
  MuProfile profile;
  SolveDiagnostics diagnostics;
};

/// Gauss rule used for assembly at polynomial degree n.
RuleRef default_rule(int n);

/// Type 1:  -(1-mu^2) (E (1-mu^2) g')' + alpha g = f  on (-1, 1), no boundary
/// conditions. The equation is divided by E and tested against the basis in the
/// unweighted L2 pairing; this keeps the system well conditioned when E spans
/// many decades (small d). The solution is sought as g = (1-mu^2)^exponent * u with u a
/// Legendre series of degree n; the exponent should match the endpoint
/// behaviour of g (1/2 for alpha = E, 1 for alpha = 4E).
///
/// alpha must satisfy alpha >= alpha0 > 0 at every node. Throws
/// PreconditionError otherwise and SolverError if the discrete system is
/// numerically singular.
EllipticSolution solve_type1(const OperatorWeight& weight, const MuFunction& alpha, double alpha0,
                             const MuFunction& f, int n, double exponent = 0.5, RuleRef rule = nullptr);
EllipticSolution solve_type1(const CollisionKernel& kernel, const MuFunction& alpha, double alpha0,
                             const MuFunction& f, int n, double exponent = 0.5, RuleRef rule = nullptr);

/// Type 2:  -(E (1-mu^2) g')' = f, with int f = 0. Returns the solution with
/// int g dmu = 0 (the constraint enters as a bordered row and column).
/// Throws PreconditionError with the value of int f when it is not zero.
EllipticSolution solve_type2(const OperatorWeight& weight, const MuFunction& f, int n, RuleRef rule = nullptr);
EllipticSolution solve_type2(const CollisionKernel& kernel, const MuFunction& f, int n, RuleRef rule = nullptr);

struct GciSolution {
  /// g = sqrt(1-mu^2) h, the azimuthal profile of the GCI.
  MuProfile g;
  /// h = g / sqrt(1-mu^2), nonpositive.
  MuProfile h;
  MuProfile h_prime;
  SolveDiagnostics diagnostics;
};

/// -(1-mu^2)(E(1-mu^2)g')' + E g = -(1-mu^2)^(3/2) E, E the scaled Boltzmann factor.
GciSolution solve_gci(const CollisionKernel& kernel, int n, RuleRef rule = nullptr);

/// Spectrum of the symmetric E-weighted bilinear form of a problem after Jacobi
/// scaling. Type 1: a(g, v) = int E (1-mu^2) g'v' + int alpha g v / (1-mu^2).
/// Type 2: the stiffness int E (1-mu^2) g'v', restricted to zero-mean modes.
struct FormSpectrum {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  /// max |a_ij - a_ji| relative to max |a_ij|.
  double symmetry_defect = 0.0;
  /// Type 2: largest entry of the row and column belonging to constants.
  double null_space_defect = 0.0;
};

FormSpectrum type1_form_spectrum(const OperatorWeight& weight, const MuFunction& alpha, int n,
                                 double exponent = 0.5, RuleRef rule = nullptr);
FormSpectrum type2_form_spectrum(const OperatorWeight& weight, int n, RuleRef rule = nullptr);

/// Strong-form type 1 operator applied to a profile (any exponent), at mu.
double apply_type1(const OperatorWeight& weight, const MuFunction& alpha, const MuProfile& g, double mu);
/// Strong-form type 2 operator applied to a profile with exponent 0, at mu.
double apply_type2(const OperatorWeight& weight, const MuProfile& g, double mu);

}  // namespace flock
