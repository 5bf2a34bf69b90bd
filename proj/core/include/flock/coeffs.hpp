#pragma once

#include <array>
#include <map>
#include <string>

#include "flock/elliptic.hpp"
#include "flock/kernel.hpp"
#include "flock/profile.hpp"
#include "flock/quad.hpp"

namespace flock {

/// Kernel, degree, assembly rule and equilibrium shared by every stage of the
/// coefficient pipeline. All profiles live on `rule`.
struct Discretization {
  CollisionKernel kernel;
  int n;
  RuleRef rule;
  VonMisesEquilibrium equilibrium;
  OperatorWeight weight;

  /// n >= 8 is required (ConfigError otherwise).
  static Discretization make(const CollisionKernel& kernel, int n);
};

struct CCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// The three integral relations that characterise c1, c2, c3, each normalised
/// by the integral of the magnitude of its terms before cancellation.
struct CRelations {
  double mass = 0.0;
  double flux = 0.0;
  double lambda = 0.0;
};

struct CResult {
  CCoefficients c;
  CRelations relations;
};

/// c1 = <mu>_M, c2 = <mu>_w, c3 = d <1/nu>_w with w = (1-mu^2) nu h M.
CResult compute_c123(const Discretization& disc, const GciSolution& gci);

/// The pseudo-inverse profiles. The *_tilde members are the quantities actually
/// solved for (they carry the endpoint factor); the plain members are the
/// profiles a_perp = a_perp_tilde / sqrt(1-mu^2) etc. used in the brackets.
struct ProfileSet {
  MuProfile a_perp_tilde;
  MuProfile a_perp;
  MuProfile a_par;
  MuProfile b1_tilde;
  MuProfile b1;
  MuProfile b2;
  MuProfile b_par_tilde;
  MuProfile b_par;
  /// Solver diagnostics keyed by profile name.
  std::map<std::string, SolveDiagnostics> diagnostics;
};

/// Right-hand sides of the five profile problems (scaled Boltzmann factor).
struct ProfileData {
  static MuFunction a_perp(const Discretization& disc, const CCoefficients& c);
  static MuFunction a_par(const Discretization& disc, const CCoefficients& c);
  static MuFunction b1(const Discretization& disc);
  static MuFunction b2(const Discretization& disc, const CCoefficients& c, const MuProfile& b1);
  static MuFunction b_par(const Discretization& disc, const CCoefficients& c);
};

/// Throws PreconditionError carrying the offending integral if a type 2
/// problem is not solvable (i.e. c is inconsistent with the kernel).
ProfileSet solve_profiles(const Discretization& disc, const CCoefficients& c);

/// The four zero-mean relations satisfied by the profiles.
struct ProfileRelations {
  double a_perp = 0.0;  // <a_perp sin^2>_M
  double a_par = 0.0;   // <a_par>_M
  double b_perp = 0.0;  // <b1 sin^2 / 2 + b2>_M
  double b_par = 0.0;   // <b_par sin^2>_M
};
ProfileRelations profile_relations(const Discretization& disc, const ProfileSet& profiles);

struct R1Coefficients {
  double beta = 0.0;
  double gamma = 0.0;
  /// beta from the Dirichlet form d int E (1-mu^2) (a_par')^2 / int E.
  double beta_dirichlet = 0.0;
};

/// Throws InvariantError if beta <= 0.
R1Coefficients compute_r1_coeffs(const Discretization& disc, const ProfileSet& profiles);

struct LambdaBrackets {
  double l1_11 = 0.0, l1_12 = 0.0, l2_11 = 0.0, l2_12 = 0.0;
  double l_21 = 0.0, l_22 = 0.0, l_23 = 0.0;
};

struct EtaBrackets {
  double e1_11 = 0.0, e1_12 = 0.0, e1_13 = 0.0, e2_11 = 0.0, e2_12 = 0.0, e4_11 = 0.0, e4_12 = 0.0;
  double e1_21 = 0.0, e1_22 = 0.0, e2_21 = 0.0, e2_22 = 0.0, e2_23 = 0.0;
};

/// xi_p^q; p = 1 are the h' brackets, q = 2 the nu' brackets.
struct XiBrackets {
  double x1_1 = 0.0, x1_2 = 0.0, x2_1 = 0.0, x2_2 = 0.0;
};

using Slots = std::array<double, 13>;

enum class HPrimeMethod { spectral, finite_difference };

struct HydroCoefficients {
  std::string kernel;
  double d = 0.0;
  double kappa = 0.0;
  int n = 0;

  CCoefficients c;
  double beta = 0.0;
  double gamma = 0.0;
  double beta_dirichlet = 0.0;

  LambdaBrackets lambda;
  std::array<double, 7> lambda_prime{};
  /// lambda''_1..13 (entries 12 and 13 are zero).
  Slots lambda_second{};
  EtaBrackets eta;
  /// eta'_1..13 (entries 7, 10 and 13 are zero).
  Slots eta_prime{};
  XiBrackets xi_brackets;
  double xi = 0.0;
  /// xi_1..13 (entries 5, 7, 9 and 10 are zero).
  Slots xi_slots{};

  /// 2d / <sin^2 nu h>_M.
  double prefactor = 0.0;
  Slots zeta{};

  std::map<std::string, double> residuals;

  /// Theorem-form coefficients, 1-based: Q_1..Q_8 and D_1..D_5 at density rho.
  double q(int i, double rho) const;
  double dcoef(int i, double rho) const;
};

/// Bracket tables and zeta assembly. Throws NumericError if the prefactor
/// bracket vanishes.
HydroCoefficients compute_r2_coeffs(const Discretization& disc, const GciSolution& gci, const ProfileSet& profiles,
                                    const CCoefficients& c, double kappa,
                                    HPrimeMethod method = HPrimeMethod::spectral);

/// Deliberate defects for mutation tests of the verification suite.
enum class AssemblyFault { none, zeta_sign };

/// lambda', lambda'', eta', xi_j and zeta from the bracket values alone.
void assemble_zeta(HydroCoefficients& out, AssemblyFault fault = AssemblyFault::none);

/// The whole pipeline: GCI, c, profiles, beta/gamma, zeta.
HydroCoefficients compute_coefficients(const CollisionKernel& kernel, double kappa, int n,
                                       HPrimeMethod method = HPrimeMethod::spectral);

}  // namespace flock
