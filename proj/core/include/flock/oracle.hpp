#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flock/coeffs.hpp"
#include "flock/elliptic.hpp"
#include "flock/kernel.hpp"
#include "flock/profile.hpp"

// Brute-force references for the spectral pipeline: azimuthal-mode operator
// application, a dense finite-difference solver, sphere quadrature of the GCI
// property, and the verification suite built on them.
namespace flock::oracle {

/// Cell-centred grid on (-1, 1): mu_j = -1 + (j + 1/2) h, h = 2 / m.
struct DenseGrid1D {
  int m = 0;
  double spacing = 0.0;
  std::vector<double> nodes;

  /// Throws DomainError for m < 1.
  static DenseGrid1D make(int m);
  /// mu at cell face j (j = 0..m), i.e. -1 + j h.
  double face(int j) const noexcept { return -1.0 + j * spacing; }
};

/// -(1/M) L applied to M C(mu) cos(k phi), with L the linearized collision
/// operator on the sphere:
///
///     d / (E (1-mu^2)) [ -(1-mu^2) (E (1-mu^2) C')' + k^2 E C ].
struct ModeOperator {
  CollisionKernel kernel;
  int k = 0;
};

/// Image of c under the mode operator at mu, evaluated from the analytic
/// factored form so that the 1/(1-mu^2) never multiplies a rounding error.
double mode_apply(const ModeOperator& op, const MuProfile& c, double mu);

/// The image as a profile on c's rule. Its endpoint exponent is c.exponent()
/// when k = 2 c.exponent() and c.exponent() - 1 otherwise; a negative exponent
/// with a nonvanishing endpoint value throws NumericError naming the endpoint.
MuProfile mode_apply(const ModeOperator& op, const MuProfile& c);

struct FdOptions {
  /// Type 2: |h sum f| must not exceed this times h sum |f|.
  double solvability_tolerance = 1e-10;
  /// Type 1: discretize u with g = (1-mu^2)^exponent u instead of g itself.
  /// With the exponent matching the endpoint behaviour of g, u is smooth and the
  /// scheme keeps its second order up to the endpoints. 0 or >= 1/2.
  double exponent = 0.0;
};

struct FdSolution {
  DenseGrid1D grid;
  std::vector<double> values;
  /// 1-norm condition estimate of the symmetrically scaled system.
  double condition_estimate = 1.0;
  /// Type 2: lambda in A g + lambda E = f (absorbs any inconsistency of f).
  double multiplier = 0.0;
};

/// Second-order conservative finite differences for
///
///     type 1:  -(1-mu^2) (E (1-mu^2) g')' + alpha g = f,
///     type 2:  -(E (1-mu^2) g')' = f   with   h sum E g = 0,
///
/// the flux weight E (1-mu^2) taken at the faces (it vanishes at mu = +-1, so no
/// boundary condition is imposed). With a type 1 exponent s > 0 the unknown is
/// u = g / (1-mu^2)^s, which satisfies
///
///     -(E w^(2s+1) u')' + [E w^(2s) (4s^2 + 2s + 2s mu E'/E) + w^(2s-1) (alpha - 4s^2 E)] u = w^(s-1) f
///
/// with w = 1-mu^2; values are returned for g. Requires m >= 100. Type 1 needs alpha > 0 at
/// every node (PreconditionError). Type 2 rejects data whose discrete mean
/// exceeds the solvability tolerance (PreconditionError with the mean). A
/// singular system raises SolverError with its condition estimate.
FdSolution fd_solve(const OperatorWeight& weight, int type, std::span<const double> alpha,
                    std::span<const double> f, int m, const FdOptions& options = {});
FdSolution fd_solve(const CollisionKernel& kernel, int type, const MuFunction& alpha, const MuFunction& f, int m,
                    const FdOptions& options = {});

/// ||fd - p|| / ||p|| in the discrete L2 norm on the FD nodes; the absolute
/// difference when p vanishes there.
double relative_l2_difference(const FdSolution& fd, const MuProfile& p);
double relative_l2_difference(const FdSolution& fd, std::span<const double> reference);

/// The six elliptic problems of the pipeline solved with finite differences on
/// one grid, with c1, c2, c3 recomputed from the FD GCI by midpoint sums.
struct FdPipeline {
  DenseGrid1D grid;
  CCoefficients c;
  std::vector<double> g;
  std::vector<double> a_perp_tilde;
  std::vector<double> a_par;
  std::vector<double> b1_tilde;
  std::vector<double> b2;
  std::vector<double> b_par_tilde;
  /// Discrete mean of the b2 data relative to its absolute sum; O(h^2).
  double b2_inconsistency = 0.0;
};

FdPipeline fd_pipeline(const CollisionKernel& kernel, int m);

struct OrthogonalityResult {
  /// Largest |int L(phi) psi_i dω| over the two GCI components.
  double value = 0.0;
  /// ||phi|| in L2 of the sphere.
  double trial_norm = 0.0;
};

/// Sphere quadrature (Gauss in mu, trapezoid in phi) of L(phi) against the
/// vector GCI psi = h(mu) O_perp omega, for phi = M C(mu) cos(k phi). For k = 1
/// the trial is first projected so that its flux is parallel to Omega.
OrthogonalityResult gci_orthogonality(const CollisionKernel& kernel, const GciSolution& gci, const MuProfile& trial,
                                      int k);

/// Discrete solvability for a k = 1 right-hand side: d int f g / (1-mu^2) dmu,
/// relative to the integral of its absolute value. Zero exactly when the
/// solution of the mode problem has flux parallel to Omega.
double flux_alignment_defect(const Discretization& disc, const GciSolution& gci, const MuFunction& f);

/// Coefficient tables recomputed from the stored brackets alone, without the
/// library's assembly routine.
struct ZetaTables {
  std::array<double, 7> lambda_prime{};
  Slots lambda_second{};
  Slots eta_prime{};
  Slots xi_slots{};
  Slots zeta{};
};
ZetaTables reassemble(const HydroCoefficients& h);

struct Check {
  std::string name;
  /// "trivial", "derived" or "analytic".
  std::string tier;
  double tolerance = 0.0;
  double measured = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::string kernel = "const:1";
  double d = 1.0;
  double kappa = 0.1;
  int n = 64;
  int m = 20000;
  bool quick = false;
  /// Test hook: "zeta-sign" flips a sign inside the zeta assembly.
  std::optional<std::string> inject_fault;
  std::uint64_t seed = 1;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool passed() const;
  std::string to_json() const;
};

/// The full suite (or only the trivial tier with quick = true).
VerifyReport run_verification(const VerifyOptions& options);

/// Checks that need nothing but a coefficient table, e.g. one read back from a
/// JSON dump. run_verification includes exactly these checks as well.
std::vector<Check> verify_coefficient_table(const HydroCoefficients& h);

}  // namespace flock::oracle
