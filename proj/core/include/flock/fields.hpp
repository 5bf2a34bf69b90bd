#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flock {

using Vec3 = std::array<double, 3>;
/// Row-major 3x3 matrix, m[j][k].
using Mat3 = std::array<Vec3, 3>;

/// Uniform periodic Cartesian lattice; cell (i, j, k) sits at origin + (i hx, j hy, k hz).
/// Extents of 1 are allowed and make the field constant along that axis.
struct Grid {
  std::array<int, 3> extent{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(extent[0]) * static_cast<std::size_t>(extent[1]) *
           static_cast<std::size_t>(extent[2]);
  }
  std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(extent[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(extent[0]) +
           static_cast<std::size_t>(i);
  }
  Vec3 position(std::size_t idx) const noexcept;
  bool operator==(const Grid&) const = default;

  /// n^3 (or n along the listed axes, 1 elsewhere) cells covering [0, 2 pi).
  static Grid periodic_cube(int n, std::array<bool, 3> active = {true, true, true});
};

/// Density and unit orientation per cell. Construction validates |Omega| = 1 to
/// 1e-10 and rho >= 0 (StateError naming the cell).
class FieldState {
 public:
  FieldState(Grid grid, std::vector<double> rho, std::vector<Vec3> omega);

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<double>& rho() const noexcept { return rho_; }
  const std::vector<Vec3>& omega() const noexcept { return omega_; }

 private:
  Grid grid_;
  std::vector<double> rho_;
  std::vector<Vec3> omega_;
};

struct GradientBundle {
  Grid grid;
  int order = 2;
  std::vector<Vec3> grad_rho;       // raw FD gradient
  std::vector<Mat3> grad_omega;     // raw FD, (grad Omega)_{jk} = d_j Omega_k
  std::vector<Vec3> grad_perp_rho;  // O_perp grad rho
  std::vector<double> par_grad_rho;  // Omega . grad rho
  std::vector<Vec3> omega_tilt;     // O_perp (Omega . grad) Omega
  std::vector<double> div_omega;    // Tr of the perp-perp block
  std::vector<Mat3> sigma_omega;    // symmetric, traceless, perp-perp
  std::vector<Mat3> gamma_omega;    // antisymmetric, perp-perp
};

struct CorrectionFields {
  std::vector<double> r1;
  std::vector<Vec3> r2;
};

// Small dense helpers used by the field algebra and its tests.
double dot(const Vec3& a, const Vec3& b) noexcept;
Vec3 cross(const Vec3& a, const Vec3& b) noexcept;
double norm(const Vec3& a) noexcept;
Vec3 mat_vec(const Mat3& m, const Vec3& v) noexcept;
/// O_perp v = v - (Omega . v) Omega.
Vec3 project_perp(const Vec3& omega, const Vec3& v) noexcept;
/// O_perp m O_perp.
Mat3 project_perp(const Vec3& omega, const Mat3& m) noexcept;

/// Centred periodic finite differences of order 2 or 4 along each axis.
/// Throws PreconditionError for other orders and StateError if an axis with
/// extent > 1 is too short for the stencil.
std::vector<Vec3> gradient(const Grid& grid, const std::vector<double>& f, int order);
std::vector<Mat3> gradient(const Grid& grid, const std::vector<Vec3>& f, int order);
/// (div m)_k = sum_j d_j m_{jk}.
std::vector<Vec3> divergence(const Grid& grid, const std::vector<Mat3>& m, int order);
std::vector<double> divergence(const Grid& grid, const std::vector<Vec3>& v, int order);

GradientBundle decompose_gradients(const FieldState& state, int order);

/// R1 = beta div((Omega . grad rho) Omega) + gamma div(rho (div Omega) Omega).
std::vector<double> evaluate_r1(const FieldState& state, const GradientBundle& bundle, double beta, double gamma,
                                int order);

enum class TermKind { quadratic, derivative };

struct R2Term {
  int slot;  // zeta index, 1-based
  TermKind kind;
  std::string_view name;
};

/// The thirteen tensor structures of R2, in zeta order.
const std::array<R2Term, 13>& r2_terms();
std::size_t count_terms(TermKind kind);

/// The structure multiplying zeta_slot (1-based), per cell. Slot 7 divides by rho
/// and throws StateError at cells with rho = 0.
std::vector<Vec3> r2_term(const FieldState& state, const GradientBundle& bundle, int slot, int order);

/// R2 = sum_j zeta_j T_j; slots with zeta_j = 0 are skipped.
std::vector<Vec3> evaluate_r2(const FieldState& state, const GradientBundle& bundle,
                              const std::array<double, 13>& zeta, int order);

CorrectionFields evaluate_corrections(const FieldState& state, double beta, double gamma,
                                      const std::array<double, 13>& zeta, int order);

/// Closed-form test field with analytic derivatives.
struct AnalyticField {
  std::string name;
  std::function<double(const Vec3&)> rho;
  std::function<Vec3(const Vec3&)> omega;
  std::function<Vec3(const Vec3&)> grad_rho;
  /// (grad Omega)_{jk} = d_j Omega_k.
  std::function<Mat3(const Vec3&)> grad_omega;
};

/// Omega == z, rho == 1.
AnalyticField uniform_field();
/// Omega == z, rho = 2 + sin z.
AnalyticField axial_sine_field();
/// rho == 1, Omega = (sin a(z), 0, cos a(z)) with a(z) = amplitude sin z.
AnalyticField tilt_field(double amplitude = 0.5);
/// Omega == z, rho = 2 + sin x sin z.
AnalyticField separable_field();
/// Omega = v / |v| and rho = 2 + ... built from a few random integer Fourier modes.
AnalyticField random_field(std::uint64_t seed, int modes = 3, double amplitude = 0.6);
/// "uniform", "axial-sine", "tilt", "separable", "random" (seeded). ConfigError otherwise.
AnalyticField named_field(const std::string& name, std::uint64_t seed = 1);

FieldState sample(const AnalyticField& field, const Grid& grid);

// Field files. CSV header x,y,z,rho,ox,oy,oz; cells may come in any order but
// must form a complete uniform lattice. Binary: "FLKF" magic, version, extents,
// spacing, origin, then (rho, ox, oy, oz) per cell in index order.
FieldState read_field_csv(std::istream& in);
void write_field_csv(std::ostream& out, const FieldState& state);
FieldState read_field_binary(std::istream& in);
void write_field_binary(std::ostream& out, const FieldState& state);
FieldState read_field_file(const std::string& path);

/// x,y,z,r1,r2x,r2y,r2z and, with epsilon, eps_r1,eps_r2x,eps_r2y,eps_r2z.
void write_corrections_csv(std::ostream& out, const Grid& grid, const CorrectionFields& fields,
                           std::optional<double> epsilon = std::nullopt);

}  // namespace flock
