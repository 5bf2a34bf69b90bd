#include "flock/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "format.hpp"
#include "flock/error.hpp"

namespace flock {

namespace {

constexpr double kUnitTolerance = 1e-10;

std::string cell_name(const Grid& grid, std::size_t idx) {
  const auto nx = static_cast<std::size_t>(grid.extent[0]);
  const auto ny = static_cast<std::size_t>(grid.extent[1]);
  std::ostringstream s;
  s << "cell " << idx << " (i=" << idx % nx << ", j=" << (idx / nx) % ny << ", k=" << idx / (nx * ny) << ")";
  return s.str();
}

void check_order(const Grid& grid, int order) {
  if (order != 2 && order != 4) throw PreconditionError("scheme order must be 2 or 4, got " + std::to_string(order));
  for (int a = 0; a < 3; ++a) {
    const int n = grid.extent[static_cast<std::size_t>(a)];
    if (n != 1 && n < order + 1) {
      throw StateError("axis " + std::to_string(a) + " has " + std::to_string(n) +
                       " cells, too few for an order " + std::to_string(order) + " stencil");
    }
  }
}

// Derivative along one axis of a field given by an accessor, written to out.
template <class Get, class Put>
void differentiate(const Grid& grid, int axis, int order, Get&& get, Put&& put) {
  const auto ax = static_cast<std::size_t>(axis);
  const int n = grid.extent[ax];
  const double h = grid.spacing[ax];
  for (int k = 0; k < grid.extent[2]; ++k) {
    for (int j = 0; j < grid.extent[1]; ++j) {
      for (int i = 0; i < grid.extent[0]; ++i) {
        std::array<int, 3> c{i, j, k};
        const std::size_t idx = grid.index(i, j, k);
        if (n == 1) {
          put(idx, 0.0);
          continue;
        }
        auto at = [&](int offset) {
          auto p = c;
          p[ax] = ((p[ax] + offset) % n + n) % n;
          return get(grid.index(p[0], p[1], p[2]));
        };
        double v;
        if (order == 2) {
          v = (at(1) - at(-1)) / (2.0 * h);
        } else {
          v = (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h);
        }
        put(idx, v);
      }
    }
  }
}

Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

Mat3 transpose(const Mat3& m) {
  Mat3 t{};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) t[j][k] = m[k][j];
  return t;
}

// (Omega . grad) v from the gradient G_{jk} = d_j v_k.
Vec3 directional(const Vec3& omega, const Mat3& g) {
  Vec3 out{};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 3; ++j) out[k] += omega[j] * g[j][k];
  return out;
}

}  // namespace

Vec3 Grid::position(std::size_t idx) const noexcept {
  const auto nx = static_cast<std::size_t>(extent[0]);
  const auto ny = static_cast<std::size_t>(extent[1]);
  const double i = static_cast<double>(idx % nx);
  const double j = static_cast<double>((idx / nx) % ny);
  const double k = static_cast<double>(idx / (nx * ny));
  return {origin[0] + i * spacing[0], origin[1] + j * spacing[1], origin[2] + k * spacing[2]};
}

Grid Grid::periodic_cube(int n, std::array<bool, 3> active) {
  if (n < 1) throw DomainError("grid size must be positive");
  Grid g;
  for (std::size_t a = 0; a < 3; ++a) {
    g.extent[a] = active[a] ? n : 1;
    g.spacing[a] = active[a] ? 2.0 * std::numbers::pi / n : 1.0;
  }
  return g;
}

FieldState::FieldState(Grid grid, std::vector<double> rho, std::vector<Vec3> omega)
    : grid_(grid), rho_(std::move(rho)), omega_(std::move(omega)) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (grid_.extent[a] < 1) throw StateError("grid extents must be positive");
    if (!(grid_.spacing[a] > 0.0)) throw StateError("grid spacing must be positive");
  }
  if (rho_.size() != grid_.size() || omega_.size() != grid_.size()) {
    throw StateError("field arrays do not match the grid: " + std::to_string(rho_.size()) + " densities, " +
                     std::to_string(omega_.size()) + " orientations, " + std::to_string(grid_.size()) + " cells");
  }
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    if (!(rho_[i] >= 0.0) || !std::isfinite(rho_[i])) {
      throw StateError("density must be finite and >= 0 at " + cell_name(grid_, i) + ", got " +
                       std::to_string(rho_[i]));
    }
    const double len = norm(omega_[i]);
    if (!(std::abs(len - 1.0) < kUnitTolerance)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "orientation is not a unit vector at " << cell_name(grid_, i) << ": |Omega| = " << len;
      throw StateError(msg.str());
    }
  }
}

double dot(const Vec3& a, const Vec3& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

Vec3 mat_vec(const Mat3& m, const Vec3& v) noexcept {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

Vec3 project_perp(const Vec3& omega, const Vec3& v) noexcept {
  const double p = dot(omega, v);
  return {v[0] - p * omega[0], v[1] - p * omega[1], v[2] - p * omega[2]};
}

Mat3 project_perp(const Vec3& omega, const Mat3& m) noexcept {
  Mat3 p{};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) p[j][k] = (j == k ? 1.0 : 0.0) - omega[j] * omega[k];
  Mat3 tmp{};
  Mat3 out{};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t l = 0; l < 3; ++l) tmp[j][k] += p[j][l] * m[l][k];
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t l = 0; l < 3; ++l) out[j][k] += tmp[j][l] * p[l][k];
  return out;
}

std::vector<Vec3> gradient(const Grid& grid, const std::vector<double>& f, int order) {
  check_order(grid, order);
  if (f.size() != grid.size()) throw StateError("scalar field does not match the grid");
  std::vector<Vec3> g(grid.size());
  for (int a = 0; a < 3; ++a) {
    const auto ax = static_cast<std::size_t>(a);
    differentiate(
        grid, a, order, [&](std::size_t i) { return f[i]; }, [&](std::size_t i, double v) { g[i][ax] = v; });
  }
  return g;
}

std::vector<Mat3> gradient(const Grid& grid, const std::vector<Vec3>& f, int order) {
  check_order(grid, order);
  if (f.size() != grid.size()) throw StateError("vector field does not match the grid");
  std::vector<Mat3> g(grid.size());
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t c = 0; c < 3; ++c) {
      differentiate(
          grid, static_cast<int>(a), order, [&](std::size_t i) { return f[i][c]; },
          [&](std::size_t i, double v) { g[i][a][c] = v; });
    }
  }
  return g;
}

std::vector<Vec3> divergence(const Grid& grid, const std::vector<Mat3>& m, int order) {
  check_order(grid, order);
  if (m.size() != grid.size()) throw StateError("tensor field does not match the grid");
  std::vector<Vec3> out(grid.size(), Vec3{0.0, 0.0, 0.0});
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 3; ++k) {
      differentiate(
          grid, static_cast<int>(j), order, [&](std::size_t i) { return m[i][j][k]; },
          [&](std::size_t i, double v) { out[i][k] += v; });
    }
  }
  return out;
}

std::vector<double> divergence(const Grid& grid, const std::vector<Vec3>& v, int order) {
  check_order(grid, order);
  if (v.size() != grid.size()) throw StateError("vector field does not match the grid");
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    differentiate(
        grid, static_cast<int>(j), order, [&](std::size_t i) { return v[i][j]; },
        [&](std::size_t i, double d) { out[i] += d; });
  }
  return out;
}

GradientBundle decompose_gradients(const FieldState& state, int order) {
  const Grid& grid = state.grid();
  GradientBundle b;
  b.grid = grid;
  b.order = order;
  b.grad_rho = gradient(grid, state.rho(), order);
  b.grad_omega = gradient(grid, state.omega(), order);
  const std::size_t n = grid.size();
  b.grad_perp_rho.resize(n);
  b.par_grad_rho.resize(n);
  b.omega_tilt.resize(n);
  b.div_omega.resize(n);
  b.sigma_omega.resize(n);
  b.gamma_omega.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& om = state.omega()[i];
    b.par_grad_rho[i] = dot(om, b.grad_rho[i]);
    b.grad_perp_rho[i] = project_perp(om, b.grad_rho[i]);
    b.omega_tilt[i] = project_perp(om, directional(om, b.grad_omega[i]));
    const Mat3 pp = project_perp(om, b.grad_omega[i]);
    const double div = pp[0][0] + pp[1][1] + pp[2][2];
    b.div_omega[i] = div;
    const Mat3 pt = transpose(pp);
    Mat3 s{};
    Mat3 g{};
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        const double perp = (j == k ? 1.0 : 0.0) - om[j] * om[k];
        s[j][k] = pp[j][k] + pt[j][k] - div * perp;
        g[j][k] = pp[j][k] - pt[j][k];
      }
    }
    b.sigma_omega[i] = s;
    b.gamma_omega[i] = g;
  }
  return b;
}

std::vector<double> evaluate_r1(const FieldState& state, const GradientBundle& bundle, double beta, double gamma,
                                int order) {
  const Grid& grid = state.grid();
  if (!(bundle.grid == grid) || bundle.div_omega.size() != grid.size()) {
    throw StateError("gradient bundle does not match the field grid");
  }
  std::vector<Vec3> flux(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = beta * bundle.par_grad_rho[i] + gamma * state.rho()[i] * bundle.div_omega[i];
    flux[i] = scale(state.omega()[i], w);
  }
  return divergence(grid, flux, order);
}

const std::array<R2Term, 13>& r2_terms() {
  static const std::array<R2Term, 13> terms{{
      {1, TermKind::quadratic, "(div Omega) grad_perp rho"},
      {2, TermKind::derivative, "rho grad_perp (div Omega)"},
      {3, TermKind::quadratic, "sigma(Omega) grad_perp rho"},
      {4, TermKind::quadratic, "Gamma(Omega) grad_perp rho"},
      {5, TermKind::derivative, "O_perp (Omega . grad) grad_perp rho"},
      {6, TermKind::quadratic, "(Omega . grad rho) (Omega . grad) Omega"},
      {7, TermKind::quadratic, "(1/rho) (Omega . grad rho) grad_perp rho"},
      {8, TermKind::quadratic, "rho (div Omega) (Omega . grad) Omega"},
      {9, TermKind::quadratic, "rho sigma(Omega) (Omega . grad) Omega"},
      {10, TermKind::quadratic, "rho Gamma(Omega) (Omega . grad) Omega"},
      {11, TermKind::derivative, "rho O_perp (Omega . grad) (Omega . grad) Omega"},
      {12, TermKind::derivative, "rho O_perp div sigma(Omega)"},
      {13, TermKind::derivative, "rho O_perp div Gamma(Omega)"},
  }};
  return terms;
}

std::size_t count_terms(TermKind kind) {
  const auto& t = r2_terms();
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [kind](const R2Term& r) { return r.kind == kind; }));
}

std::vector<Vec3> r2_term(const FieldState& state, const GradientBundle& b, int slot, int order) {
  const Grid& grid = state.grid();
  if (!(b.grid == grid) || b.div_omega.size() != grid.size()) {
    throw StateError("gradient bundle does not match the field grid");
  }
  const auto& rho = state.rho();
  const auto& om = state.omega();
  const std::size_t n = grid.size();
  std::vector<Vec3> out(n);
  switch (slot) {
    case 1:
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(b.grad_perp_rho[i], b.div_omega[i]);
      break;
    case 2: {
      const auto gd = gradient(grid, b.div_omega, order);
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(project_perp(om[i], gd[i]), rho[i]);
      break;
    }
    case 3:
      for (std::size_t i = 0; i < n; ++i) out[i] = mat_vec(b.sigma_omega[i], b.grad_perp_rho[i]);
      break;
    case 4:
      for (std::size_t i = 0; i < n; ++i) out[i] = mat_vec(b.gamma_omega[i], b.grad_perp_rho[i]);
      break;
    case 5: {
      const auto g = gradient(grid, b.grad_perp_rho, order);
      for (std::size_t i = 0; i < n; ++i) out[i] = project_perp(om[i], directional(om[i], g[i]));
      break;
    }
    case 6:
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(b.omega_tilt[i], b.par_grad_rho[i]);
      break;
    case 7:
      for (std::size_t i = 0; i < n; ++i) {
        if (rho[i] == 0.0) {
          throw StateError("the (1/rho) term is undefined at " + cell_name(grid, i) + " where rho = 0");
        }
        out[i] = scale(b.grad_perp_rho[i], b.par_grad_rho[i] / rho[i]);
      }
      break;
    case 8:
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(b.omega_tilt[i], rho[i] * b.div_omega[i]);
      break;
    case 9:
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(mat_vec(b.sigma_omega[i], b.omega_tilt[i]), rho[i]);
      break;
    case 10:
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(mat_vec(b.gamma_omega[i], b.omega_tilt[i]), rho[i]);
      break;
    case 11: {
      const auto g = gradient(grid, b.omega_tilt, order);
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(project_perp(om[i], directional(om[i], g[i])), rho[i]);
      break;
    }
    case 12: {
      const auto dv = divergence(grid, b.sigma_omega, order);
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(project_perp(om[i], dv[i]), rho[i]);
      break;
    }
    case 13: {
      const auto dv = divergence(grid, b.gamma_omega, order);
      for (std::size_t i = 0; i < n; ++i) out[i] = scale(project_perp(om[i], dv[i]), rho[i]);
      break;
    }
    default:
      throw DomainError("R2 slot must be in 1..13, got " + std::to_string(slot));
  }
  return out;
}

std::vector<Vec3> evaluate_r2(const FieldState& state, const GradientBundle& bundle,
                              const std::array<double, 13>& zeta, int order) {
  std::vector<Vec3> r2(state.grid().size(), Vec3{0.0, 0.0, 0.0});
  for (const auto& term : r2_terms()) {
    const double z = zeta[static_cast<std::size_t>(term.slot - 1)];
    if (z == 0.0) continue;
    const auto t = r2_term(state, bundle, term.slot, order);
    for (std::size_t i = 0; i < r2.size(); ++i) r2[i] = add(r2[i], scale(t[i], z));
  }
  return r2;
}

CorrectionFields evaluate_corrections(const FieldState& state, double beta, double gamma,
                                      const std::array<double, 13>& zeta, int order) {
  const GradientBundle b = decompose_gradients(state, order);
  return {evaluate_r1(state, b, beta, gamma, order), evaluate_r2(state, b, zeta, order)};
}

// Analytic fields -----------------------------------------------------------

AnalyticField uniform_field() {
  return {"uniform", [](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; },
          [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; }, [](const Vec3&) { return Mat3{}; }};
}

AnalyticField axial_sine_field() {
  return {"axial-sine", [](const Vec3& x) { return 2.0 + std::sin(x[2]); },
          [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; },
          [](const Vec3& x) { return Vec3{0.0, 0.0, std::cos(x[2])}; }, [](const Vec3&) { return Mat3{}; }};
}

AnalyticField tilt_field(double amplitude) {
  return {"tilt", [](const Vec3&) { return 1.0; },
          [amplitude](const Vec3& x) {
            const double a = amplitude * std::sin(x[2]);
            return Vec3{std::sin(a), 0.0, std::cos(a)};
          },
          [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; },
          [amplitude](const Vec3& x) {
            const double a = amplitude * std::sin(x[2]);
            const double da = amplitude * std::cos(x[2]);
            Mat3 g{};
            g[2][0] = std::cos(a) * da;
            g[2][2] = -std::sin(a) * da;
            return g;
          }};
}

AnalyticField separable_field() {
  return {"separable", [](const Vec3& x) { return 2.0 + std::sin(x[0]) * std::sin(x[2]); },
          [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; },
          [](const Vec3& x) {
            return Vec3{std::cos(x[0]) * std::sin(x[2]), 0.0, std::sin(x[0]) * std::cos(x[2])};
          },
          [](const Vec3&) { return Mat3{}; }};
}

AnalyticField random_field(std::uint64_t seed, int modes, double amplitude) {
  struct Mode {
    Vec3 k;
    double phase;
    Vec3 a;
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wave(-2, 2);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  auto draw_k = [&] {
    Vec3 k{};
    do {
      k = {double(wave(rng)), double(wave(rng)), double(wave(rng))};
    } while (k[0] == 0.0 && k[1] == 0.0 && k[2] == 0.0);
    return k;
  };
  // |v0| = 1 and sum |a_m| <= amplitude < 1 keep |v| >= 1 - amplitude.
  Vec3 v0{unit(rng), unit(rng), 1.0 + std::abs(unit(rng))};
  v0 = scale(v0, 1.0 / norm(v0));
  std::vector<Mode> vm;
  std::vector<Mode> rm;
  for (int m = 0; m < modes; ++m) {
    Vec3 a{unit(rng), unit(rng), unit(rng)};
    a = scale(a, amplitude / modes / std::max(norm(a), 1e-3));
    vm.push_back({draw_k(), angle(rng), a});
    rm.push_back({draw_k(), angle(rng), {0.8 / modes * unit(rng), 0.0, 0.0}});
  }
  auto v_of = [v0, vm](const Vec3& x) {
    Vec3 v = v0;
    for (const auto& m : vm) v = add(v, scale(m.a, std::cos(dot(m.k, x) + m.phase)));
    return v;
  };
  auto dv_of = [vm](const Vec3& x) {
    Mat3 g{};
    for (const auto& m : vm) {
      const double s = -std::sin(dot(m.k, x) + m.phase);
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) g[j][k] += s * m.k[j] * m.a[k];
    }
    return g;
  };
  AnalyticField f;
  f.name = "random";
  f.rho = [rm](const Vec3& x) {
    double r = 2.0;
    for (const auto& m : rm) r += m.a[0] * std::sin(dot(m.k, x) + m.phase);
    return r;
  };
  f.grad_rho = [rm](const Vec3& x) {
    Vec3 g{};
    for (const auto& m : rm) g = add(g, scale(m.k, m.a[0] * std::cos(dot(m.k, x) + m.phase)));
    return g;
  };
  f.omega = [v_of](const Vec3& x) {
    const Vec3 v = v_of(x);
    return scale(v, 1.0 / norm(v));
  };
  f.grad_omega = [v_of, dv_of](const Vec3& x) {
    const Vec3 v = v_of(x);
    const double len = norm(v);
    const Vec3 om = scale(v, 1.0 / len);
    const Mat3 dv = dv_of(x);
    Mat3 g{};
    // d_j Omega = (d_j v - Omega (Omega . d_j v)) / |v|
    for (std::size_t j = 0; j < 3; ++j) {
      const double p = dot(om, dv[j]);
      for (std::size_t k = 0; k < 3; ++k) g[j][k] = (dv[j][k] - om[k] * p) / len;
    }
    return g;
  };
  return f;
}

AnalyticField named_field(const std::string& name, std::uint64_t seed) {
  if (name == "uniform") return uniform_field();
  if (name == "axial-sine") return axial_sine_field();
  if (name == "tilt") return tilt_field();
  if (name == "separable") return separable_field();
  if (name == "random") return random_field(seed);
  throw ConfigError("unknown field '" + name + "' (expected uniform, axial-sine, tilt, separable or random)");
}

FieldState sample(const AnalyticField& field, const Grid& grid) {
  std::vector<double> rho(grid.size());
  std::vector<Vec3> omega(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.position(i);
    rho[i] = field.rho(x);
    omega[i] = field.omega(x);
  }
  return FieldState(grid, std::move(rho), std::move(omega));
}

// I/O -----------------------------------------------------------------------

namespace {

struct Axis {
  int extent = 1;
  double spacing = 1.0;
  double origin = 0.0;
  std::vector<double> coords;
};

Axis infer_axis(std::vector<double> values, const char* name) {
  std::sort(values.begin(), values.end());
  const double span = values.back() - values.front();
  const double tol = 1e-9 * std::max(1.0, std::abs(span));
  std::vector<double> uniq;
  for (double v : values) {
    if (uniq.empty() || v - uniq.back() > tol) uniq.push_back(v);
  }
  Axis a;
  a.extent = static_cast<int>(uniq.size());
  a.origin = uniq.front();
  a.coords = uniq;
  if (a.extent > 1) {
    a.spacing = span / (a.extent - 1);
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      if (std::abs(uniq[i] - (a.origin + static_cast<double>(i) * a.spacing)) > 1e-6 * a.spacing) {
        throw ConfigError(std::string("field file: ") + name + " coordinates are not uniformly spaced");
      }
    }
  }
  return a;
}

int locate(const Axis& a, double v) {
  if (a.extent == 1) return 0;
  return static_cast<int>(std::lround((v - a.origin) / a.spacing));
}

void expect_header(const std::string& line, const std::vector<std::string>& cols, const char* what) {
  std::stringstream ss(line);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(ss, cell, ',')) {
    cell.erase(std::remove_if(cell.begin(), cell.end(), [](unsigned char c) { return std::isspace(c); }), cell.end());
    if (i >= cols.size() || cell != cols[i]) break;
    ++i;
  }
  if (i != cols.size()) throw ConfigError(std::string(what) + ": unexpected header '" + line + "'");
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("binary field file is truncated");
  return v;
}

constexpr char kMagic[4] = {'F', 'L', 'K', 'F'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

FieldState read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("field file is empty");
  expect_header(line, {"x", "y", "z", "rho", "ox", "oy", "oz"}, "field file");
  std::vector<std::array<double, 7>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::array<double, 7> r{};
    std::string cell;
    for (std::size_t c = 0; c < 7; ++c) {
      if (!std::getline(ss, cell, ',')) {
        throw ConfigError("field file line " + std::to_string(line_no) + ": expected 7 columns");
      }
      try {
        std::size_t used = 0;
        r[c] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError("field file line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw ConfigError("field file has no cells");
  std::array<Axis, 3> axes;
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[a]);
    axes[a] = infer_axis(std::move(v), a == 0 ? "x" : (a == 1 ? "y" : "z"));
  }
  Grid grid;
  for (std::size_t a = 0; a < 3; ++a) {
    grid.extent[a] = axes[a].extent;
    grid.spacing[a] = axes[a].spacing;
    grid.origin[a] = axes[a].origin;
  }
  if (rows.size() != grid.size()) {
    throw ConfigError("field file has " + std::to_string(rows.size()) + " cells but its coordinates span a " +
                      std::to_string(grid.size()) + "-cell lattice");
  }
  std::vector<double> rho(grid.size(), -1.0);
  std::vector<Vec3> omega(grid.size());
  std::vector<bool> seen(grid.size(), false);
  for (const auto& r : rows) {
    const std::size_t idx = grid.index(locate(axes[0], r[0]), locate(axes[1], r[1]), locate(axes[2], r[2]));
    if (seen[idx]) throw ConfigError("field file lists cell " + std::to_string(idx) + " twice");
    seen[idx] = true;
    rho[idx] = r[3];
    omega[idx] = {r[4], r[5], r[6]};
  }
  return FieldState(grid, std::move(rho), std::move(omega));
}

void write_field_csv(std::ostream& out, const FieldState& state) {
  using detail::shortest;
  out << "x,y,z,rho,ox,oy,oz\n";
  const Grid& g = state.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 x = g.position(i);
    const Vec3& o = state.omega()[i];
    out << shortest(x[0]) << ',' << shortest(x[1]) << ',' << shortest(x[2]) << ',' << shortest(state.rho()[i]) << ','
        << shortest(o[0]) << ',' << shortest(o[1]) << ',' << shortest(o[2]) << '\n';
  }
}

FieldState read_field_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a binary field file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw ConfigError("unsupported binary field version " + std::to_string(version));
  Grid g;
  for (auto& e : g.extent) e = get<std::int32_t>(in);
  for (auto& s : g.spacing) s = get<double>(in);
  for (auto& o : g.origin) o = get<double>(in);
  for (int e : g.extent) {
    if (e < 1) throw ConfigError("binary field file has a non-positive extent");
  }
  std::vector<double> rho(g.size());
  std::vector<Vec3> omega(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    rho[i] = get<double>(in);
    for (auto& c : omega[i]) c = get<double>(in);
  }
  return FieldState(g, std::move(rho), std::move(omega));
}

void write_field_binary(std::ostream& out, const FieldState& state) {
  out.write(kMagic, 4);
  put(out, kVersion);
  const Grid& g = state.grid();
  for (int e : g.extent) put(out, static_cast<std::int32_t>(e));
  for (double s : g.spacing) put(out, s);
  for (double o : g.origin) put(out, o);
  for (std::size_t i = 0; i < g.size(); ++i) {
    put(out, state.rho()[i]);
    for (double c : state.omega()[i]) put(out, c);
  }
}

FieldState read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open field file '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, kMagic, 4) == 0) return read_field_binary(in);
  return read_field_csv(in);
}

void write_corrections_csv(std::ostream& out, const Grid& grid, const CorrectionFields& f,
                           std::optional<double> epsilon) {
  using detail::shortest;
  out << "x,y,z,r1,r2x,r2y,r2z";
  if (epsilon) out << ",eps_r1,eps_r2x,eps_r2y,eps_r2z";
  out << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.position(i);
    out << shortest(x[0]) << ',' << shortest(x[1]) << ',' << shortest(x[2]) << ',' << shortest(f.r1[i]);
    for (double v : f.r2[i]) out << ',' << shortest(v);
    if (epsilon) {
      const double e = *epsilon;
      out << ',' << shortest(e * f.r1[i]);
      for (double v : f.r2[i]) out << ',' << shortest(e * v);
    }
    out << '\n';
  }
}

}  // namespace flock
