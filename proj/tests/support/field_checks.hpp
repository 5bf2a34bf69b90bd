#pragma once

// Discrete-vs-analytic comparisons shared by the field tests and the
// acceptance binary. All errors are max norms over the cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "flock/fields.hpp"

namespace flock::gen {

// curl from (grad Omega)_{jk} = d_j Omega_k.
inline Vec3 curl(const Mat3& g) { return {g[1][2] - g[2][1], g[2][0] - g[0][2], g[0][1] - g[1][0]}; }

inline double max_gap(const Vec3& a, const Vec3& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

// Discrete (Omega . grad) Omega against the analytic (curl Omega) x Omega.
inline double tilt_identity_error(const AnalyticField& field, int n, int order = 2) {
  const Grid grid = Grid::periodic_cube(n);
  const FieldState state = sample(field, grid);
  const auto b = decompose_gradients(state, order);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.position(i);
    const Vec3 exact = cross(curl(field.grad_omega(x)), state.omega()[i]);
    err = std::max(err, max_gap(b.omega_tilt[i], exact));
  }
  return err;
}

// Discrete Gamma(Omega) X against ((curl Omega) . Omega) X x Omega. X runs over
// an orthonormal basis of the plane perpendicular to Omega, which covers every
// perpendicular X by linearity.
inline double swirl_identity_error(const AnalyticField& field, int n, int order = 2) {
  const Grid grid = Grid::periodic_cube(n);
  const FieldState state = sample(field, grid);
  const auto b = decompose_gradients(state, order);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3& om = state.omega()[i];
    Vec3 e1 = project_perp(om, std::abs(om[0]) < 0.6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0});
    const double len = norm(e1);
    e1 = {e1[0] / len, e1[1] / len, e1[2] / len};
    const double twist = dot(curl(field.grad_omega(grid.position(i))), om);
    for (const Vec3& x : {e1, cross(om, e1)}) {
      const Vec3 exact = cross(x, om);
      err = std::max(err,
                     max_gap(mat_vec(b.gamma_omega[i], x), {twist * exact[0], twist * exact[1], twist * exact[2]}));
    }
  }
  return err;
}

// R1 on the axial-sine field against -beta sin z, on a line of n cells.
inline double axial_sine_r1_error(int n, double beta, double gamma, int order = 2) {
  const Grid line = Grid::periodic_cube(n, {false, false, true});
  const FieldState state = sample(axial_sine_field(), line);
  const auto r1 = evaluate_r1(state, decompose_gradients(state, order), beta, gamma, order);
  double err = 0.0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    err = std::max(err, std::abs(r1[i] + beta * std::sin(line.position(i)[2])));
  }
  return err;
}

// max |Omega . v| / (|v| + eps max|v|) over the cells.
inline double worst_alignment(const FieldState& state, const std::vector<Vec3>& v) {
  double top = 0.0;
  for (const auto& x : v) top = std::max(top, norm(x));
  const double floor = std::numeric_limits<double>::epsilon() * top + 1e-300;
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    worst = std::max(worst, std::abs(dot(state.omega()[i], v[i])) / (norm(v[i]) + floor));
  }
  return worst;
}

}  // namespace flock::gen
