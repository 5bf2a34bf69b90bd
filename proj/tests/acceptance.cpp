// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "flock/coeffs.hpp"
#include "flock/fields.hpp"
#include "flock/io.hpp"
#include "flock/oracle.hpp"
#include "support/field_checks.hpp"

using namespace flock;

namespace {

const std::vector<double> kSweep = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
constexpr int kN = 64;

struct Verdict {
  bool ok = true;
  std::ostringstream note;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) note << "; failed: ";
      else note << ", ";
      note << what;
      ok = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double langevin(double k) { return 1.0 / std::tanh(k) - 1.0 / k; }

// Every number in a coefficient dump except residuals and n.
void collect(const nlohmann::json& j, std::vector<double>& out) {
  if (j.is_number_float()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& x : j) collect(x, out);
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (k != "residuals" && k != "n") collect(v, out);
  }
}

// 1. beta > 1e-12 for constant nu = 1 over the sweep, < 5 s at n = 64.
void positivity(Verdict& v) {
  const auto start = std::chrono::steady_clock::now();
  double lowest = INFINITY;
  for (double d : kSweep) {
    const double beta = compute_coefficients(CollisionKernel::constant(1.0, d), 0.1, kN).beta;
    lowest = std::min(lowest, beta);
    v.require(beta > 1e-12, "beta at d=" + sci(d));
  }
  const double secs = seconds_since(start);
  v.require(secs < 5.0, "runtime");
  v.note << "min beta " << sci(lowest) << ", " << sci(secs) << " s";
}

// 2. Integral relations for c1..c3 and the profile relations < 1e-9.
void consistency(Verdict& v) {
  double worst = 0.0;
  for (const char* spec : {"const:1", "evenpoly:1,0.5"}) {
    for (double d : kSweep) {
      const auto h = compute_coefficients(parse_kernel_spec(spec, d), 0.1, kN);
      for (const char* key : {"c1_relation", "c2_relation", "c3_relation", "a_perp_mean", "a_par_mean",
                              "b_perp_mean", "b_par_mean"}) {
        const double r = std::abs(h.residuals.at(key));
        worst = std::max(worst, r);
        v.require(r < 1e-9, std::string(key) + " " + spec + " d=" + sci(d));
      }
    }
  }
  v.note << "worst residual " << sci(worst);
}

// 3. Langevin closed form for c1 and c3 = d / nu for constant nu.
void closed_form(Verdict& v) {
  double worst_c1 = 0.0, worst_c3 = 0.0;
  for (double nu : {1.0, 2.0}) {
    for (double d : kSweep) {
      const auto k = CollisionKernel::constant(nu, d);
      const auto disc = Discretization::make(k, kN);
      const auto c = compute_c123(disc, solve_gci(k, kN, disc.rule)).c;
      const double e1 = std::abs(c.c1 - langevin(nu / d));
      const double e3 = std::abs(c.c3 - d / nu);
      worst_c1 = std::max(worst_c1, e1);
      worst_c3 = std::max(worst_c3, e3);
      v.require(e1 < 1e-10, "c1 nu=" + sci(nu) + " d=" + sci(d));
      v.require(e3 < 1e-12, "c3 nu=" + sci(nu) + " d=" + sci(d));
    }
  }
  v.note << "c1 gap " << sci(worst_c1) << ", c3 gap " << sci(worst_c3);
}

// 4. h <= 1e-10 at every node for every registry kernel.
void maximum_principle(Verdict& v) {
  double top = -INFINITY;
  for (double d : kSweep) {
    for (const auto& nk : kernel_registry(d)) {
      const auto gci = solve_gci(nk.kernel, kN);
      const auto& h = gci.h.nodal_values();
      const double m = *std::max_element(h.begin(), h.end());
      top = std::max(top, m);
      v.require(m <= 1e-10, nk.name + " d=" + sci(d));
    }
  }
  v.note << "max h " << sci(top);
}

// 5. FD oracle at m = 20000 and mode-operator substitution.
void oracle_equivalence(Verdict& v) {
  double worst_fd = 0.0, worst_mode = 0.0;
  int compared = 0;
  for (double d : {0.1, 1.0, 5.0}) {
    for (const auto& nk : kernel_registry(d)) {
      oracle::VerifyOptions opt;
      opt.kernel = nk.kernel.spec();
      opt.d = d;
      opt.n = kN;
      opt.m = 20000;
      for (const auto& c : oracle::run_verification(opt).checks) {
        const bool fd = c.name.rfind("fd.agreement_", 0) == 0;
        const bool mode = c.name.rfind("mode.residual_", 0) == 0;
        if (!fd && !mode) continue;
        ++compared;
        (fd ? worst_fd : worst_mode) = std::max(fd ? worst_fd : worst_mode, c.measured);
        v.require(c.measured < (fd ? 1e-4 : 1e-8), c.name + " " + nk.name + " d=" + sci(d));
      }
    }
  }
  v.require(compared == 3 * 4 * 12, "expected 6 FD and 6 mode checks per run");
  v.note << compared << " comparisons, worst FD " << sci(worst_fd) << ", worst mode " << sci(worst_mode);
}

// 6. beta from the mean against beta from the Dirichlet form.
void dirichlet(Verdict& v) {
  double worst = 0.0;
  for (double d : kSweep) {
    for (const auto& nk : kernel_registry(d)) {
      const auto h = compute_coefficients(nk.kernel, 0.1, kN);
      const double gap = std::abs(h.beta - h.beta_dirichlet) / std::abs(h.beta);
      worst = std::max(worst, gap);
      v.require(gap < 1e-8, nk.name + " d=" + sci(d));
    }
  }
  v.note << "worst relative gap " << sci(worst);
}

// 7. Term count, orthogonality to Omega and linearity in zeta.
void structure(Verdict& v) {
  v.require(count_terms(TermKind::quadratic) == 8, "8 quadratic terms");
  v.require(count_terms(TermKind::derivative) == 5, "5 derivative terms");
  const auto h = compute_coefficients(parse_kernel_spec("evenpoly:1,0.5", 0.5), 0.1, kN);
  double worst_perp = 0.0, worst_lin = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const Grid grid = Grid::periodic_cube(16);
    const FieldState s = sample(random_field(seed), grid);
    for (int order : {2, 4}) {
      const auto b = decompose_gradients(s, order);
      const auto r = evaluate_r2(s, b, h.zeta, order);
      worst_perp = std::max(worst_perp, gen::worst_alignment(s, r));
      std::array<double, 13> half = h.zeta, rest{};
      for (std::size_t j = 0; j < 13; ++j) {
        half[j] = (j % 2 ? 0.25 : -1.5) * h.zeta[j];
        rest[j] = h.zeta[j] - half[j];
      }
      const auto ra = evaluate_r2(s, b, half, order);
      const auto rb = evaluate_r2(s, b, rest, order);
      double gap = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t q = 0; q < 3; ++q) {
          gap = std::max(gap, std::abs(r[i][q] - ra[i][q] - rb[i][q]));
          scale = std::max(scale, std::abs(r[i][q]));
        }
      }
      worst_lin = std::max(worst_lin, gap / scale);
    }
  }
  v.require(worst_perp < 1e-9, "orthogonality");
  v.require(worst_lin < 1e-12, "linearity");
  v.note << "8 + 5 terms, |Omega.R2| " << sci(worst_perp) << ", linearity " << sci(worst_lin);
}

// 8. Tilt and swirl identities converge at second order; R1 on axial-sine.
void geometry(Verdict& v) {
  double lo = INFINITY, hi = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto field = random_field(seed);
    const double rt = gen::tilt_identity_error(field, 32) / gen::tilt_identity_error(field, 64);
    const double rs = gen::swirl_identity_error(field, 32) / gen::swirl_identity_error(field, 64);
    for (double r : {rt, rs}) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    v.require(rt >= 3.5 && rt <= 4.5, "tilt ratio seed " + std::to_string(seed));
    v.require(rs >= 3.5 && rs <= 4.5, "swirl ratio seed " + std::to_string(seed));
  }
  const auto h = compute_coefficients(CollisionKernel::constant(1.0, 1.0), 0.1, kN);
  const double e32 = gen::axial_sine_r1_error(32, h.beta, h.gamma);
  const double e64 = gen::axial_sine_r1_error(64, h.beta, h.gamma);
  const double step = 2 * M_PI / 64;
  v.require(e32 / e64 >= 3.5 && e32 / e64 <= 4.5, "axial-sine ratio");
  v.require(e64 <= 1.05 * h.beta * step * step / 3, "axial-sine error");
  v.note << "identity ratios in [" << sci(lo) << ", " << sci(hi) << "], axial-sine ratio " << sci(e32 / e64);
}

// 9. Bitwise determinism, n = 64 against n = 128, and a 20-point sweep timing.
void determinism(Verdict& v) {
  double worst = 0.0;
  for (double d : kSweep) {
    for (const auto& nk : kernel_registry(d)) {
      const std::string a = io::coefficients_to_json(compute_coefficients(nk.kernel, 0.1, kN));
      const std::string b = io::coefficients_to_json(compute_coefficients(nk.kernel, 0.1, kN));
      v.require(a == b, "bitwise " + nk.name + " d=" + sci(d));
      std::vector<double> x, y;
      collect(nlohmann::json::parse(a), x);
      collect(nlohmann::json::parse(io::coefficients_to_json(compute_coefficients(nk.kernel, 0.1, 2 * kN))), y);
      v.require(x.size() == y.size(), "entry count " + nk.name);
      for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    }
  }
  v.require(worst < 1e-9, "n=64 vs n=128");
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 20; ++i) {
    const double d = 0.05 + (5.0 - 0.05) * i / 19.0;
    compute_coefficients(parse_kernel_spec("evenpoly:1,0.5", d), 0.1, kN);
  }
  const double secs = seconds_since(start);
  v.require(secs < 10.0, "sweep time");
  v.note << "max change " << sci(worst) << ", 20-point sweep " << sci(secs) << " s";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"positivity of beta", positivity},
      {"consistency relations", consistency},
      {"closed-form c1, c3", closed_form},
      {"maximum principle for h", maximum_principle},
      {"oracle equivalence", oracle_equivalence},
      {"beta Dirichlet identity", dirichlet},
      {"R2 structure and orthogonality", structure},
      {"geometric identities", geometry},
      {"determinism and convergence", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.note << "; threw: " << e.what();
    }
    failed += v.ok ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, v.note.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
