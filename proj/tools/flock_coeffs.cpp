#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "flock/coeffs.hpp"
#include "flock/elliptic.hpp"
#include "flock/error.hpp"
#include "flock/fields.hpp"
#include "flock/io.hpp"
#include "flock/kernel.hpp"
#include "flock/oracle.hpp"

namespace fs = std::filesystem;
using namespace flock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitNumeric = 3;

const std::set<std::string> kConfigKeys = {
    "nu.model", "nu.params", "d",     "kappa", "spatial.model", "spatial.radius", "spatial.width",
    "n",        "d.min",     "d.max", "steps", "format",        "field.name",     "field.seed",
    "field.cells", "order",  "epsilon", "m",   "seed"};

// Raw flag values; unset flags fall back to the config file, then to defaults.
struct Flags {
  std::string config;
  std::optional<std::string> nu;
  std::optional<double> d;
  std::optional<double> d_min;
  std::optional<double> d_max;
  std::optional<int> steps;
  std::optional<int> n;
  std::optional<double> kappa;
  std::optional<std::string> spatial;
  std::optional<std::string> format;
  std::string output;

  std::optional<std::string> field;
  std::optional<std::string> input;
  std::optional<int> cells;
  std::optional<int> order;
  std::optional<double> epsilon;

  bool quick = false;
  std::optional<std::string> inject_fault;
  std::optional<std::string> from;
  std::optional<int> m;
  std::optional<std::uint64_t> seed;
};

// Merged view of flags over config file.
class Settings {
 public:
  explicit Settings(const Flags& f) : flags_(f) {
    if (!f.config.empty()) {
      kv_ = io::read_key_value_file(f.config);
      for (const auto& [key, value] : kv_) {
        if (!kConfigKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");
      }
    }
    kernel_cfg_ = io::kernel_config(kv_);
  }

  std::string nu() const {
    if (flags_.nu) return *flags_.nu;
    return kernel_cfg_.nu_spec.value_or("const:1");
  }

  double d() const {
    const double v = flags_.d ? *flags_.d : kernel_cfg_.d.value_or(1.0);
    require_positive(v, "d");
    return v;
  }

  int n() const {
    const int v = flags_.n ? *flags_.n : (kv_.count("n") ? io::parse_int(kv_.at("n"), "config n") : 64);
    if (v < 8) throw ConfigError("n must be >= 8, got " + std::to_string(v));
    return v;
  }

  double kappa() const {
    if (flags_.kappa && flags_.spatial) throw ConfigError("give either --kappa or --spatial, not both");
    if (flags_.kappa) return *flags_.kappa;
    if (flags_.spatial) return resolve_kappa(parse_spatial(*flags_.spatial));
    if (kernel_cfg_.kappa) return resolve_kappa(*kernel_cfg_.kappa);
    return 0.1;
  }

  // One d, or an inclusive linear range when d.min/d.max/steps are present.
  std::vector<double> d_values() const {
    const auto d_min = flags_.d_min ? flags_.d_min : config_double("d.min");
    const auto d_max = flags_.d_max ? flags_.d_max : config_double("d.max");
    const auto steps = flags_.steps ? flags_.steps : config_int("steps");
    if (!d_min && !d_max && !steps) return {d()};
    if (!d_min || !d_max) throw ConfigError("a d range needs both --d-min and --d-max");
    const int count = steps.value_or(1);
    if (count < 1) throw ConfigError("steps must be >= 1, got " + std::to_string(count));
    require_positive(*d_min, "d-min");
    require_positive(*d_max, "d-max");
    if (*d_max < *d_min) throw ConfigError("d-max must not be below d-min");
    if (count == 1 && *d_max != *d_min) throw ConfigError("steps = 1 needs d-min == d-max");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      out[static_cast<std::size_t>(i)] =
          count == 1 ? *d_min : *d_min + (*d_max - *d_min) * static_cast<double>(i) / (count - 1);
    }
    return out;
  }

  std::string format(const std::string& fallback) const {
    const std::string v = flags_.format ? *flags_.format : (kv_.count("format") ? kv_.at("format") : fallback);
    if (v != "csv" && v != "json") throw ConfigError("format must be csv or json, got '" + v + "'");
    return v;
  }

  std::string field() const {
    if (flags_.field) return *flags_.field;
    return kv_.count("field.name") ? kv_.at("field.name") : "axial-sine";
  }
  std::uint64_t seed(const char* key) const {
    if (flags_.seed) return *flags_.seed;
    const auto v = config_int(key);
    return v ? static_cast<std::uint64_t>(*v) : 1u;
  }
  int cells() const {
    const int v = flags_.cells ? *flags_.cells : config_int("field.cells").value_or(32);
    if (v < 1) throw ConfigError("cells must be >= 1");
    return v;
  }
  int order() const {
    const int v = flags_.order ? *flags_.order : config_int("order").value_or(2);
    if (v != 2 && v != 4) throw ConfigError("order must be 2 or 4, got " + std::to_string(v));
    return v;
  }
  std::optional<double> epsilon() const { return flags_.epsilon ? flags_.epsilon : config_double("epsilon"); }
  int m() const {
    const int v = flags_.m ? *flags_.m : config_int("m").value_or(20000);
    if (v < 100) throw ConfigError("m must be >= 100, got " + std::to_string(v));
    return v;
  }

 private:
  static void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  }

  static SpatialKernel parse_spatial(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("--spatial expects ball:R or gaussian:W");
    const std::string kind = text.substr(0, colon);
    const double value = io::parse_double(text.substr(colon + 1), "--spatial");
    if (kind == "ball") return SpatialKernel::ball(value);
    if (kind == "gaussian") return SpatialKernel::gaussian(value);
    throw ConfigError("unknown spatial kernel '" + kind + "' (expected ball or gaussian)");
  }

  std::optional<double> config_double(const std::string& key) const {
    if (!kv_.count(key)) return std::nullopt;
    return io::parse_double(kv_.at(key), "config " + key);
  }
  std::optional<int> config_int(const std::string& key) const {
    if (!kv_.count(key)) return std::nullopt;
    return io::parse_int(kv_.at(key), "config " + key);
  }

  const Flags& flags_;
  io::KeyValues kv_;
  io::KernelConfig kernel_cfg_;
};

// Writes to the file named by path, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLOCK_COEFFS_THREADS"); env && *env) {
    const int cap = io::parse_int(env, "FLOCK_COEFFS_THREADS");
    if (cap < 1) throw ConfigError("FLOCK_COEFFS_THREADS must be >= 1");
    n = std::min(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

// Entries are computed by a small pool and stored by index, so the output
// order never depends on completion order.
std::vector<HydroCoefficients> run_sweep(const std::string& nu, const std::vector<double>& ds, double kappa,
                                         int n) {
  std::vector<HydroCoefficients> out(ds.size());
  std::vector<std::exception_ptr> errors(ds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < ds.size(); i = next++) {
      try {
        out[i] = compute_coefficients(parse_kernel_spec(nu, ds[i]), kappa, n);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = worker_count(ds.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

int cmd_coeffs(const Settings& s, const Flags& f) {
  const std::string nu = s.nu();
  const auto ds = s.d_values();
  const double kappa = s.kappa();
  const int n = s.n();
  const std::string format = s.format("csv");
  parse_kernel_spec(nu, ds.front());  // reject a bad spec before starting workers

  const auto sweep = run_sweep(nu, ds, kappa, n);
  std::ostringstream text;
  if (format == "json") {
    text << (sweep.size() == 1 ? io::coefficients_to_json(sweep.front()) : io::coefficients_to_json(sweep)) << '\n';
  } else {
    io::write_sweep_csv(text, sweep);
  }
  emit(f.output, text.str());
  return kExitOk;
}

int cmd_profiles(const Settings& s, const Flags& f) {
  const CollisionKernel kernel = parse_kernel_spec(s.nu(), s.d());
  const Discretization disc = Discretization::make(kernel, s.n());
  const GciSolution gci = solve_gci(kernel, disc.n, disc.rule);
  const CResult cr = compute_c123(disc, gci);
  const ProfileSet profiles = solve_profiles(disc, cr.c);

  const fs::path dir = f.output.empty() ? fs::path("profiles") : fs::path(f.output);
  fs::create_directories(dir);

  auto diag_metrics = [](const SolveDiagnostics& d) {
    return std::map<std::string, double>{{"residual", d.residual},
                                         {"condition_estimate", d.condition_estimate},
                                         {"galerkin_defect", d.galerkin_defect}};
  };
  double h_max = -INFINITY;
  for (double v : gci.h.nodal_values()) h_max = std::max(h_max, v);

  struct Dump {
    std::string name;
    const MuProfile* profile;
    std::map<std::string, double> metrics;
  };
  const std::vector<Dump> dumps = {
      {"g", &gci.g, diag_metrics(gci.diagnostics)},
      {"h", &gci.h, {{"max_value", h_max}}},
      {"a_perp", &profiles.a_perp, diag_metrics(profiles.diagnostics.at("a_perp"))},
      {"a_par", &profiles.a_par, diag_metrics(profiles.diagnostics.at("a_par"))},
      {"b1", &profiles.b1, diag_metrics(profiles.diagnostics.at("b1"))},
      {"b2", &profiles.b2, diag_metrics(profiles.diagnostics.at("b2"))},
      {"b_par", &profiles.b_par, diag_metrics(profiles.diagnostics.at("b_par"))},
  };
  for (const auto& dump : dumps) {
    std::ostringstream csv;
    io::write_profile_csv(csv, *dump.profile);
    emit((dir / (dump.name + ".csv")).string(), csv.str());
    emit((dir / (dump.name + ".json")).string(), io::profile_json(dump.name, *dump.profile, dump.metrics) + "\n");
  }
  if (h_max > 1e-10) {
    throw InvariantError("GCI profile h is positive somewhere: max h = " + std::to_string(h_max));
  }
  return kExitOk;
}

int cmd_fields(const Settings& s, const Flags& f) {
  const int order = s.order();
  const FieldState state = f.input ? read_field_file(*f.input)
                                   : sample(named_field(s.field(), s.seed("field.seed")),
                                            Grid::periodic_cube(s.cells()));
  const HydroCoefficients h = compute_coefficients(parse_kernel_spec(s.nu(), s.d()), s.kappa(), s.n());
  const CorrectionFields corr = evaluate_corrections(state, h.beta, h.gamma, h.zeta, order);
  std::ostringstream text;
  write_corrections_csv(text, state.grid(), corr, s.epsilon());
  emit(f.output, text.str());
  return kExitOk;
}

int cmd_verify(const Settings& s, const Flags& f) {
  oracle::VerifyReport report;
  if (f.from) {
    std::ifstream in(*f.from);
    if (!in) throw ConfigError("cannot open '" + *f.from + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    for (const auto& h : io::coefficients_from_json(buffer.str())) {
      auto checks = oracle::verify_coefficient_table(h);
      report.checks.insert(report.checks.end(), checks.begin(), checks.end());
    }
  } else {
    oracle::VerifyOptions opt;
    opt.kernel = s.nu();
    opt.d = s.d();
    opt.kappa = s.kappa();
    opt.n = s.n();
    opt.m = s.m();
    opt.quick = f.quick;
    opt.inject_fault = f.inject_fault;
    opt.seed = s.seed("seed");
    report = oracle::run_verification(opt);
  }
  emit(f.output, report.to_json() + "\n");
  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    if (!c.passed) {
      ++failed;
      std::cerr << "FAIL " << c.name << ": measured " << c.measured << ", tolerance " << c.tolerance
                << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
    }
  }
  std::cerr << report.checks.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? kExitOk : kExitInvariant;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvariantError*>(&e)) return kExitInvariant;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const Error*>(&e)) return kExitConfig;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitConfig;
  return kExitNumeric;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value config file; flags override it");
  cmd->add_option("--nu", f.nu, "alignment frequency, e.g. const:1, affine:1,0.3, evenpoly:1,0.5");
  cmd->add_option("--d", f.d, "noise constant d");
  cmd->add_option("--n", f.n, "Legendre degree (>= 8)");
  cmd->add_option("--kappa", f.kappa, "nonlocality constant K2/(6 K0)");
  cmd->add_option("--spatial", f.spatial, "spatial kernel ball:R or gaussian:W (derives kappa)");
  cmd->add_option("--output,-o", f.output, "output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydrodynamic coefficients of the alignment kinetic model"};
  app.name("flock-coeffs");
  app.require_subcommand(1);

  Flags f;
  auto* coeffs = app.add_subcommand("coeffs", "coefficient table for one d or a d range");
  add_common(coeffs, f);
  coeffs->add_option("--d-min", f.d_min, "first d of a sweep");
  coeffs->add_option("--d-max", f.d_max, "last d of a sweep");
  coeffs->add_option("--steps", f.steps, "number of sweep points");
  coeffs->add_option("--format", f.format, "csv or json");

  auto* profiles = app.add_subcommand("profiles", "dump g, h, a_perp, a_par, b1, b2, b_par into a directory");
  add_common(profiles, f);

  auto* fields = app.add_subcommand("fields", "R1 and R2 on an analytic field or a field file");
  add_common(fields, f);
  fields->add_option("--field", f.field, "uniform, axial-sine, tilt, separable or random");
  fields->add_option("--input", f.input, "field file (CSV or FLKF binary)");
  fields->add_option("--cells", f.cells, "cells per axis for analytic fields");
  fields->add_option("--order", f.order, "finite-difference order, 2 or 4");
  fields->add_option("--epsilon", f.epsilon, "also write eps-scaled corrections");
  fields->add_option("--seed", f.seed, "seed of the random field");

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  add_common(verify, f);
  verify->add_flag("--quick", f.quick, "trivial checks only");
  verify->add_option("--inject-fault", f.inject_fault, "test hook: zeta-sign");
  verify->add_option("--from", f.from, "re-verify a JSON coefficient dump");
  verify->add_option("--m", f.m, "finite-difference resolution");
  verify->add_option("--seed", f.seed, "seed for randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const Settings settings(f);
    if (*coeffs) return cmd_coeffs(settings, f);
    if (*profiles) return cmd_profiles(settings, f);
    if (*fields) return cmd_fields(settings, f);
    return cmd_verify(settings, f);
  } catch (const std::exception& e) {
    std::cerr << "flock-coeffs: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
