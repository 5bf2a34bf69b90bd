#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flock/coeffs.hpp"
#include "flock/elliptic.hpp"
#include "flock/kernel.hpp"
#include "flock/profile.hpp"

namespace flock::io {

/// {kernel:{spec,model,params}, d, kappa, n, c:[c1,c2,c3], beta, gamma, zeta:[13],
///  intermediates:{lambda, eta, xi, prefactor, beta_dirichlet}, residuals:{...}}.
/// Doubles are written with enough digits to read back bit-exactly.
std::string coefficients_to_json(const HydroCoefficients& h, int indent = 2);
std::string coefficients_to_json(std::span<const HydroCoefficients> sweep, int indent = 2);
/// Accepts one object or an array of them. Throws ConfigError on malformed input.
std::vector<HydroCoefficients> coefficients_from_json(const std::string& text);

/// Header d,c1,c2,c3,beta,gamma,zeta1..zeta13 and one row per entry.
void write_sweep_csv(std::ostream& out, std::span<const HydroCoefficients> sweep);

/// mu,value at the rule nodes.
void write_profile_csv(std::ostream& out, const MuProfile& p);
/// Modal coefficients, endpoint exponent, degree and residual metrics.
std::string profile_json(const std::string& name, const MuProfile& p, const std::map<std::string, double>& metrics);

/// Plain key=value text; blank lines and lines starting with '#' are skipped.
/// Throws ConfigError naming the line for anything else.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_value_file(const std::string& path);

/// Kernel keys: nu.model (const|affine|evenpoly|table), nu.params, d, and either
/// kappa or spatial.model (ball|gaussian) with spatial.radius / spatial.width.
struct KernelConfig {
  std::optional<std::string> nu_spec;
  std::optional<double> d;
  std::optional<KappaSource> kappa;
};
KernelConfig kernel_config(const KeyValues& kv);

/// Strict number parsing for config values and flags (ConfigError otherwise).
double parse_double(const std::string& text, const std::string& what);
int parse_int(const std::string& text, const std::string& what);

}  // namespace flock::io
