#include "flock/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "format.hpp"
#include "flock/error.hpp"

namespace flock::io {

namespace {

using nlohmann::json;

std::string model_name(NuModel m) {
  switch (m) {
    case NuModel::constant: return "const";
    case NuModel::affine: return "affine";
    case NuModel::even_polynomial: return "evenpoly";
    case NuModel::tabulated: return "table";
  }
  return "unknown";
}

template <std::size_t N>
json array_of(const std::array<double, N>& a) {
  return json(std::vector<double>(a.begin(), a.end()));
}

template <std::size_t N>
void read_array(const json& j, std::array<double, N>& out, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError(std::string("coefficients JSON: '") + what + "' must be an array of " + std::to_string(N));
  }
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
}

json to_object(const HydroCoefficients& h) {
  json j;
  json kernel;
  kernel["spec"] = h.kernel;
  try {
    const CollisionKernel k = parse_kernel_spec(h.kernel, h.d);
    kernel["model"] = model_name(k.model());
    kernel["params"] = k.params();
  } catch (const Error&) {
    // An unparseable spec is still carried through verbatim.
  }
  j["kernel"] = kernel;
  j["d"] = h.d;
  j["kappa"] = h.kappa;
  j["n"] = h.n;
  j["c"] = {h.c.c1, h.c.c2, h.c.c3};
  j["beta"] = h.beta;
  j["gamma"] = h.gamma;
  j["zeta"] = array_of(h.zeta);

  const auto& L = h.lambda;
  json lambda = {{"l1_11", L.l1_11}, {"l1_12", L.l1_12}, {"l2_11", L.l2_11}, {"l2_12", L.l2_12},
                 {"l_21", L.l_21},   {"l_22", L.l_22},   {"l_23", L.l_23}};
  lambda["lambda_prime"] = array_of(h.lambda_prime);
  lambda["lambda_second"] = array_of(h.lambda_second);
  const auto& E = h.eta;
  json eta = {{"e1_11", E.e1_11}, {"e1_12", E.e1_12}, {"e1_13", E.e1_13}, {"e2_11", E.e2_11},
              {"e2_12", E.e2_12}, {"e4_11", E.e4_11}, {"e4_12", E.e4_12}, {"e1_21", E.e1_21},
              {"e1_22", E.e1_22}, {"e2_21", E.e2_21}, {"e2_22", E.e2_22}, {"e2_23", E.e2_23}};
  eta["eta_prime"] = array_of(h.eta_prime);
  const auto& X = h.xi_brackets;
  json xi = {{"x1_1", X.x1_1}, {"x1_2", X.x1_2}, {"x2_1", X.x2_1}, {"x2_2", X.x2_2}, {"xi", h.xi}};
  xi["xi_slots"] = array_of(h.xi_slots);
  j["intermediates"] = {{"lambda", lambda},
                        {"eta", eta},
                        {"xi", xi},
                        {"prefactor", h.prefactor},
                        {"beta_dirichlet", h.beta_dirichlet}};
  json res = json::object();
  for (const auto& [k, v] : h.residuals) res[k] = v;
  j["residuals"] = res;
  return j;
}

HydroCoefficients from_object(const json& j) {
  HydroCoefficients h;
  h.kernel = j.at("kernel").at("spec").get<std::string>();
  h.d = j.at("d").get<double>();
  h.kappa = j.at("kappa").get<double>();
  h.n = j.at("n").get<int>();
  std::array<double, 3> c{};
  read_array(j.at("c"), c, "c");
  h.c = {c[0], c[1], c[2]};
  h.beta = j.at("beta").get<double>();
  h.gamma = j.at("gamma").get<double>();
  read_array(j.at("zeta"), h.zeta, "zeta");

  const json& in = j.at("intermediates");
  const json& l = in.at("lambda");
  auto& L = h.lambda;
  L.l1_11 = l.at("l1_11");
  L.l1_12 = l.at("l1_12");
  L.l2_11 = l.at("l2_11");
  L.l2_12 = l.at("l2_12");
  L.l_21 = l.at("l_21");
  L.l_22 = l.at("l_22");
  L.l_23 = l.at("l_23");
  read_array(l.at("lambda_prime"), h.lambda_prime, "lambda_prime");
  read_array(l.at("lambda_second"), h.lambda_second, "lambda_second");
  const json& e = in.at("eta");
  auto& E = h.eta;
  E.e1_11 = e.at("e1_11");
  E.e1_12 = e.at("e1_12");
  E.e1_13 = e.at("e1_13");
  E.e2_11 = e.at("e2_11");
  E.e2_12 = e.at("e2_12");
  E.e4_11 = e.at("e4_11");
  E.e4_12 = e.at("e4_12");
  E.e1_21 = e.at("e1_21");
  E.e1_22 = e.at("e1_22");
  E.e2_21 = e.at("e2_21");
  E.e2_22 = e.at("e2_22");
  E.e2_23 = e.at("e2_23");
  read_array(e.at("eta_prime"), h.eta_prime, "eta_prime");
  const json& x = in.at("xi");
  auto& X = h.xi_brackets;
  X.x1_1 = x.at("x1_1");
  X.x1_2 = x.at("x1_2");
  X.x2_1 = x.at("x2_1");
  X.x2_2 = x.at("x2_2");
  h.xi = x.at("xi");
  read_array(x.at("xi_slots"), h.xi_slots, "xi_slots");
  h.prefactor = in.at("prefactor");
  h.beta_dirichlet = in.at("beta_dirichlet");
  for (const auto& [k, v] : j.at("residuals").items()) {
    h.residuals[k] = v.is_null() ? NAN : v.get<double>();
  }
  return h;
}

}  // namespace

std::string coefficients_to_json(const HydroCoefficients& h, int indent) { return to_object(h).dump(indent); }

std::string coefficients_to_json(std::span<const HydroCoefficients> sweep, int indent) {
  json a = json::array();
  for (const auto& h : sweep) a.push_back(to_object(h));
  return a.dump(indent);
}

std::vector<HydroCoefficients> coefficients_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("coefficients JSON does not parse: ") + e.what());
  }
  std::vector<HydroCoefficients> out;
  try {
    if (j.is_array()) {
      for (const auto& item : j) out.push_back(from_object(item));
    } else {
      out.push_back(from_object(j));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("coefficients JSON is missing or mistypes a field: ") + e.what());
  }
  if (out.empty()) throw ConfigError("coefficients JSON holds no entries");
  return out;
}

void write_sweep_csv(std::ostream& out, std::span<const HydroCoefficients> sweep) {
  using detail::shortest;
  out << "d,c1,c2,c3,beta,gamma";
  for (int j = 1; j <= 13; ++j) out << ",zeta" << j;
  out << '\n';
  for (const auto& h : sweep) {
    out << shortest(h.d) << ',' << shortest(h.c.c1) << ',' << shortest(h.c.c2) << ',' << shortest(h.c.c3) << ','
        << shortest(h.beta) << ',' << shortest(h.gamma);
    for (double z : h.zeta) out << ',' << shortest(z);
    out << '\n';
  }
}

void write_profile_csv(std::ostream& out, const MuProfile& p) {
  out << "mu,value\n";
  const auto nodes = p.rule().nodes();
  const auto values = p.nodal_values();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out << detail::shortest(nodes[i]) << ',' << detail::shortest(values[i]) << '\n';
  }
}

std::string profile_json(const std::string& name, const MuProfile& p, const std::map<std::string, double>& metrics) {
  json j;
  j["name"] = name;
  j["basis"] = "legendre";
  j["endpoint_exponent"] = p.exponent();
  j["degree"] = p.degree();
  j["coefficients"] = std::vector<double>(p.coeffs().begin(), p.coeffs().end());
  j["nodes"] = p.rule().size();
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = m;
  return j.dump(2);
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

KeyValues read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

double parse_double(const std::string& text, const std::string& what) {
  // stod would skip leading blanks.
  if (text.empty() || std::isspace(static_cast<unsigned char>(text[0]))) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  if (used != text.size() || !std::isfinite(v)) throw ConfigError(what + ": '" + text + "' is not a finite number");
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  if (text.empty() || std::isspace(static_cast<unsigned char>(text[0]))) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  if (used != text.size() || v < INT32_MIN || v > INT32_MAX) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  return static_cast<int>(v);
}

KernelConfig kernel_config(const KeyValues& kv) {
  KernelConfig cfg;
  const auto model = kv.find("nu.model");
  const auto params = kv.find("nu.params");
  if (model != kv.end()) {
    if (params == kv.end()) throw ConfigError("config: nu.model given without nu.params");
    std::string m = model->second;
    if (m == "constant") m = "const";
    if (m == "even_polynomial") m = "evenpoly";
    if (m == "tabulated") m = "table";
    cfg.nu_spec = m + ":" + params->second;
  } else if (params != kv.end()) {
    throw ConfigError("config: nu.params given without nu.model");
  }
  if (const auto it = kv.find("d"); it != kv.end()) cfg.d = parse_double(it->second, "config d");

  const auto kappa = kv.find("kappa");
  const auto spatial = kv.find("spatial.model");
  if (kappa != kv.end() && spatial != kv.end()) {
    throw ConfigError("config: give either kappa or spatial.model, not both");
  }
  if (kappa != kv.end()) cfg.kappa = parse_double(kappa->second, "config kappa");
  if (spatial != kv.end()) {
    if (spatial->second == "ball") {
      const auto r = kv.find("spatial.radius");
      if (r == kv.end()) throw ConfigError("config: spatial.model=ball needs spatial.radius");
      cfg.kappa = SpatialKernel::ball(parse_double(r->second, "config spatial.radius"));
    } else if (spatial->second == "gaussian") {
      const auto w = kv.find("spatial.width");
      if (w == kv.end()) throw ConfigError("config: spatial.model=gaussian needs spatial.width");
      cfg.kappa = SpatialKernel::gaussian(parse_double(w->second, "config spatial.width"));
    } else {
      throw ConfigError("config: unknown spatial.model '" + spatial->second + "' (expected ball or gaussian)");
    }
  }
  return cfg;
}

}  // namespace flock::io
