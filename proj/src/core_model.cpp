#include "qfj/core_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace qfj {

namespace {
constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}
}  // namespace

void ChannelParams::validate() const {
  if (!(k0 > 0.0)) throw ParameterError("k0 must be positive");
  if (!(k1 >= 0.0 && k1 < 1.0)) throw ParameterError("k1 must lie in [0, 1)");
  if (!(L > 0.0)) throw ParameterError("L must be positive");
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (!(hbar > 0.0)) throw ParameterError("hbar must be positive");
  if (!(mass > 0.0)) throw ParameterError("mass must be positive");
}

double ChannelParams::stiffness(double x) const {
  return k0 * (1.0 + k1 * std::cos(2.0 * kPi * x / L));
}

double ChannelParams::stiffness_dx(double x) const {
  const double q = 2.0 * kPi / L;
  return -k0 * k1 * q * std::sin(q * x);
}

double ChannelParams::stiffness_dxx(double x) const {
  const double q = 2.0 * kPi / L;
  return -k0 * k1 * q * q * std::cos(q * x);
}

double potential_eval(const ChannelParams& p, double x, double y) {
  return 0.5 * p.stiffness(x) * y * y;
}

DerivedScales derive_scales(const ChannelParams& p) {
  p.validate();
  DerivedScales s;
  s.lambda_T2 = 2.0 * kPi * p.hbar * p.hbar * p.beta / p.mass;
  s.L_y = std::sqrt(2.0 / (p.beta * p.k0));
  s.omega = std::sqrt(p.k0 / p.mass);
  s.L_omega = 2.0 * std::sqrt(p.hbar / (p.mass * s.omega));
  s.Lambda = s.lambda_T2 / (48.0 * kPi * s.L_y * s.L_y);
  return s;
}

double beta_for_lambda(const ChannelParams& p, double Lambda) {
  if (!(Lambda > 0.0)) throw ParameterError("Lambda must be positive to fix a temperature");
  return std::sqrt(48.0 * p.mass * Lambda / (p.hbar * p.hbar * p.k0));
}

ChannelParams with_lambda(ChannelParams p, double Lambda) {
  p.beta = beta_for_lambda(p, Lambda);
  return p;
}

double k0_for_length_ratio(const ChannelParams& p, double ratio) {
  if (!(ratio > 0.0)) throw ParameterError("L/L_omega must be positive");
  // L_omega = 2 sqrt(hbar / (m omega)) = L / ratio
  const double osc = p.L / (2.0 * ratio);
  const double omega = p.hbar / (p.mass * osc * osc);
  return p.mass * omega * omega;
}

double length_ratio(const ChannelParams& p) {
  const double omega = std::sqrt(p.k0 / p.mass);
  return p.L / (2.0 * std::sqrt(p.hbar / (p.mass * omega)));
}

double lambda_from_beta_k0_lambdaT2(double beta_k0_lambdaT2) {
  return beta_k0_lambdaT2 / (96.0 * kPi);
}

ExperimentEstimate lambda_from_experiment(double T_bar, double dV_bar, double lam_bar,
                                          double m_bar) {
  if (!(T_bar > 0.0 && dV_bar > 0.0 && lam_bar > 0.0 && m_bar > 0.0))
    throw ParameterError("experimental inputs must be positive");
  ExperimentEstimate e;
  e.beta_k0_lambdaT2 = 3.0 * dV_bar / (T_bar * T_bar * m_bar * lam_bar * lam_bar);
  e.Lambda = lambda_from_beta_k0_lambdaT2(e.beta_k0_lambdaT2);
  return e;
}

ValidityReport check_validity(const ChannelParams& p) {
  const DerivedScales s = derive_scales(p);
  ValidityReport r;

  const double bkl = p.beta * p.k0 * s.lambda_T2;
  r.lambda_small.margin = bkl / (48.0 * kPi);
  r.lambda_small.ok = r.lambda_small.margin < kSmallRatioThreshold;
  if (!r.lambda_small.ok) {
    std::ostringstream os;
    os << "beta k0 lambda_T^2 / (48 pi) = " << r.lambda_small.margin
       << ": first-order expansion in Lambda is not controlled";
    r.messages.push_back(os.str());
  }

  const double rhs = 4.0 * p.k1 * kPi / (1.0 - p.k1);
  const double lhs = p.beta * p.k0 * p.L * p.L;
  r.lengthscale_sep.margin = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
  r.lengthscale_sep.ok = r.lengthscale_sep.margin > kLargeRatioThreshold;
  if (!r.lengthscale_sep.ok) {
    std::ostringstream os;
    os << "beta k0 L^2 exceeds 4 k1 pi / (1 - k1) only by " << r.lengthscale_sep.margin
       << ": longitudinal and transverse scales are not separated";
    r.messages.push_back(os.str());
  }
  return r;
}

KeyValueMap parse_key_value(const std::string& text) {
  KeyValueMap kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParameterError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueMap read_key_value_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_key_value(ss.str());
}

double get_double(const KeyValueMap& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("key '" + key + "' is not a number: " + it->second);
  }
}

ChannelParams params_from_config(const KeyValueMap& kv) {
  ChannelParams p;
  p.k0 = get_double(kv, "k0", p.k0);
  p.k1 = get_double(kv, "k1", p.k1);
  p.L = get_double(kv, "L", p.L);
  p.hbar = get_double(kv, "hbar", p.hbar);
  p.mass = get_double(kv, "mass", p.mass);
  if (kv.count("Lx_over_Lomega")) p.k0 = k0_for_length_ratio(p, get_double(kv, "Lx_over_Lomega", 0));
  p.beta = get_double(kv, "beta", p.beta);
  if (kv.count("Lambda")) p.beta = beta_for_lambda(p, get_double(kv, "Lambda", 0.0));
  p.validate();
  return p;
}

}  // namespace qfj
