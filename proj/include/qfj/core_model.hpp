#pragma once

// Units: hbar = m = k_B = 1 and L = 1 unless a parameter file says otherwise.
// The corrugated channel is U(x, y) = 1/2 k(x) y^2 with
// k(x) = k0 (1 + k1 cos(2 pi x / L)).

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfj {

class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ChannelParams {
  double k0 = 1.0;
  double k1 = 0.0;
  double L = 1.0;
  double beta = 1.0;
  double hbar = 1.0;
  double mass = 1.0;

  /// Throws ParameterError unless k0 > 0, 0 <= k1 < 1, and L, beta, hbar, mass > 0.
  void validate() const;

  double stiffness(double x) const;
  double stiffness_dx(double x) const;
  double stiffness_dxx(double x) const;
};

struct DerivedScales {
  double lambda_T2 = 0.0;  // 2 pi hbar^2 beta / m
  double L_y = 0.0;        // sqrt(2 / (beta k0))
  double L_omega = 0.0;    // 2 sqrt(hbar / (m omega))
  double Lambda = 0.0;     // lambda_T2 / (48 pi L_y^2)
  double omega = 0.0;      // sqrt(k0 / m)
};

double potential_eval(const ChannelParams& p, double x, double y);
DerivedScales derive_scales(const ChannelParams& p);

/// Inverse temperature giving the requested quantum parameter at fixed k0.
/// Lambda = beta^2 hbar^2 k0 / (48 m), so the inversion is a square root.
double beta_for_lambda(const ChannelParams& p, double Lambda);
ChannelParams with_lambda(ChannelParams p, double Lambda);

/// Base stiffness k0 for which L / L_omega equals `ratio` (hbar, m, L from p).
double k0_for_length_ratio(const ChannelParams& p, double ratio);
double length_ratio(const ChannelParams& p);

struct ExperimentEstimate {
  double beta_k0_lambdaT2 = 0.0;
  double Lambda = 0.0;
};

/// Quantum parameter from the dimensionless lab quantities (temperature in
/// microkelvin, trap depth in k_B microkelvin, optical wavelength in microns,
/// mass in atomic units).
ExperimentEstimate lambda_from_experiment(double T_bar, double dV_bar, double lam_bar,
                                          double m_bar);
double lambda_from_beta_k0_lambdaT2(double beta_k0_lambdaT2);

struct ValidityCheck {
  bool ok = false;
  double margin = 0.0;
};

struct ValidityReport {
  ValidityCheck lambda_small;     // beta k0 lambda_T^2 / (48 pi), ok below 0.1
  ValidityCheck lengthscale_sep;  // beta k0 L^2 / (4 k1 pi / (1 - k1)), ok above 10
  std::vector<std::string> messages;

  bool ok() const { return lambda_small.ok && lengthscale_sep.ok; }
};

inline constexpr double kSmallRatioThreshold = 0.1;
inline constexpr double kLargeRatioThreshold = 10.0;

ValidityReport check_validity(const ChannelParams& p);

/// Flat key = value text. '#' starts a comment. Keys are kept verbatim.
using KeyValueMap = std::map<std::string, std::string>;
KeyValueMap parse_key_value(const std::string& text);
KeyValueMap read_key_value_file(const std::string& path);

/// Builds ChannelParams from keys k0, k1, L, hbar, mass and either beta or
/// Lambda (Lambda wins the inversion through beta_for_lambda). Unknown keys
/// are ignored so the same file can carry sweep settings.
ChannelParams params_from_config(const KeyValueMap& kv);

double get_double(const KeyValueMap& kv, const std::string& key, double fallback);

}  // namespace qfj
