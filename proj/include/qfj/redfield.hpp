#pragma once

// Single-particle density matrix of the lattice coupled to two particle leads
// on the end columns. With sigma the correlator <a_s^dag a_t> over flat site
// indices, the kinetic equation is linear-affine,
//   d sigma / dt = A sigma + sigma A^H + Q,
// with A = -(i/hbar) H + (1/hbar) sum_leads P (F - G) and
// Q = (1/hbar) sum_leads (P F + F P), P the projector on the lead column.
// Every dissipator term carries the same 1/hbar as the commutator.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "qfj/grid_hamiltonian.hpp"

namespace qfj {

enum class LeadSide { left, right };

struct LeadSpec {
  LeadSide side = LeadSide::left;
  double mu = 0.0;
  double gamma = 1.0;
  double beta = 1.0;
};

/// Kernels restricted to the lead column: f(e, s) = sum_k phi_k(edge_e) phi_k(s) gamma n_k,
/// n_k = exp(-beta (E_k - mu)), and g the same with n_k -> 1.
struct BathCoefficients {
  LeadSide side = LeadSide::left;
  std::vector<int> edge;
  Eigen::MatrixXd f;
  Eigen::MatrixXd g;
};

BathCoefficients bath_coefficients(const SpectralDecomposition& eig, const GridSpec& grid,
                                   const LeadSpec& lead);

struct RedfieldGenerator {
  Eigen::MatrixXcd A;
  Eigen::MatrixXcd Q;
  std::vector<BathCoefficients> baths;
  double hbar = 1.0;
  double gamma_max = 0.0;
};

RedfieldGenerator build_generator(const Eigen::MatrixXd& H, const SpectralDecomposition& eig,
                                  const GridSpec& grid, std::span<const LeadSpec> leads,
                                  double hbar = 1.0);

/// d sigma / dt
Eigen::MatrixXcd kinetic_rhs(const Eigen::MatrixXcd& sigma, const RedfieldGenerator& gen);

/// Contribution of one lead to d sigma / dt.
Eigen::MatrixXcd dissipator(const Eigen::MatrixXcd& sigma, const BathCoefficients& bath,
                            double hbar);

enum class SteadyMethod { schur, direct, relax };
SteadyMethod parse_steady_method(const std::string& s);
std::string to_string(SteadyMethod m);

struct SteadyStateOptions {
  SteadyMethod method = SteadyMethod::schur;
  double tolerance = 0.0;  // 0: 1e-10 gamma_max
  int max_iterations = 200;
};

struct SteadyState {
  Eigen::MatrixXcd sigma;
  double residual = 0.0;  // max |kinetic_rhs(sigma)|
  double tolerance = 0.0;
  SteadyMethod method = SteadyMethod::schur;
  int iterations = 0;
};

class SteadyStateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

SteadyState steady_state(const RedfieldGenerator& gen, const SteadyStateOptions& opt = {});

/// Particle rate into the given bath. Negative into the left bath when
/// mu_left > mu_right. Refuses when the residual exceeds the tolerance.
double current(const SteadyState& ss, const RedfieldGenerator& gen, LeadSide side);

struct PdmDiagnostics {
  double hermiticity = 0.0;  // max |sigma - sigma^H|
  double min_diagonal = 0.0;
  double trace = 0.0;
};
PdmDiagnostics diagnose(const Eigen::MatrixXcd& sigma);

// ---------------------------------------------------------------------------
// Lambda sweeps of the normalized flux

enum class FugacityMode { direct, calibrated };
FugacityMode parse_fugacity_mode(const std::string& s);
std::string to_string(FugacityMode m);

struct TransportSetup {
  ChannelParams base;  // k0, k1, L, hbar, mass; beta is set per Lambda
  int Mx = 24;
  int My = 11;
  double Ycut = 0.0;         // 0: automatic from the smallest Lambda
  double gamma = 0.0;        // 0: 1e-3 hbar omega
  double occupancy = 1e-4;   // lowest-mode occupation of the left lead
  double bias_ratio = 0.5;   // right-lead density (or fugacity) over the left one
  FugacityMode mode = FugacityMode::calibrated;
  SteadyStateOptions solver;
  const SpectrumCache* cache = nullptr;
};

struct TransportPoint {
  double Lambda = 0.0;
  double beta = 0.0;
  double mu_left = 0.0;
  double mu_right = 0.0;
  double J_left = 0.0;   // into the left bath
  double J_right = 0.0;  // into the right bath
  double J_hat = 0.0;    // normalized intake from the left lead
  double R = 0.0;        // J_hat / J_hat at the first Lambda
  double residual = 0.0;
  int iterations = 0;
  std::string error;
};

/// Direct mode: lead fugacities exp(beta mu) with the left one fixing the
/// lowest-mode occupation, J_hat = J lambda_T^2 / (L_y dz).
/// Calibrated mode: fugacities chosen so the equilibrium density of each end
/// column equals sqrt(pi k0 / k) exp(Lambda rho_Lambda) times 1 (left) or
/// bias_ratio (right); J_hat is the current per unit density difference.
std::vector<TransportPoint> transport_sweep(const TransportSetup& setup,
                                            std::span<const double> Lambdas);

}  // namespace qfj
