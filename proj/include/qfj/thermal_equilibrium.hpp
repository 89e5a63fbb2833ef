#pragma once

#include <span>
#include <string>
#include <vector>

#include "qfj/grid_hamiltonian.hpp"

namespace qfj {

struct MarginalDensity {
  std::vector<double> x;
  std::vector<double> rho;  // per unit length
  double norm = 0.0;        // sum rho dx
  double dx = 0.0;
  double edge_ratio = 0.0;  // largest site density on the |y| = Ycut rows over the global max
};

/// Boltzmann-weighted marginal along x for one particle at inverse temperature beta.
MarginalDensity thermal_marginal(const SpectralDecomposition& eig, const GridSpec& g, double beta);

struct BarrierResult {
  double value = 0.0;  // ln(max rho / min rho)
  int i_max = -1;
  int i_min = -1;
  std::vector<std::string> warnings;
};

/// Expects the density maximum near x = L/2 and the minimum near x = 0 (or L);
/// an extremum more than two cells away adds a warning.
BarrierResult numeric_barrier(const MarginalDensity& m);
BarrierResult numeric_barrier(std::span<const double> x, std::span<const double> rho, double dx,
                              double L);

/// sum_i (a_i - b_i)^2 / b_i^2 dx
double mismatch_score(std::span<const double> a, std::span<const double> b, double dx);

inline constexpr double kEdgeDensityLimit = 1e-6;

struct ThermalPoint {
  double Lambda = 0.0;
  double beta = 0.0;
  double barrier = 0.0;
  double barrier_fj = 0.0;
  double mismatch = 0.0;
  double edge_ratio = 0.0;
  double Ycut = 0.0;
  std::vector<std::string> warnings;
  MarginalDensity numeric;
  std::vector<double> fj;  // normalized exp(-beta F) on the same x
};

struct ThermalRunOptions {
  int Mx = 50;
  int My = 31;
  BoundaryX bc = BoundaryX::periodic;
  double Ycut = 0.0;    // 0: automatic from the smallest Lambda
  int max_doublings = 3;
  const SpectrumCache* cache = nullptr;
};

/// One diagonalization serves every Lambda (H does not depend on beta). If
/// any point leaves density at the transverse wall, Ycut is doubled and the
/// whole run repeats.
std::vector<ThermalPoint> thermal_run(const ChannelParams& base, std::span<const double> Lambdas,
                                      const ThermalRunOptions& opt);

/// Barrier of the marginal for U = U0 cos(2 pi x / L) on a periodic 1D chain.
double cosine_thermal_barrier_1d(double U0, double L, double beta, double hbar, double mass,
                                 int Mx);

}  // namespace qfj
