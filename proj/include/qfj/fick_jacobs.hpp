#pragma once

// Quantum Fick-Jacobs reduction of the 2D channel to an effective 1D free
// energy beta F(x) = beta A0(x) + Lambda beta F_Lambda(x).
//
// Gauge: the transverse partition function is normalized by sqrt(pi) L_y,
// i.e. beta A0(x) = -ln( int exp(-beta U) dy / (sqrt(pi) L_y) ). For the
// harmonic channel this is exactly 1/2 ln(k(x)/k0); any other choice of the
// normalizing length shifts A0 by a constant and drops out of barriers,
// fluxes and normalized densities.

#include <memory>
#include <span>
#include <vector>

#include "qfj/core_model.hpp"
#include "qfj/quadrature.hpp"

namespace qfj {

/// Potential U(x, y), periodic in x, confining in y.
class ChannelPotential {
public:
  virtual ~ChannelPotential() = default;
  virtual double value(double x, double y) const = 0;
  virtual double dx(double x, double y) const = 0;
  virtual double dy(double x, double y) const = 0;
  virtual double dxx(double x, double y) const = 0;
  virtual double dyy(double x, double y) const = 0;
  virtual double period() const = 0;
};

class HarmonicChannel final : public ChannelPotential {
public:
  explicit HarmonicChannel(ChannelParams p) : p_(p) { p_.validate(); }
  double value(double x, double y) const override { return 0.5 * p_.stiffness(x) * y * y; }
  double dx(double x, double y) const override { return 0.5 * p_.stiffness_dx(x) * y * y; }
  double dy(double x, double y) const override { return p_.stiffness(x) * y; }
  double dxx(double x, double y) const override { return 0.5 * p_.stiffness_dxx(x) * y * y; }
  double dyy(double x, double) const override { return p_.stiffness(x); }
  double period() const override { return p_.L; }

private:
  ChannelParams p_;
};

/// U = 1/2 k(x) y^2 + 1/4 g k(x) y^4. Non-Gaussian transverse profile used to
/// exercise the general quadrature path.
class QuarticChannel final : public ChannelPotential {
public:
  QuarticChannel(ChannelParams p, double g) : p_(p), g_(g) { p_.validate(); }
  double value(double x, double y) const override {
    const double y2 = y * y;
    return p_.stiffness(x) * (0.5 * y2 + 0.25 * g_ * y2 * y2);
  }
  double dx(double x, double y) const override {
    const double y2 = y * y;
    return p_.stiffness_dx(x) * (0.5 * y2 + 0.25 * g_ * y2 * y2);
  }
  double dy(double x, double y) const override { return p_.stiffness(x) * (y + g_ * y * y * y); }
  double dxx(double x, double y) const override {
    const double y2 = y * y;
    return p_.stiffness_dxx(x) * (0.5 * y2 + 0.25 * g_ * y2 * y2);
  }
  double dyy(double x, double y) const override { return p_.stiffness(x) * (1.0 + 3.0 * g_ * y * y); }
  double period() const override { return p_.L; }

private:
  ChannelParams p_;
  double g_;
};

/// General-potential route: every quantity is a transverse quadrature.
class GeneralFickJacobs {
public:
  GeneralFickJacobs(std::shared_ptr<const ChannelPotential> potential, double beta, double L_y,
                    AdaptiveOptions opt = {});

  /// int exp(-beta U(x, y)) dy
  double partition(double x) const;
  double classical_free_energy(double x) const;

  /// <g> with weight exp(-beta U(x, .)) / partition(x)
  double transverse_average(double x, const Integrand& g) const;

  /// <beta dU/dx>; equals d(beta A0)/dx.
  double mean_force(double x) const;
  /// L_y^2 <d^2(beta U)/dy^2>
  double mean_curvature(double x) const;
  /// -L_y^2 <d^2(beta U)/dy^2>: relative O(Lambda) density correction.
  double density_correction(double x) const { return -mean_curvature(x); }

  /// d(beta F_Lambda)/dx from the two transverse averages.
  double free_energy_correction_slope(double x) const;
  /// beta F_Lambda(x) = mean_curvature(0) + int_0^x slope.
  double free_energy_correction(double x) const;
  /// beta F_Lambda on ascending samples starting at x = 0, integrating
  /// piecewise so each sample costs one short adaptive integral.
  std::vector<double> free_energy_correction(std::span<const double> xs) const;

  /// int exp(-beta U) (d^2 beta U/dy^2 - (beta dU/dy)^2) dy, which vanishes
  /// for any confining potential.
  double vanishing_integral(double x) const;

  double beta() const { return beta_; }
  double L_y() const { return L_y_; }
  const ChannelPotential& potential() const { return *u_; }

private:
  double weighted(double x, const Integrand& g) const;

  std::shared_ptr<const ChannelPotential> u_;
  double beta_;
  double L_y_;
  AdaptiveOptions opt_;
};

enum class Route { harmonic, general };

double classical_free_energy(const ChannelParams& p, double x, Route route = Route::harmonic);
double quantum_free_energy_correction(const ChannelParams& p, double x,
                                      Route route = Route::harmonic);

/// 1/2 ln((1 + k1)/(1 - k1)) + 4 Lambda k1
double free_energy_barrier(const ChannelParams& p, double Lambda);

struct FreeEnergyProfile {
  std::vector<double> x;            // uniform on [0, L]
  std::vector<double> a0;           // beta A0
  std::vector<double> f_lambda;     // beta F_Lambda
  std::vector<double> rho_lambda;   // relative density correction at each x
  double lambda = 0.0;

  double total(std::size_t i) const { return a0[i] + lambda * f_lambda[i]; }
  std::vector<double> totals() const;
  double period() const { return x.back() - x.front(); }
};

FreeEnergyProfile harmonic_profile(const ChannelParams& p, double Lambda, int samples = 513);
FreeEnergyProfile general_profile(const GeneralFickJacobs& fj, double L, double Lambda,
                                  int samples = 513);

/// max - min of the assembled profile.
double barrier_from_profile(const FreeEnergyProfile& profile);

struct DensityValue {
  double value = 0.0;
  bool expansion_broken = false;  // |Lambda rho_Lambda| exceeds rho_cl
};

/// rho0 exp(beta dmu) (sqrt(pi k0 / k(x)) - 2 Lambda k(x)/k0) for the harmonic channel.
DensityValue equilibrium_density(const ChannelParams& p, double Lambda, double mu_minus_mu0,
                                 double x, double rho0 = 1.0);

/// Normalized equilibrium profile exp(-beta F) on the given points: sum(rho) dx = 1.
std::vector<double> fick_jacobs_marginal(const ChannelParams& p, double Lambda,
                                         std::span<const double> xs, double dx);

/// 2 U0 (1 - pi lambda_T^2 / (12 L^2)); throws if the bracket is negative.
double enthalpic_1d_barrier(double U0, double lambda_T, double L);

struct FluxResult {
  double j_cl_over_D = 0.0;
  double j_lambda = 0.0;
  double j_total_over_D = 0.0;
  bool periodic_simplification = true;
};

struct SteadyState1D {
  std::vector<double> x;
  std::vector<double> rho;
  FluxResult flux;
  double j_full_over_D = 0.0;  // from the un-expanded boundary formula
};

/// Harmonic closed ratio -2 int (k/k0)^{3/2} / int (k/k0)^{1/2}.
double harmonic_flux_correction(const ChannelParams& p);

/// Flux and density for chemical potentials mu1 at x = 0 and mu2 at x = L.
/// The profile must be uniform with an odd number (>= 513) of samples.
SteadyState1D steady_state_1d(const FreeEnergyProfile& profile, double beta, double mu1,
                              double mu2, double periodic_tol = 1e-8);

}  // namespace qfj
