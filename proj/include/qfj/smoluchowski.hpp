#pragma once

// Quantum Smoluchowski equation in conservative finite-volume form,
//   dp/dt = div[ grad(D_qm p) + p beta grad U ]   (time in units of 1/D_cl),
// with D_qm = 1 / (1 - 2 Lambda L_y^2 d^2(beta U)) per axis.

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

#include "qfj/core_model.hpp"

namespace qfj {

class ValidityError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

struct Potential1D {
  std::function<double(double)> U;
  std::function<double(double)> dU;
  std::function<double(double)> d2U;
};

struct Equilibrium1D {
  std::vector<double> y;
  std::vector<double> closed_form;  // N0 exp(-beta U)(1 - 2 l beta U'' + l beta^2 U'^2), normalized
  std::vector<double> exact;        // (1 - 2 l beta U'') exp(-beta U + l beta^2 U'^2), normalized
  std::vector<double> pde;          // long-time limit of the 1D equation, normalized
  double dy = 0.0;
  int steps = 0;
};

/// l = Lambda * length_scale^2 is the dimensional coefficient; for a channel
/// section the natural length is L_y. Cells cover [-half_width, half_width].
Equilibrium1D solve_equilibrium_1d(const Potential1D& U, double Lambda, double beta,
                                   double length_scale, double half_width, int cells);

struct Grid2D {
  int Mx = 0;
  int My = 0;
  double L = 1.0;
  double Ycut = 1.0;
  double dx() const { return L / Mx; }
  double dy() const { return 2.0 * Ycut / My; }
  double x(int i) const { return dx() * (i + 0.5); }
  double y(int j) const { return dy() * (j - (My - 1) / 2); }
  int index(int i, int j) const { return i * My + j; }
  int size() const { return Mx * My; }
};

struct PdeField {
  Grid2D grid;
  Eigen::VectorXd p;
  std::vector<double> Dx;  // per cell
  std::vector<double> Dy;
  double mass() const;
  std::vector<double> marginal() const;  // sum_j p dy at each x_i
};

/// Harmonic channel, periodic in x, no flux through |y| = Ycut.
class Smoluchowski2D {
public:
  Smoluchowski2D(const ChannelParams& p, double Lambda, Grid2D grid);

  /// Uniform-U variant used as a sanity oracle.
  static Smoluchowski2D flat(Grid2D grid);

  /// One implicit Euler step of length dt.
  void step(double dt);
  /// Largest |face flux| for the current field.
  double max_face_flux() const;

  PdeField& field() { return f_; }
  const PdeField& field() const { return f_; }
  const Eigen::SparseMatrix<double>& generator() const { return G_; }

private:
  Smoluchowski2D() = default;
  void assemble(const std::function<double(double, double)>& bUx,
                const std::function<double(double, double)>& bUy);

  PdeField f_;
  Eigen::SparseMatrix<double> G_;  // dp/dt = G p
  Eigen::SparseMatrix<double> Fx_, Fy_;  // face fluxes from p
  double cached_dt_ = -1.0;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

struct SteadyOptions {
  double rate_tol = 1e-10;  // relative change per unit time
  double dt0 = 1e-6;
  double growth = 2.0;
  int max_steps = 400;
};

struct SteadyReport {
  int steps = 0;
  double final_rate = 0.0;
  double initial_flux = 0.0;
  double final_flux = 0.0;
  double mass_drift = 0.0;
};

/// Marches to stationarity with a geometrically growing step. Throws when
/// the step budget runs out before the rate criterion holds.
SteadyReport march_to_steady(Smoluchowski2D& s, const SteadyOptions& opt = {});

struct Steady2DResult {
  PdeField field;
  SteadyReport report;
};

Steady2DResult solve_steady_2d(const ChannelParams& p, double Lambda, const Grid2D& grid,
                               const SteadyOptions& opt = {});

/// Relative first-order density exp(-beta A0)(1 + Lambda rho_Lambda) for the
/// harmonic channel, normalized so sum rho dx = 1 on the given points.
std::vector<double> fj_first_order_marginal(const ChannelParams& p, double Lambda,
                                            const std::vector<double>& xs, double dx);

}  // namespace qfj
