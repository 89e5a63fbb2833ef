#include "qfj/redfield.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "qfj/lyapunov.hpp"

namespace qfj {

namespace {
using cd = std::complex<double>;

std::vector<int> lead_column(const GridSpec& g, LeadSide side) {
  const int i = side == LeadSide::left ? 0 : g.Mx - 1;
  std::vector<int> e(g.My);
  for (int j = 0; j < g.My; ++j) e[j] = g.index(i, j);
  return e;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

BathCoefficients bath_coefficients(const SpectralDecomposition& eig, const GridSpec& grid,
                                   const LeadSpec& lead) {
  if (!(lead.gamma > 0.0)) throw ParameterError("lead gamma must be positive");
  if (eig.dimension() != grid.size()) throw std::invalid_argument("spectrum does not match grid");
  BathCoefficients b;
  b.side = lead.side;
  b.edge = lead_column(grid, lead.side);
  const Eigen::ArrayXd n = (-lead.beta * (eig.energies.array() - lead.mu)).exp();
  Eigen::MatrixXd rows(b.edge.size(), eig.dimension());
  for (std::size_t e = 0; e < b.edge.size(); ++e) rows.row(e) = eig.modes.row(b.edge[e]);
  b.f = lead.gamma * (rows * n.matrix().asDiagonal()) * eig.modes.transpose();
  b.g = lead.gamma * rows * eig.modes.transpose();
  return b;
}

RedfieldGenerator build_generator(const Eigen::MatrixXd& H, const SpectralDecomposition& eig,
                                  const GridSpec& grid, std::span<const LeadSpec> leads,
                                  double hbar) {
  const int N = grid.size();
  if (H.rows() != N) throw std::invalid_argument("Hamiltonian does not match grid");
  RedfieldGenerator gen;
  gen.hbar = hbar;
  gen.A = cd(0.0, -1.0 / hbar) * H.cast<cd>();
  gen.Q = Eigen::MatrixXcd::Zero(N, N);
  for (const LeadSpec& lead : leads) {
    BathCoefficients b = bath_coefficients(eig, grid, lead);
    gen.gamma_max = std::max(gen.gamma_max, lead.gamma);
    for (std::size_t e = 0; e < b.edge.size(); ++e) {
      const int s = b.edge[e];
      gen.A.row(s) += ((b.f.row(e) - b.g.row(e)) / hbar).cast<cd>();
      gen.Q.row(s) += (b.f.row(e) / hbar).cast<cd>();
      gen.Q.col(s) += (b.f.row(e).transpose() / hbar).cast<cd>();
    }
    gen.baths.push_back(std::move(b));
  }
  return gen;
}

Eigen::MatrixXcd kinetic_rhs(const Eigen::MatrixXcd& sigma, const RedfieldGenerator& gen) {
  Eigen::MatrixXcd r = gen.A * sigma;
  r.noalias() += sigma * gen.A.adjoint();
  r += gen.Q;
  return r;
}

Eigen::MatrixXcd dissipator(const Eigen::MatrixXcd& sigma, const BathCoefficients& b,
                            double hbar) {
  const Eigen::Index N = sigma.rows();
  // P (F - G) sigma, then add its adjoint and the injection P F + F P
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(N, N);
  for (std::size_t e = 0; e < b.edge.size(); ++e) {
    const Eigen::RowVectorXcd w = (b.f.row(e) - b.g.row(e)).cast<cd>();
    out.row(b.edge[e]) += w * sigma;
    out.row(b.edge[e]) += b.f.row(e).cast<cd>();
  }
  out += out.adjoint().eval();
  return out / hbar;
}

SteadyMethod parse_steady_method(const std::string& s) {
  if (s == "schur") return SteadyMethod::schur;
  if (s == "direct") return SteadyMethod::direct;
  if (s == "relax") return SteadyMethod::relax;
  throw ParameterError("steady-state method must be schur, direct or relax");
}

std::string to_string(SteadyMethod m) {
  switch (m) {
    case SteadyMethod::schur: return "schur";
    case SteadyMethod::direct: return "direct";
    case SteadyMethod::relax: return "relax";
  }
  return "?";
}

SteadyState steady_state(const RedfieldGenerator& gen, const SteadyStateOptions& opt) {
  if (gen.baths.empty() || !(gen.gamma_max > 0.0))
    throw SteadyStateError("steady state needs at least one lead with gamma > 0");
  SteadyState ss;
  ss.method = opt.method;
  ss.tolerance = opt.tolerance > 0.0 ? opt.tolerance : 1e-10 * gen.gamma_max;
  const Eigen::MatrixXcd C = -gen.Q;

  switch (opt.method) {
    case SteadyMethod::direct:
      try {
        ss.sigma = solve_lyapunov_kronecker(gen.A, C);
      } catch (const std::runtime_error& e) {
        throw SteadyStateError(std::string("direct solve failed: ") + e.what());
      }
      ss.iterations = 1;
      break;
    case SteadyMethod::schur: {
      LyapunovSolver lyap(gen.A);
      ss.sigma = lyap.solve(C);
      ss.iterations = 1;
      break;
    }
    case SteadyMethod::relax: {
      // implicit Euler, dt doubled every step starting from the lead time scale
      LyapunovSolver lyap(gen.A);
      const Eigen::Index N = gen.A.rows();
      Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(N, N);
      double dt = gen.hbar / gen.gamma_max;
      for (int it = 1; it <= opt.max_iterations; ++it) {
        sigma = lyap.solve(-(sigma / dt + gen.Q), -0.5 / dt);
        sigma = 0.5 * (sigma + sigma.adjoint()).eval();
        ss.iterations = it;
        if (max_abs(kinetic_rhs(sigma, gen)) <= ss.tolerance) break;
        dt *= 2.0;
      }
      ss.sigma = std::move(sigma);
      break;
    }
  }
  ss.residual = max_abs(kinetic_rhs(ss.sigma, gen));
  if (!(ss.residual <= ss.tolerance) && opt.method == SteadyMethod::relax)
    throw SteadyStateError("relaxation did not reach the residual threshold after " +
                           std::to_string(ss.iterations) + " steps (residual " +
                           std::to_string(ss.residual) + ")");
  return ss;
}

double current(const SteadyState& ss, const RedfieldGenerator& gen, LeadSide side) {
  if (!(ss.residual <= ss.tolerance))
    throw SteadyStateError("steady-state residual " + std::to_string(ss.residual) +
                           " above threshold " + std::to_string(ss.tolerance) +
                           "; current not reported");
  for (const BathCoefficients& b : gen.baths) {
    if (b.side != side) continue;
    // tr L[sigma] = 2 sum_e f(e, e) + 2 Re sum_e [(F - G) sigma](e, e)
    double gain = 0.0;
    for (std::size_t e = 0; e < b.edge.size(); ++e) {
      const int s = b.edge[e];
      gain += 2.0 * b.f(e, s);
      cd acc = 0.0;
      for (Eigen::Index t = 0; t < ss.sigma.rows(); ++t) acc += (b.f(e, t) - b.g(e, t)) * ss.sigma(t, s);
      gain += 2.0 * acc.real();
    }
    return -gain / gen.hbar;
  }
  throw std::invalid_argument("no lead attached on the requested side");
}

PdmDiagnostics diagnose(const Eigen::MatrixXcd& sigma) {
  PdmDiagnostics d;
  d.hermiticity = max_abs(sigma - sigma.adjoint());
  d.min_diagonal = sigma.diagonal().real().minCoeff();
  d.trace = sigma.trace().real();
  return d;
}

FugacityMode parse_fugacity_mode(const std::string& s) {
  if (s == "direct") return FugacityMode::direct;
  if (s == "calibrated") return FugacityMode::calibrated;
  throw ParameterError("fugacity mode must be direct or calibrated");
}

std::string to_string(FugacityMode m) {
  return m == FugacityMode::direct ? "direct" : "calibrated";
}

namespace {

// sum over an end column of exp(-beta (H - E0)) diagonal, per unit length
double column_density(const SpectralDecomposition& eig, const GridSpec& g, int i, double beta) {
  const Eigen::ArrayXd w = (-beta * (eig.energies.array() - eig.energies(0))).exp();
  double s = 0.0;
  for (int j = 0; j < g.My; ++j) {
    const Eigen::ArrayXd row = eig.modes.row(g.index(i, j)).transpose().array();
    s += (row.square() * w).sum();
  }
  return s / g.dx();
}

}  // namespace

std::vector<TransportPoint> transport_sweep(const TransportSetup& setup,
                                            std::span<const double> Lambdas) {
  std::vector<TransportPoint> out;
  if (Lambdas.empty()) return out;
  const ChannelParams& base = setup.base;
  const double lam_min = *std::min_element(Lambdas.begin(), Lambdas.end());
  const ChannelParams cold = with_lambda(base, lam_min);
  const GridSpec g = build_grid(cold, setup.Mx, setup.My, BoundaryX::open,
                                setup.Ycut > 0.0 ? std::optional<double>(setup.Ycut) : std::nullopt);
  const Eigen::MatrixXd H(assemble_hamiltonian(g, cold).H);
  const SpectralDecomposition eig = cached_spectrum(cold, g, setup.cache);
  const double E0 = eig.energies(0);
  const double gamma =
      setup.gamma > 0.0 ? setup.gamma : 1e-3 * base.hbar * std::sqrt(base.k0 / base.mass);

  double J_ref = 0.0;
  for (double lam : Lambdas) {
    TransportPoint pt;
    pt.Lambda = lam;
    try {
      const ChannelParams p = with_lambda(base, lam);
      const DerivedScales sc = derive_scales(p);
      pt.beta = p.beta;
      // shifted fugacities zeta = z exp(-beta E0); the left one sets the occupation
      double zeta_l = setup.occupancy;
      double zeta_r = setup.bias_ratio * setup.occupancy;
      double scale = 1.0;
      if (setup.mode == FugacityMode::calibrated) {
        auto target = [&](int i) {
          const double r = p.stiffness(g.x(i)) / p.k0;
          return std::sqrt(std::numbers::pi / r) * std::exp(-2.0 * lam * r);
        };
        const double need_l = target(0) / column_density(eig, g, 0, p.beta);
        const double need_r =
            setup.bias_ratio * target(g.Mx - 1) / column_density(eig, g, g.Mx - 1, p.beta);
        scale = setup.occupancy / need_l;
        zeta_l = setup.occupancy;
        zeta_r = need_r * scale;
      }
      pt.mu_left = E0 + std::log(zeta_l) / p.beta;
      pt.mu_right = E0 + std::log(zeta_r) / p.beta;
      const LeadSpec leads[] = {{LeadSide::left, pt.mu_left, gamma, p.beta},
                                {LeadSide::right, pt.mu_right, gamma, p.beta}};
      const RedfieldGenerator gen = build_generator(H, eig, g, leads, base.hbar);
      const SteadyState ss = steady_state(gen, setup.solver);
      pt.residual = ss.residual;
      pt.iterations = ss.iterations;
      pt.J_left = current(ss, gen, LeadSide::left);
      pt.J_right = current(ss, gen, LeadSide::right);
      const double intake = -pt.J_left;
      if (setup.mode == FugacityMode::calibrated) {
        pt.J_hat = intake / scale / (1.0 - setup.bias_ratio);
      } else {
        const double dz = std::exp(p.beta * pt.mu_left) - std::exp(p.beta * pt.mu_right);
        pt.J_hat = intake * sc.lambda_T2 / (sc.L_y * dz);
      }
      if (out.empty() || J_ref == 0.0) J_ref = pt.J_hat;
      pt.R = pt.J_hat / J_ref;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace qfj
