#include "qfj/thermal_equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qfj/fick_jacobs.hpp"

namespace qfj {

MarginalDensity thermal_marginal(const SpectralDecomposition& eig, const GridSpec& g, double beta) {
  const int N = eig.dimension();
  if (N != g.size()) throw std::invalid_argument("spectrum does not match grid");
  // shifted exponents keep the largest weight at exactly one
  Eigen::VectorXd w = (-beta * (eig.energies.array() - eig.energies(0))).exp();
  w /= w.sum();
  const Eigen::VectorXd site = eig.modes.array().square().matrix() * w;

  MarginalDensity m;
  m.dx = g.dx();
  m.x.resize(g.Mx);
  m.rho.assign(g.Mx, 0.0);
  for (int i = 0; i < g.Mx; ++i) {
    m.x[i] = g.x(i);
    for (int j = 0; j < g.My; ++j) m.rho[i] += site(g.index(i, j));
    m.rho[i] /= m.dx;
  }
  m.norm = 0.0;
  for (double r : m.rho) m.norm += r * m.dx;

  const double peak = site.maxCoeff();
  double edge = 0.0;
  for (int i = 0; i < g.Mx; ++i)
    edge = std::max({edge, site(g.index(i, 0)), site(g.index(i, g.My - 1))});
  m.edge_ratio = peak > 0.0 ? edge / peak : 0.0;
  return m;
}

BarrierResult numeric_barrier(std::span<const double> x, std::span<const double> rho, double dx,
                              double L) {
  if (rho.empty() || x.size() != rho.size()) throw std::invalid_argument("empty or ragged profile");
  BarrierResult b;
  const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
  if (!(*lo > 0.0)) throw std::domain_error("density profile must be strictly positive");
  b.i_min = static_cast<int>(lo - rho.begin());
  b.i_max = static_cast<int>(hi - rho.begin());
  b.value = std::log(*hi / *lo);
  if (b.value == 0.0) return b;

  const double off_max = std::abs(x[b.i_max] - 0.5 * L);
  const double off_min = std::min(std::abs(x[b.i_min]), std::abs(L - x[b.i_min]));
  if (off_max > 2.0 * dx) {
    std::ostringstream os;
    os << "density maximum at x = " << x[b.i_max] << ", expected near L/2";
    b.warnings.push_back(os.str());
  }
  if (off_min > 2.0 * dx) {
    std::ostringstream os;
    os << "density minimum at x = " << x[b.i_min] << ", expected near 0";
    b.warnings.push_back(os.str());
  }
  return b;
}

BarrierResult numeric_barrier(const MarginalDensity& m) {
  const double L = m.dx * static_cast<double>(m.x.size());
  return numeric_barrier(m.x, m.rho, m.dx, L);
}

double mismatch_score(std::span<const double> a, std::span<const double> b, double dx) {
  if (a.size() != b.size())
    throw std::invalid_argument("mismatch_score: profiles have different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(b[i] > 0.0)) throw std::domain_error("mismatch_score: reference must be positive");
    const double d = (a[i] - b[i]) / b[i];
    s += d * d;
  }
  return s * dx;
}

std::vector<ThermalPoint> thermal_run(const ChannelParams& base, std::span<const double> Lambdas,
                                      const ThermalRunOptions& opt) {
  if (Lambdas.empty()) return {};
  const double lam_min = *std::min_element(Lambdas.begin(), Lambdas.end());
  const ChannelParams cold = with_lambda(base, lam_min);
  GridSpec g = build_grid(cold, opt.Mx, opt.My, opt.bc,
                          opt.Ycut > 0.0 ? std::optional<double>(opt.Ycut) : std::nullopt);

  for (int attempt = 0;; ++attempt) {
    const SpectralDecomposition eig = cached_spectrum(cold, g, opt.cache);
    std::vector<ThermalPoint> out;
    bool leaky = false;
    for (double lam : Lambdas) {
      ThermalPoint pt;
      const ChannelParams p = with_lambda(base, lam);
      pt.Lambda = lam;
      pt.beta = p.beta;
      pt.Ycut = g.Ycut;
      pt.numeric = thermal_marginal(eig, g, p.beta);
      for (double& r : pt.numeric.rho) r /= pt.numeric.norm;
      pt.numeric.norm = 1.0;
      pt.edge_ratio = pt.numeric.edge_ratio;
      leaky = leaky || pt.edge_ratio > kEdgeDensityLimit;
      const BarrierResult br = numeric_barrier(pt.numeric);
      pt.barrier = br.value;
      pt.warnings = br.warnings;
      pt.barrier_fj = free_energy_barrier(p, lam);
      pt.fj = fick_jacobs_marginal(p, lam, pt.numeric.x, pt.numeric.dx);
      pt.mismatch = mismatch_score(pt.fj, pt.numeric.rho, pt.numeric.dx);
      out.push_back(std::move(pt));
    }
    if (!leaky || attempt >= opt.max_doublings) {
      if (leaky)
        for (auto& pt : out)
          if (pt.edge_ratio > kEdgeDensityLimit)
            pt.warnings.push_back("density at the transverse wall exceeds 1e-6 of the peak");
      return out;
    }
    g.Ycut *= 2.0;
  }
}

double cosine_thermal_barrier_1d(double U0, double L, double beta, double hbar, double mass,
                                 int Mx) {
  if (Mx < 3) throw ParameterError("1D chain needs at least three sites");
  GridSpec g;
  g.Mx = Mx;
  g.My = 1;
  g.L = L;
  g.Ycut = 1.0;
  g.bc_x = BoundaryX::periodic;
  const double q = 2.0 * std::numbers::pi / L;
  const auto h = assemble_hamiltonian(
      g, [&](double x, double) { return U0 * std::cos(q * x); }, hbar, mass);
  const MarginalDensity m = thermal_marginal(diagonalize(h), g, beta);
  const auto [lo, hi] = std::minmax_element(m.rho.begin(), m.rho.end());
  return std::log(*hi / *lo);
}

}  // namespace qfj
