#include "qfj/fick_jacobs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfj {

namespace {
constexpr double kPi = std::numbers::pi;
const double kSqrtPi = std::sqrt(kPi);
}  // namespace

GeneralFickJacobs::GeneralFickJacobs(std::shared_ptr<const ChannelPotential> potential,
                                     double beta, double L_y, AdaptiveOptions opt)
    : u_(std::move(potential)), beta_(beta), L_y_(L_y), opt_(opt) {
  if (!u_) throw std::invalid_argument("GeneralFickJacobs: null potential");
  if (!(beta_ > 0.0 && L_y_ > 0.0))
    throw std::invalid_argument("GeneralFickJacobs: beta and L_y must be positive");
}

double GeneralFickJacobs::weighted(double x, const Integrand& g) const {
  const ChannelPotential& u = *u_;
  const double b = beta_;
  auto integrand = [&](double y) { return std::exp(-b * u.value(x, y)) * g(y); };
  return integrate_transverse(integrand, L_y_, opt_).value;
}

double GeneralFickJacobs::partition(double x) const {
  return weighted(x, [](double) { return 1.0; });
}

double GeneralFickJacobs::classical_free_energy(double x) const {
  return -std::log(partition(x) / (kSqrtPi * L_y_));
}

double GeneralFickJacobs::transverse_average(double x, const Integrand& g) const {
  return weighted(x, g) / partition(x);
}

double GeneralFickJacobs::mean_force(double x) const {
  return transverse_average(x, [&](double y) { return beta_ * u_->dx(x, y); });
}

double GeneralFickJacobs::mean_curvature(double x) const {
  return L_y_ * L_y_ * transverse_average(x, [&](double y) { return beta_ * u_->dyy(x, y); });
}

double GeneralFickJacobs::free_energy_correction_slope(double x) const {
  const double z = partition(x);
  const double b = beta_;
  const double ly2 = L_y_ * L_y_;
  const ChannelPotential& u = *u_;
  const double force = weighted(x, [&](double y) { return b * u.dx(x, y); }) / z;
  const double curv = weighted(x, [&](double y) { return b * u.dyy(x, y); }) / z;
  const double mixed = weighted(x, [&](double y) {
                         const double fy = b * u.dy(x, y);
                         return (fy * fy - 2.0 * b * u.dyy(x, y)) * b * u.dx(x, y);
                       }) /
                       z;
  return force * ly2 * curv + ly2 * mixed;
}

double GeneralFickJacobs::free_energy_correction(double x) const {
  const double anchor = mean_curvature(0.0);
  if (x == 0.0) return anchor;
  AdaptiveOptions outer = opt_;
  outer.abs_tol = 1e-11;
  outer.rel_tol = 1e-10;
  return anchor +
         integrate_adaptive([this](double s) { return free_energy_correction_slope(s); }, 0.0, x,
                            outer)
             .value;
}

std::vector<double> GeneralFickJacobs::free_energy_correction(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  if (xs.empty()) return out;
  if (xs.front() != 0.0) throw std::invalid_argument("F_Lambda samples must start at x = 0");
  AdaptiveOptions outer = opt_;
  outer.abs_tol = 1e-12;
  outer.rel_tol = 1e-10;
  auto slope = [this](double s) { return free_energy_correction_slope(s); };
  double acc = mean_curvature(0.0);
  out[0] = acc;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("F_Lambda samples must increase");
    acc += integrate_adaptive(slope, xs[i - 1], xs[i], outer).value;
    out[i] = acc;
  }
  return out;
}

double GeneralFickJacobs::vanishing_integral(double x) const {
  return weighted(x, [&](double y) {
    const double fy = beta_ * u_->dy(x, y);
    return beta_ * u_->dyy(x, y) - fy * fy;
  });
}

// ---------------------------------------------------------------------------

double classical_free_energy(const ChannelParams& p, double x, Route route) {
  p.validate();
  if (route == Route::harmonic) return 0.5 * std::log(p.stiffness(x) / p.k0);
  const DerivedScales s = derive_scales(p);
  GeneralFickJacobs fj(std::make_shared<HarmonicChannel>(p), p.beta, s.L_y);
  return fj.classical_free_energy(x);
}

double quantum_free_energy_correction(const ChannelParams& p, double x, Route route) {
  p.validate();
  if (route == Route::harmonic) return 2.0 * p.stiffness(x) / p.k0;
  const DerivedScales s = derive_scales(p);
  GeneralFickJacobs fj(std::make_shared<HarmonicChannel>(p), p.beta, s.L_y);
  return fj.free_energy_correction(x);
}

double free_energy_barrier(const ChannelParams& p, double Lambda) {
  p.validate();
  return 0.5 * std::log((1.0 + p.k1) / (1.0 - p.k1)) + 4.0 * Lambda * p.k1;
}

std::vector<double> FreeEnergyProfile::totals() const {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = total(i);
  return t;
}

namespace {
std::vector<double> uniform_samples(double L, int samples) {
  if (samples < 2) throw std::invalid_argument("profile needs at least two samples");
  std::vector<double> xs(samples);
  for (int i = 0; i < samples; ++i) xs[i] = L * i / (samples - 1);
  xs.back() = L;
  return xs;
}
}  // namespace

FreeEnergyProfile harmonic_profile(const ChannelParams& p, double Lambda, int samples) {
  p.validate();
  FreeEnergyProfile prof;
  prof.lambda = Lambda;
  prof.x = uniform_samples(p.L, samples);
  for (double x : prof.x) {
    const double r = p.stiffness(x) / p.k0;
    prof.a0.push_back(0.5 * std::log(r));
    prof.f_lambda.push_back(2.0 * r);
    prof.rho_lambda.push_back(-2.0 * r);
  }
  return prof;
}

FreeEnergyProfile general_profile(const GeneralFickJacobs& fj, double L, double Lambda,
                                  int samples) {
  FreeEnergyProfile prof;
  prof.lambda = Lambda;
  prof.x = uniform_samples(L, samples);
  prof.f_lambda = fj.free_energy_correction(prof.x);
  for (double x : prof.x) {
    prof.a0.push_back(fj.classical_free_energy(x));
    prof.rho_lambda.push_back(fj.density_correction(x));
  }
  return prof;
}

double barrier_from_profile(const FreeEnergyProfile& profile) {
  const auto t = profile.totals();
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  return *hi - *lo;
}

DensityValue equilibrium_density(const ChannelParams& p, double Lambda, double mu_minus_mu0,
                                 double x, double rho0) {
  p.validate();
  const double r = p.stiffness(x) / p.k0;
  const double cl = std::sqrt(kPi / r);
  const double corr = -2.0 * r;
  DensityValue d;
  d.value = rho0 * std::exp(p.beta * mu_minus_mu0) * (cl + Lambda * corr);
  d.expansion_broken = std::abs(Lambda * corr) > cl;
  return d;
}

std::vector<double> fick_jacobs_marginal(const ChannelParams& p, double Lambda,
                                         std::span<const double> xs, double dx) {
  std::vector<double> rho(xs.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = p.stiffness(xs[i]) / p.k0;
    rho[i] = std::exp(-(0.5 * std::log(r) + 2.0 * Lambda * r));
    norm += rho[i] * dx;
  }
  for (double& v : rho) v /= norm;
  return rho;
}

double enthalpic_1d_barrier(double U0, double lambda_T, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  const double bracket = 1.0 - kPi / 12.0 * lambda_T * lambda_T / (L * L);
  if (bracket < -1e-15)
    throw std::domain_error("lambda_T^2 pi / 12 exceeds L^2: barrier formula out of range");
  return 2.0 * U0 * std::max(bracket, 0.0);
}

double harmonic_flux_correction(const ChannelParams& p) {
  p.validate();
  auto w = [&](double x) { return std::sqrt(p.stiffness(x) / p.k0); };
  const double num = integrate_composite([&](double x) { return std::pow(w(x), 3); }, 0.0, p.L).value;
  const double den = integrate_composite(w, 0.0, p.L).value;
  return -2.0 * num / den;
}

namespace {

// Composite Simpson over uniform samples with a Richardson check against the
// half-resolution rule; requires (n - 1) % 4 == 0.
double simpson_samples(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  double s = f[0] + f[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i] * ((i % 2) ? 4.0 : 2.0);
  return s * h / 3.0;
}

double integrate_samples(std::span<const double> f, double h) {
  const double fine = simpson_samples(f, h);
  std::vector<double> half;
  for (std::size_t i = 0; i < f.size(); i += 2) half.push_back(f[i]);
  const double coarse = simpson_samples(half, 2.0 * h);
  const double rich = (fine - coarse) / 15.0;
  if (std::abs(rich) > 1e-8 * std::max(std::abs(fine), 1e-300))
    throw QuadratureError("longitudinal integral not resolved by the profile samples",
                          {fine + rich, std::abs(rich), static_cast<int>(f.size())});
  return fine + rich;
}

// Running integral from x[0]; third-order local rule on each panel.
std::vector<double> cumulative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double piece;
    if (i + 2 < n)
      piece = h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
    else
      piece = h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
    c[i + 1] = c[i] + piece;
  }
  return c;
}

}  // namespace

SteadyState1D steady_state_1d(const FreeEnergyProfile& prof, double beta, double mu1, double mu2,
                              double periodic_tol) {
  const std::size_t n = prof.x.size();
  if (n < 513 || (n - 1) % 4 != 0)
    throw std::invalid_argument("steady_state_1d needs >= 513 samples with (n - 1) % 4 == 0");
  const double h = prof.x[1] - prof.x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(prof.x[i] - prof.x[i - 1] - h) > 1e-9 * h)
      throw std::invalid_argument("steady_state_1d needs uniform samples");

  const double lam = prof.lambda;
  const double z1 = std::exp(beta * mu1);
  const double z2 = std::exp(beta * mu2);

  std::vector<double> e_a0(n), e_a0_f(n), e_f(n);
  for (std::size_t i = 0; i < n; ++i) {
    e_a0[i] = std::exp(prof.a0[i]);
    e_a0_f[i] = e_a0[i] * prof.f_lambda[i];
    e_f[i] = std::exp(prof.total(i));
  }
  const double i0 = integrate_samples(e_a0, h);
  const double i1 = integrate_samples(e_a0_f, h);
  const double iF = integrate_samples(e_f, h);

  const double b1 = prof.rho_lambda.front() + prof.f_lambda.front();
  const double b2 = prof.rho_lambda.back() + prof.f_lambda.back();

  SteadyState1D out;
  FluxResult& fr = out.flux;
  fr.periodic_simplification = std::abs(prof.a0.front() - prof.a0.back()) <= periodic_tol &&
                               std::abs(prof.f_lambda.front() - prof.f_lambda.back()) <= periodic_tol &&
                               std::abs(prof.rho_lambda.front() - prof.rho_lambda.back()) <= periodic_tol;
  fr.j_cl_over_D = (z1 - z2) / i0;
  if (fr.periodic_simplification) {
    fr.j_lambda = b1 - i1 / i0;
  } else if (z1 != z2) {
    // first-order coefficient of the general boundary formula
    fr.j_lambda = (z1 * b1 - z2 * b2) / (z1 - z2) - i1 / i0;
  } else {
    fr.j_lambda = 0.0;
  }
  fr.j_total_over_D = fr.j_cl_over_D * (1.0 + lam * fr.j_lambda);

  // boundary densities rho_i = z_i exp(-beta A0)(1 + Lambda rho_Lambda)
  const double rho1 = z1 * std::exp(-prof.a0.front()) * (1.0 + lam * prof.rho_lambda.front());
  const double rho2 = z2 * std::exp(-prof.a0.back()) * (1.0 + lam * prof.rho_lambda.back());
  const double pi_const = rho1 * e_f.front();
  out.j_full_over_D = (pi_const - rho2 * e_f.back()) / iF;

  const auto run = cumulative(e_f, h);
  out.x = prof.x;
  out.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.rho[i] = (-out.j_full_over_D * run[i] + pi_const) / e_f[i];
  return out;
}

}  // namespace qfj
