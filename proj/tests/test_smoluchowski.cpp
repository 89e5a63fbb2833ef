#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qfj/fick_jacobs.hpp"
#include "qfj/smoluchowski.hpp"

using namespace qfj;

namespace {

ChannelParams channel(double k1, double Lambda) {
  ChannelParams p;
  p.k1 = k1;
  p.k0 = k0_for_length_ratio(p, 16.0);
  return with_lambda(p, Lambda);
}

Grid2D grid_for(const ChannelParams& p, int Mx, int My) {
  Grid2D g;
  g.Mx = Mx;
  g.My = My;
  g.L = p.L;
  g.Ycut = 4.0 * derive_scales(p).L_y;
  return g;
}

Potential1D harmonic(double k) {
  return {[k](double y) { return 0.5 * k * y * y; }, [k](double y) { return k * y; },
          [k](double) { return k; }};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("1D classical limit is Boltzmann") {
  const double k = 2.0, beta = 1.5;
  const auto e = solve_equilibrium_1d(harmonic(k), 0.0, beta, 1.0, 6.0 / std::sqrt(beta * k), 400);
  double norm = 0.0;
  std::vector<double> boltz;
  for (double y : e.y) boltz.push_back(std::exp(-0.5 * beta * k * y * y));
  for (double v : boltz) norm += v * e.dy;
  for (double& v : boltz) v /= norm;
  CHECK(max_abs_diff(e.closed_form, boltz) < 1e-14);
  CHECK(max_abs_diff(e.exact, boltz) < 1e-14);
  const double peak = *std::max_element(boltz.begin(), boltz.end());
  CHECK(max_abs_diff(e.pde, boltz) < 1e-3 * peak);
}

TEST_CASE("1D closed form for the harmonic well") {
  const double k = 3.0, beta = 0.8, Ly = std::sqrt(2.0 / (beta * k)), lam = 0.03;
  const auto e = solve_equilibrium_1d(harmonic(k), lam, beta, Ly, 5.0 * Ly, 200);
  const double l = lam * Ly * Ly;
  std::vector<double> ref;
  for (double y : e.y)
    ref.push_back(std::exp(-0.5 * beta * k * y * y) * (1 - 2 * l * beta * k + l * std::pow(beta * k * y, 2)));
  double n = 0.0;
  for (double v : ref) n += v * e.dy;
  for (double& v : ref) v /= n;
  CHECK(max_abs_diff(e.closed_form, ref) < 1e-13);
}

TEST_CASE("1D long-time limit agrees with the closed form to second order") {
  const double k = 3.0, beta = 0.8, Ly = std::sqrt(2.0 / (beta * k)), lam = 0.02;
  const auto e = solve_equilibrium_1d(harmonic(k), lam, beta, Ly, 5.0 * Ly, 800);
  const double peak = *std::max_element(e.closed_form.begin(), e.closed_form.end());
  CHECK(max_abs_diff(e.pde, e.closed_form) / peak <= 5 * lam * lam);
  // the resummed exact form is the true fixed point
  CHECK(max_abs_diff(e.pde, e.exact) / peak < 1e-4);
}

TEST_CASE("1D validity guard") {
  const double k = 3.0, beta = 0.8, Ly = std::sqrt(2.0 / (beta * k));
  CHECK_THROWS_AS(solve_equilibrium_1d(harmonic(k), 0.3, beta, Ly, 5.0 * Ly, 100), ValidityError);
}

TEST_CASE("diffusion factors") {
  const ChannelParams p = channel(0.3, 0.05);
  const Grid2D g = grid_for(p, 16, 11);
  Smoluchowski2D s(p, 0.05, g);
  const DerivedScales sc = derive_scales(p);
  const double c = 2 * 0.05 * sc.L_y * sc.L_y * p.beta;
  for (int i = 0; i < g.Mx; i += 5)
    for (int j = 0; j < g.My; j += 3) {
      const int a = g.index(i, j);
      CHECK(s.field().Dy[a] == doctest::Approx(1 / (1 - c * p.stiffness(g.x(i)))).epsilon(1e-14));
      CHECK(s.field().Dx[a] ==
            doctest::Approx(1 / (1 - c * 0.5 * p.stiffness_dxx(g.x(i)) * g.y(j) * g.y(j))).epsilon(1e-14));
      CHECK(s.field().Dx[a] > 0.0);
    }
  CHECK_THROWS_AS(Smoluchowski2D(channel(0.3, 0.3), 0.3, grid_for(channel(0.3, 0.3), 16, 11)), ValidityError);
}

TEST_CASE("mass is conserved per implicit step") {
  const ChannelParams p = channel(0.3, 0.05);
  const Grid2D g = grid_for(p, 16, 41);
  Smoluchowski2D s(p, 0.05, g);
  for (int i = 0; i < g.Mx; ++i)
    for (int j = 0; j < g.My; ++j) s.field().p(g.index(i, j)) *= 1.0 + 0.5 * std::sin(i + 2.0 * j);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
  CHECK((ones.transpose() * s.generator()).cwiseAbs().maxCoeff() <
        1e-12 * Eigen::MatrixXd(s.generator()).cwiseAbs().maxCoeff());
  const double m0 = s.field().mass();
  const double dt = 0.01 * std::min(g.dx() * g.dx(), g.dy() * g.dy());
  for (int n = 0; n < 10000; ++n) s.step(dt);
  CHECK(std::abs(s.field().mass() - m0) / m0 <= 1e-12);
  CHECK(s.field().p.minCoeff() > 0.0);
}

TEST_CASE("flat potential keeps and restores a uniform density") {
  Grid2D g;
  g.Mx = 12;
  g.My = 9;
  g.L = 1.0;
  g.Ycut = 0.5;
  auto s = Smoluchowski2D::flat(g);
  const double u = s.field().p(0);
  s.step(1e-3);
  CHECK((s.field().p.array() - u).abs().maxCoeff() < 1e-13 * u);
  for (int a = 0; a < g.size(); ++a) s.field().p(a) *= 1.0 + 0.3 * std::cos(0.7 * a);
  march_to_steady(s);
  const double mean = s.field().p.mean();
  CHECK((s.field().p.array() - mean).abs().maxCoeff() < 1e-8 * mean);
}

TEST_CASE("separable channel relaxes to a zero-flux state") {
  const ChannelParams p = channel(0.0, 0.05);
  Smoluchowski2D s(p, 0.05, grid_for(p, 8, 41));
  const auto rep = march_to_steady(s);
  CHECK(rep.final_flux <= 1e-8 * rep.initial_flux);
  CHECK(rep.mass_drift <= 1e-12);
}

TEST_CASE("step control failure is reported") {
  const ChannelParams p = channel(0.3, 0.05);
  Smoluchowski2D s(p, 0.05, grid_for(p, 16, 11));
  SteadyOptions o;
  o.max_steps = 3;
  CHECK_THROWS_AS(march_to_steady(s, o), std::runtime_error);
}

TEST_CASE("2D marginals against the reduced densities") {
  for (double lam : {0.0, 0.05}) {
    const ChannelParams p = channel(0.3, lam > 0 ? lam : 0.05);
    const Grid2D g = grid_for(p, 64, 41);
    const auto r = solve_steady_2d(p, lam, g);
    auto m = r.field.marginal();
    double s = 0.0;
    for (double v : m) s += v * g.dx();
    std::vector<double> xs;
    for (int i = 0; i < g.Mx; ++i) xs.push_back(g.x(i));
    const auto ref = fj_first_order_marginal(p, lam, xs, g.dx());
    double worst = 0.0;
    for (int i = 0; i < g.Mx; ++i) worst = std::max(worst, std::abs(m[i] / s / ref[i] - 1));
    CHECK(worst <= (lam == 0.0 ? 0.01 : 0.02));
    CHECK(r.report.mass_drift <= 1e-12);
  }
}
