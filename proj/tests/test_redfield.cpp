#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "qfj/lyapunov.hpp"
#include "qfj/redfield.hpp"

using namespace qfj;
using cd = std::complex<double>;

namespace {

struct Lattice {
  GridSpec grid;
  Eigen::MatrixXd H;
  SpectralDecomposition eig;
  double beta = 1.0;
};

Lattice lattice(int Mx, int My, double k1, double ratio = 3.0, double Lambda = 0.05) {
  ChannelParams p;
  p.k1 = k1;
  p.k0 = k0_for_length_ratio(p, ratio);
  p.beta = beta_for_lambda(p, Lambda);
  Lattice l;
  l.grid = build_grid(p, Mx, My, BoundaryX::open);
  l.H = Eigen::MatrixXd(assemble_hamiltonian(l.grid, p).H);
  l.eig = diagonalize(l.H);
  l.beta = p.beta;
  return l;
}

RedfieldGenerator two_leads(const Lattice& l, double mu_l, double mu_r, double gamma) {
  const LeadSpec leads[] = {{LeadSide::left, mu_l, gamma, l.beta}, {LeadSide::right, mu_r, gamma, l.beta}};
  return build_generator(l.H, l.eig, l.grid, leads);
}

// chemical potential putting the lowest mode at occupation n
double mu_for(const Lattice& l, double n) { return l.eig.energies(0) + std::log(n) / l.beta; }

Eigen::MatrixXcd random_hermitian(int n, std::mt19937& rng) {
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cd(d(rng), d(rng));
  return (m + m.adjoint()) / 2.0;
}

}  // namespace

TEST_CASE("single-site bath coefficients") {
  GridSpec g;
  g.Mx = 1;
  g.My = 1;
  g.Ycut = 0.5;
  g.bc_x = BoundaryX::open;
  SpectralDecomposition eig;
  eig.energies = Eigen::VectorXd::Constant(1, 0.7);
  eig.modes = Eigen::MatrixXd::Ones(1, 1);
  const auto b = bath_coefficients(eig, g, {LeadSide::left, 0.2, 0.3, 2.0});
  CHECK(b.f(0, 0) == doctest::Approx(0.3 * std::exp(-2.0 * 0.5)).epsilon(1e-15));
  CHECK(b.g(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  const auto empty = bath_coefficients(eig, g, {LeadSide::left, -1e3, 0.3, 2.0});
  CHECK(empty.f(0, 0) == 0.0);
}

TEST_CASE("completeness of the g kernel") {
  const Lattice l = lattice(3, 3, 0.3);
  for (LeadSide side : {LeadSide::left, LeadSide::right}) {
    const auto b = bath_coefficients(l.eig, l.grid, {side, 0.0, 0.7, l.beta});
    REQUIRE(b.edge.size() == 3);
    for (int e = 0; e < 3; ++e)
      for (int s = 0; s < l.grid.size(); ++s)
        CHECK(b.g(e, s) == doctest::Approx(s == b.edge[e] ? 0.7 : 0.0).scale(1.0).epsilon(1e-13));
    const int col = side == LeadSide::left ? 0 : 2;
    for (int e = 0; e < 3; ++e) CHECK(b.edge[e] == l.grid.index(col, e));
  }
}

TEST_CASE("kinetic equation structure") {
  const Lattice l = lattice(4, 3, 0.3);
  const double gamma = 0.1;
  const auto gen = two_leads(l, mu_for(l, 0.01), mu_for(l, 0.005), gamma);
  std::mt19937 rng(7);
  for (int t = 0; t < 5; ++t) {
    const auto s = random_hermitian(l.grid.size(), rng);
    const auto r = kinetic_rhs(s, gen);
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * r.cwiseAbs().maxCoeff());
    // commutator plus the two dissipators
    const Eigen::MatrixXcd coh = cd(0, -1) * (l.H.cast<cd>() * s - s * l.H.cast<cd>());
    const Eigen::MatrixXcd sum = coh + dissipator(s, gen.baths[0], 1.0) + dissipator(s, gen.baths[1], 1.0);
    CHECK((r - sum).cwiseAbs().maxCoeff() < 1e-12 * r.cwiseAbs().maxCoeff());
  }
  // empty system: only injection on lead columns
  const auto q = kinetic_rhs(Eigen::MatrixXcd::Zero(l.grid.size(), l.grid.size()), gen);
  for (int a = 0; a < l.grid.size(); ++a)
    for (int b = 0; b < l.grid.size(); ++b) {
      const int ia = a / l.grid.My, ib = b / l.grid.My;
      const bool edge_a = ia == 0 || ia == l.grid.Mx - 1, edge_b = ib == 0 || ib == l.grid.Mx - 1;
      if (!edge_a && !edge_b) CHECK(std::abs(q(a, b)) == 0.0);
    }
  CHECK(q.diagonal().real().maxCoeff() > 0.0);
}

TEST_CASE("closed system conserves particles") {
  const Lattice l = lattice(4, 3, 0.3);
  RedfieldGenerator gen;
  gen.A = std::complex<double>(0, -1) * l.H.cast<cd>();
  gen.Q = Eigen::MatrixXcd::Zero(l.grid.size(), l.grid.size());
  std::mt19937 rng(11);
  const auto s = random_hermitian(l.grid.size(), rng);
  CHECK(std::abs(kinetic_rhs(s, gen).trace()) < 1e-10);
}

TEST_CASE("single site relaxes to the Bose occupation of its lead") {
  GridSpec g;
  g.Mx = 1;
  g.My = 1;
  g.Ycut = 0.5;
  g.bc_x = BoundaryX::open;
  SpectralDecomposition eig;
  eig.energies = Eigen::VectorXd::Constant(1, 1.0);
  eig.modes = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Constant(1, 1, 1.0);
  for (double n : {1e-4, 1e-2, 0.3}) {
    const LeadSpec lead{LeadSide::left, 1.0 + std::log(n), 0.2, 1.0};
    const auto gen = build_generator(H, eig, g, std::span<const LeadSpec>(&lead, 1));
    for (SteadyMethod m : {SteadyMethod::direct, SteadyMethod::schur, SteadyMethod::relax}) {
      SteadyStateOptions o;
      o.method = m;
      const auto ss = steady_state(gen, o);
      CHECK(ss.sigma(0, 0).real() == doctest::Approx(n / (1 - n)).epsilon(1e-9));
      CHECK(std::abs(ss.sigma(0, 0).real() - n) <= 1.01 * n * n / (1 - n));
    }
  }
}

TEST_CASE("equal leads: zero current and a thermal fixed point") {
  const Lattice l = lattice(6, 3, 0.0);
  const double gamma = 0.05;
  const double mu = mu_for(l, 1e-3);
  const auto gen = two_leads(l, mu, mu, gamma);
  const auto ss = steady_state(gen);
  CHECK(std::abs(current(ss, gen, LeadSide::left)) <= 1e-8 * gamma);
  CHECK(std::abs(current(ss, gen, LeadSide::right)) <= 1e-8 * gamma);
  const Eigen::MatrixXcd Hc = l.H.cast<cd>();
  const Eigen::MatrixXcd comm = Hc * ss.sigma - ss.sigma * Hc;
  CHECK(comm.cwiseAbs().maxCoeff() <= 1e-8 * Hc.cwiseAbs().maxCoeff() * ss.sigma.cwiseAbs().maxCoeff());
  // the eigenbasis occupations are Bose factors
  const Eigen::MatrixXcd d = l.eig.modes.cast<cd>().adjoint() * ss.sigma * l.eig.modes.cast<cd>();
  for (int k = 0; k < 5; ++k) {
    const double n = std::exp(-l.beta * (l.eig.energies(k) - mu));
    CHECK(d(k, k).real() == doctest::Approx(n / (1 - n)).epsilon(1e-8));
  }
}

TEST_CASE("solvers agree on a small lattice") {
  const Lattice l = lattice(6, 3, 0.3);
  const auto gen = two_leads(l, mu_for(l, 1e-3), mu_for(l, 5e-4), 0.05);
  SteadyStateOptions o;
  o.method = SteadyMethod::direct;
  const auto a = steady_state(gen, o);
  o.method = SteadyMethod::relax;
  const auto b = steady_state(gen, o);
  o.method = SteadyMethod::schur;
  const auto c = steady_state(gen, o);
  const double scale = a.sigma.cwiseAbs().maxCoeff();
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() <= 1e-6 * scale);
  CHECK((a.sigma - c.sigma).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  CHECK(a.residual <= a.tolerance);
  CHECK(b.iterations > 0);
}

TEST_CASE("biased steady state: sign, balance and physical density matrix") {
  const Lattice l = lattice(8, 5, 0.3);
  const auto gen = two_leads(l, mu_for(l, 1e-3), mu_for(l, 5e-4), 0.05);
  const auto ss = steady_state(gen);
  const double jl = current(ss, gen, LeadSide::left), jr = current(ss, gen, LeadSide::right);
  CHECK(jl < 0.0);
  CHECK(jr > 0.0);
  CHECK(std::abs(jl + jr) <= 1e-8 * std::max(std::abs(jl), std::abs(jr)));
  const auto d = diagnose(ss.sigma);
  CHECK(d.hermiticity <= 1e-10 * ss.sigma.cwiseAbs().maxCoeff());
  CHECK(d.min_diagonal >= -1e-10);
  CHECK(d.trace > 0.0);
}

TEST_CASE("current is linear in the fugacity difference") {
  const Lattice l = lattice(6, 3, 0.3);
  const double z0 = 1e-4 * std::exp(l.beta * l.eig.energies(0));
  std::vector<double> ratio;
  for (double m : {1.0, 2.0, 3.0, 4.0}) {
    const double dz = 0.2 * z0 * m;
    const auto gen = two_leads(l, std::log(z0 + dz) / l.beta, std::log(z0) / l.beta, 0.05);
    const auto ss = steady_state(gen);
    ratio.push_back(current(ss, gen, LeadSide::right) / dz);
  }
  for (double r : ratio) CHECK(r == doctest::Approx(ratio.front()).epsilon(0.01));
}

TEST_CASE("current refuses an unconverged state") {
  const Lattice l = lattice(4, 3, 0.3);
  const auto gen = two_leads(l, mu_for(l, 1e-3), mu_for(l, 5e-4), 0.05);
  SteadyState bogus;
  bogus.sigma = Eigen::MatrixXcd::Zero(l.grid.size(), l.grid.size());
  bogus.tolerance = 1e-12;
  bogus.residual = 1.0;
  CHECK_THROWS_AS(current(bogus, gen, LeadSide::left), SteadyStateError);
}

TEST_CASE("method and mode names") {
  CHECK(parse_steady_method("relax") == SteadyMethod::relax);
  CHECK(to_string(SteadyMethod::schur) == "schur");
  CHECK(parse_fugacity_mode("direct") == FugacityMode::direct);
  CHECK(to_string(FugacityMode::calibrated) == "calibrated");
  CHECK_THROWS(parse_steady_method("newton"));
  CHECK_THROWS(parse_fugacity_mode("guess"));
}

TEST_CASE("lyapunov solver against the vectorized solve") {
  std::mt19937 rng(3);
  std::normal_distribution<double> d;
  for (int n : {5, 30}) {
    Eigen::MatrixXcd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = cd(d(rng), d(rng)) / std::sqrt(double(n));
    A.diagonal().array() -= 3.0;
    const Eigen::MatrixXcd C = random_hermitian(n, rng);
    const LyapunovSolver s(A);
    const Eigen::MatrixXcd X = s.solve(C);
    const Eigen::MatrixXcd Y = solve_lyapunov_kronecker(A, C);
    CHECK((X - Y).cwiseAbs().maxCoeff() < 1e-10 * Y.cwiseAbs().maxCoeff());
    const Eigen::MatrixXcd Xs = s.solve(C, -0.7);
    Eigen::MatrixXcd As = A;
    As.diagonal().array() -= 0.7;
    CHECK((As * Xs + Xs * As.adjoint() - C).cwiseAbs().maxCoeff() < 1e-10 * C.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("blocked triangular stage on a larger problem") {
  std::mt19937 rng(5);
  std::normal_distribution<double> d;
  const int n = 150;
  Eigen::MatrixXcd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cd(d(rng), d(rng)) / std::sqrt(double(n));
  A.diagonal().array() -= 2.5;
  const Eigen::MatrixXcd C = random_hermitian(n, rng);
  const Eigen::MatrixXcd X = LyapunovSolver(A).solve(C);
  CHECK((A * X + X * A.adjoint() - C).cwiseAbs().maxCoeff() < 1e-10 * C.cwiseAbs().maxCoeff());
  CHECK((X - X.adjoint()).cwiseAbs().maxCoeff() < 1e-10 * X.cwiseAbs().maxCoeff());
  CHECK_THROWS(solve_lyapunov_kronecker(Eigen::MatrixXcd::Identity(kKroneckerMaxN + 1, kKroneckerMaxN + 1),
                                        Eigen::MatrixXcd::Identity(kKroneckerMaxN + 1, kKroneckerMaxN + 1)));
}

TEST_CASE("transport sweep bookkeeping") {
  TransportSetup ts;
  ts.base.k1 = 0.3;
  ts.base.k0 = k0_for_length_ratio(ts.base, 3.0);
  ts.Mx = 8;
  ts.My = 5;
  const std::vector<double> lams = {0.02, 0.05, 0.1};
  for (FugacityMode mode : {FugacityMode::calibrated, FugacityMode::direct}) {
    ts.mode = mode;
    const auto pts = transport_sweep(ts, lams);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].R == 1.0);
    for (const auto& pt : pts) {
      CHECK(pt.error.empty());
      CHECK(pt.J_hat > 0.0);
      CHECK(pt.J_left < 0.0);
      CHECK(pt.mu_left > pt.mu_right);
      CHECK(std::abs(pt.J_left + pt.J_right) <= 1e-8 * std::abs(pt.J_left));
    }
  }
}
