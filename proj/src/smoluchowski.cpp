#include "qfj/smoluchowski.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qfj {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

double diffusion_factor(double two_l_curv, const char* axis, double where) {
  const double den = 1.0 - two_l_curv;
  if (!(den > 0.0)) {
    std::ostringstream os;
    os << "quantum diffusion factor along " << axis << " is non-positive at " << where
       << " (1 - 2 Lambda L^2 d2(beta U) = " << den << "); Lambda is outside the validity region";
    throw ValidityError(os.str());
  }
  return 1.0 / den;
}

struct MarchResult {
  int steps = 0;
  double rate = 0.0;
};

MarchResult implicit_march(const Eigen::SparseMatrix<double>& G, Eigen::VectorXd& p,
                           const SteadyOptions& opt) {
  const Eigen::Index n = G.rows();
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> M = I - opt.dt0 * G;
  lu.analyzePattern(M);
  double dt = opt.dt0;
  const double total = p.sum();
  MarchResult r;
  for (int s = 1; s <= opt.max_steps; ++s) {
    M = I - dt * G;
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("implicit step factorization failed at dt = " + std::to_string(dt));
    Eigen::VectorXd next = lu.solve(p);
    // large dt makes I - dt G nearly singular; LU roundoff then leaks mass
    next *= total / next.sum();
    r.steps = s;
    r.rate = (next - p).cwiseAbs().maxCoeff() / (dt * next.cwiseAbs().maxCoeff());
    p = std::move(next);
    if (r.rate < opt.rate_tol) return r;
    dt *= opt.growth;
  }
  throw std::runtime_error("step-size control failed: steady state not reached in " +
                           std::to_string(opt.max_steps) + " steps (last rate " +
                           std::to_string(r.rate) + ")");
}

void normalize(std::vector<double>& v, double h) {
  double s = 0.0;
  for (double x : v) s += x * h;
  for (double& x : v) x /= s;
}

}  // namespace

Equilibrium1D solve_equilibrium_1d(const Potential1D& U, double Lambda, double beta,
                                   double length_scale, double half_width, int cells) {
  if (cells < 8) throw ParameterError("1D solve needs at least 8 cells");
  const double l = Lambda * length_scale * length_scale;
  Equilibrium1D out;
  out.dy = 2.0 * half_width / cells;
  const double h = out.dy;
  std::vector<double> D(cells);
  for (int j = 0; j < cells; ++j) {
    const double y = -half_width + h * (j + 0.5);
    out.y.push_back(y);
    D[j] = diffusion_factor(2.0 * l * beta * U.d2U(y), "y", y);
    const double u1 = U.dU(y), u2 = U.d2U(y);
    out.closed_form.push_back(std::exp(-beta * U.U(y)) *
                              (1.0 - 2.0 * l * beta * u2 + l * beta * beta * u1 * u1));
    out.exact.push_back((1.0 - 2.0 * l * beta * u2) *
                        std::exp(-beta * U.U(y) + l * beta * beta * u1 * u1));
  }
  normalize(out.closed_form, h);
  normalize(out.exact, h);

  // face j+1/2 between cells j and j+1; flux = -(D p)'/h - beta U' avg(p)
  Triplets t;
  for (int j = 0; j + 1 < cells; ++j) {
    const double yf = -half_width + h * (j + 1);
    const double drift = beta * U.dU(yf);
    const double a = D[j] / h - 0.5 * drift;
    const double b = -D[j + 1] / h - 0.5 * drift;
    // cell j loses the face flux, cell j+1 gains it
    t.emplace_back(j, j, -a / h);
    t.emplace_back(j, j + 1, -b / h);
    t.emplace_back(j + 1, j, a / h);
    t.emplace_back(j + 1, j + 1, b / h);
  }
  Eigen::SparseMatrix<double> G(cells, cells);
  G.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd p = Eigen::VectorXd::Constant(cells, 1.0 / (2.0 * half_width));
  SteadyOptions opt;
  opt.dt0 = 1e-3 * h * h;
  out.steps = implicit_march(G, p, opt).steps;
  out.pde.assign(p.data(), p.data() + cells);
  normalize(out.pde, h);
  return out;
}

double PdeField::mass() const { return p.sum() * grid.dx() * grid.dy(); }

std::vector<double> PdeField::marginal() const {
  std::vector<double> m(grid.Mx, 0.0);
  for (int i = 0; i < grid.Mx; ++i)
    for (int j = 0; j < grid.My; ++j) m[i] += p(grid.index(i, j)) * grid.dy();
  return m;
}

Smoluchowski2D::Smoluchowski2D(const ChannelParams& p, double Lambda, Grid2D grid) {
  p.validate();
  if (grid.Mx < 3 || grid.My < 3) throw ParameterError("2D grid needs at least 3 x 3 cells");
  f_.grid = grid;
  const DerivedScales s = derive_scales(p);
  const double c = 2.0 * Lambda * s.L_y * s.L_y * p.beta;
  const int N = grid.size();
  f_.Dx.resize(N);
  f_.Dy.resize(N);
  for (int i = 0; i < grid.Mx; ++i)
    for (int j = 0; j < grid.My; ++j) {
      const double x = grid.x(i), y = grid.y(j);
      f_.Dx[grid.index(i, j)] = diffusion_factor(c * 0.5 * p.stiffness_dxx(x) * y * y, "x", x);
      f_.Dy[grid.index(i, j)] = diffusion_factor(c * p.stiffness(x), "y", x);
    }
  const double b = p.beta;
  assemble([&](double x, double y) { return b * 0.5 * p.stiffness_dx(x) * y * y; },
           [&](double x, double y) { return b * p.stiffness(x) * y; });
  f_.p = Eigen::VectorXd::Constant(N, 1.0 / (grid.L * 2.0 * grid.Ycut));
}

Smoluchowski2D Smoluchowski2D::flat(Grid2D grid) {
  Smoluchowski2D s;
  s.f_.grid = grid;
  const int N = grid.size();
  s.f_.Dx.assign(N, 1.0);
  s.f_.Dy.assign(N, 1.0);
  auto zero = [](double, double) { return 0.0; };
  s.assemble(zero, zero);
  s.f_.p = Eigen::VectorXd::Constant(N, 1.0 / (grid.L * 2.0 * grid.Ycut));
  return s;
}

void Smoluchowski2D::assemble(const std::function<double(double, double)>& bUx,
                              const std::function<double(double, double)>& bUy) {
  const Grid2D& g = f_.grid;
  const int N = g.size();
  const double dx = g.dx(), dy = g.dy();
  const int nfx = g.Mx * g.My;
  const int nfy = g.Mx * (g.My - 1);
  Triplets tx, ty;

  // x faces: face (i, j) sits between cell i and i+1 (periodic)
  for (int i = 0; i < g.Mx; ++i) {
    const int ip = (i + 1) % g.Mx;
    const double xf = dx * (i + 1);
    for (int j = 0; j < g.My; ++j) {
      const int face = i * g.My + j;
      const int a = g.index(i, j), b = g.index(ip, j);
      const double drift = bUx(xf, g.y(j));
      tx.emplace_back(face, a, f_.Dx[a] / dx - 0.5 * drift);
      tx.emplace_back(face, b, -f_.Dx[b] / dx - 0.5 * drift);
    }
  }
  // y faces: face (i, j) between rows j and j+1; walls carry no flux
  for (int i = 0; i < g.Mx; ++i) {
    for (int j = 0; j + 1 < g.My; ++j) {
      const int face = i * (g.My - 1) + j;
      const int a = g.index(i, j), b = g.index(i, j + 1);
      const double drift = bUy(g.x(i), g.y(j) + 0.5 * dy);
      ty.emplace_back(face, a, f_.Dy[a] / dy - 0.5 * drift);
      ty.emplace_back(face, b, -f_.Dy[b] / dy - 0.5 * drift);
    }
  }
  Fx_.resize(nfx, N);
  Fx_.setFromTriplets(tx.begin(), tx.end());
  Fy_.resize(nfy, N);
  Fy_.setFromTriplets(ty.begin(), ty.end());

  // divergence: each face flux leaves the lower cell and enters the upper one
  Eigen::SparseMatrix<double> Divx(N, nfx), Divy(N, nfy);
  Triplets dxt, dyt;
  for (int i = 0; i < g.Mx; ++i) {
    const int ip = (i + 1) % g.Mx;
    for (int j = 0; j < g.My; ++j) {
      const int face = i * g.My + j;
      dxt.emplace_back(g.index(i, j), face, -1.0 / dx);
      dxt.emplace_back(g.index(ip, j), face, 1.0 / dx);
    }
    for (int j = 0; j + 1 < g.My; ++j) {
      const int face = i * (g.My - 1) + j;
      dyt.emplace_back(g.index(i, j), face, -1.0 / dy);
      dyt.emplace_back(g.index(i, j + 1), face, 1.0 / dy);
    }
  }
  Divx.setFromTriplets(dxt.begin(), dxt.end());
  Divy.setFromTriplets(dyt.begin(), dyt.end());
  G_ = Divx * Fx_ + Divy * Fy_;
  G_.makeCompressed();
  cached_dt_ = -1.0;
  lu_.reset();
}

void Smoluchowski2D::step(double dt) {
  if (dt != cached_dt_) {
    Eigen::SparseMatrix<double> I(G_.rows(), G_.cols());
    I.setIdentity();
    Eigen::SparseMatrix<double> M = I - dt * G_;
    if (!lu_) lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(M);
    if (lu_->info() != Eigen::Success) throw std::runtime_error("implicit step factorization failed");
    cached_dt_ = dt;
  }
  f_.p = lu_->solve(f_.p).eval();
}

double Smoluchowski2D::max_face_flux() const {
  const double a = (Fx_ * f_.p).cwiseAbs().maxCoeff();
  const double b = Fy_.rows() ? (Fy_ * f_.p).cwiseAbs().maxCoeff() : 0.0;
  return std::max(a, b);
}

SteadyReport march_to_steady(Smoluchowski2D& s, const SteadyOptions& opt) {
  SteadyReport rep;
  const double m0 = s.field().mass();
  rep.initial_flux = s.max_face_flux();
  const MarchResult r = implicit_march(s.generator(), s.field().p, opt);
  rep.steps = r.steps;
  rep.final_rate = r.rate;
  rep.final_flux = s.max_face_flux();
  rep.mass_drift = std::abs(s.field().mass() - m0) / m0;
  return rep;
}

Steady2DResult solve_steady_2d(const ChannelParams& p, double Lambda, const Grid2D& grid,
                               const SteadyOptions& opt) {
  Smoluchowski2D s(p, Lambda, grid);
  SteadyOptions o = opt;
  o.dt0 = std::min(opt.dt0, 0.1 * std::min(grid.dx() * grid.dx(), grid.dy() * grid.dy()));
  Steady2DResult r;
  r.report = march_to_steady(s, o);
  r.field = s.field();
  return r;
}

std::vector<double> fj_first_order_marginal(const ChannelParams& p, double Lambda,
                                            const std::vector<double>& xs, double dx) {
  std::vector<double> rho;
  for (double x : xs) {
    const double r = p.stiffness(x) / p.k0;
    rho.push_back((1.0 - 2.0 * Lambda * r) / std::sqrt(r));
  }
  normalize(rho, dx);
  return rho;
}

}  // namespace qfj
