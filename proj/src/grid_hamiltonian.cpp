#include "qfj/grid_hamiltonian.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <complex>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qfj {

BoundaryX parse_boundary(const std::string& s) {
  if (s == "periodic") return BoundaryX::periodic;
  if (s == "open") return BoundaryX::open;
  throw ParameterError("boundary must be 'periodic' or 'open', got '" + s + "'");
}

std::string to_string(BoundaryX bc) { return bc == BoundaryX::periodic ? "periodic" : "open"; }

GridSpec build_grid(const ChannelParams& p, int Mx, int My, BoundaryX bc,
                    std::optional<double> Ycut) {
  p.validate();
  if (Mx < 2) throw ParameterError("Mx must be at least 2");
  if (My < 3 || My % 2 == 0) throw ParameterError("My must be odd and at least 3");
  const DerivedScales s = derive_scales(p);
  GridSpec g;
  g.Mx = Mx;
  g.My = My;
  g.L = p.L;
  g.bc_x = bc;
  if (Ycut) {
    if (!(*Ycut >= 2.0 * s.L_y))
      throw ParameterError("Ycut override must be at least 2 L_y = " + std::to_string(2.0 * s.L_y));
    g.Ycut = *Ycut;
  } else {
    g.Ycut = 4.0 * std::max(s.L_y, s.L_omega);
  }
  return g;
}

HamiltonianMatrix assemble_hamiltonian(const GridSpec& g, const PotentialFn& U, double hbar,
                                       double mass) {
  if (g.Mx < 1 || g.My < 1) throw ParameterError("empty grid");
  HamiltonianMatrix h;
  h.grid = g;
  const double dx = g.dx();
  const double dy = g.dy();
  h.Jx = hbar * hbar / (2.0 * mass * dx * dx);
  h.Jy = hbar * hbar / (2.0 * mass * dy * dy);
  const int N = g.size();

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(N) * 5);
  for (int i = 0; i < g.Mx; ++i) {
    for (int j = 0; j < g.My; ++j) {
      const int a = g.index(i, j);
      t.emplace_back(a, a, 2.0 * h.Jx + 2.0 * h.Jy + U(g.x(i), g.y(j)));
      if (j + 1 < g.My) {
        t.emplace_back(a, g.index(i, j + 1), -h.Jy);
        t.emplace_back(g.index(i, j + 1), a, -h.Jy);
      }
      int inext = i + 1;
      if (inext == g.Mx) {
        if (g.bc_x != BoundaryX::periodic || g.Mx < 2) continue;
        inext = 0;
      }
      t.emplace_back(a, g.index(inext, j), -h.Jx);
      t.emplace_back(g.index(inext, j), a, -h.Jx);
    }
  }
  h.H.resize(N, N);
  h.H.setFromTriplets(t.begin(), t.end());
  return h;
}

HamiltonianMatrix assemble_hamiltonian(const GridSpec& g, const ChannelParams& p) {
  return assemble_hamiltonian(
      g, [&p](double x, double y) { return potential_eval(p, x, y); }, p.hbar, p.mass);
}

SpectralDecomposition diagonalize(const Eigen::MatrixXd& dense) {
  const auto n = dense.rows();
  if (n != dense.cols()) throw EigenSolverError("Hamiltonian is not square");
  if (n > kMaxDenseDimension)
    throw EigenSolverError("dimension " + std::to_string(n) + " exceeds the dense limit " +
                           std::to_string(kMaxDenseDimension) +
                           "; reduce Mx or My (typical runs use 300-1500 sites)");
  if (!dense.allFinite()) throw EigenSolverError("Hamiltonian has non-finite entries");
  SpectralDecomposition s;
  s.modes = dense;
  s.energies.resize(n);
  const lapack_int m = static_cast<lapack_int>(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', m, s.modes.data(), m, s.energies.data());
  if (info != 0) {
    std::ostringstream os;
    os << "symmetric eigensolver failed (info = " << info << ", N = " << n
       << ", max |H_ij| = " << dense.cwiseAbs().maxCoeff() << ")";
    throw EigenSolverError(os.str());
  }
  return s;
}

SpectralDecomposition diagonalize(const HamiltonianMatrix& h) {
  if (h.H.rows() > kMaxDenseDimension)
    throw EigenSolverError("dimension " + std::to_string(h.H.rows()) + " exceeds the dense limit " +
                           std::to_string(kMaxDenseDimension) +
                           "; reduce Mx or My (typical runs use 300-1500 sites)");
  return diagonalize(Eigen::MatrixXd(h.H));
}

std::string spectrum_key(const ChannelParams& p, const GridSpec& g) {
  // FNV-1a over the raw bytes of everything the matrix depends on
  const double vals[] = {p.k0, p.k1, p.L, p.hbar, p.mass, g.L, g.Ycut};
  const int ints[] = {g.Mx, g.My, static_cast<int>(g.bc_x)};
  std::uint64_t hsh = 1469598103934665603ULL;
  auto mix = [&hsh](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < n; ++k) {
      hsh ^= b[k];
      hsh *= 1099511628211ULL;
    }
  };
  mix(vals, sizeof vals);
  mix(ints, sizeof ints);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

std::string SpectrumCache::path_for(const std::string& key) const {
  return (std::filesystem::path(dir_) / ("spectrum_" + key + ".bin")).string();
}

namespace {
constexpr char kMagic[8] = {'Q', 'F', 'J', 'S', 'P', 'E', 'C', '1'};
}

std::optional<SpectralDecomposition> SpectrumCache::load(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::int64_t n = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kMagic, 8) != 0 || n <= 0 || n > kMaxDenseDimension)
    return std::nullopt;
  SpectralDecomposition s;
  s.energies.resize(n);
  s.modes.resize(n, n);
  in.read(reinterpret_cast<char*>(s.energies.data()), n * sizeof(double));
  in.read(reinterpret_cast<char*>(s.modes.data()), n * n * sizeof(double));
  if (!in) return std::nullopt;
  return s;
}

void SpectrumCache::store(const std::string& key, const SpectralDecomposition& s) const {
  std::filesystem::create_directories(dir_);
  const std::string final_path = path_for(key);
  const std::string tmp = final_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    const std::int64_t n = s.dimension();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(s.energies.data()), n * sizeof(double));
    out.write(reinterpret_cast<const char*>(s.modes.data()), n * n * sizeof(double));
    if (!out) throw std::runtime_error("cannot write spectrum cache " + tmp);
  }
  std::filesystem::rename(tmp, final_path);
}

SpectralDecomposition cached_spectrum(const ChannelParams& p, const GridSpec& g,
                                      const SpectrumCache* cache) {
  const std::string key = spectrum_key(p, g);
  if (cache) {
    if (auto hit = cache->load(key)) return *hit;
  }
  SpectralDecomposition s = diagonalize(assemble_hamiltonian(g, p));
  if (cache) cache->store(key, s);
  return s;
}

}  // namespace qfj
