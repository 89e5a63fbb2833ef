#pragma once

// Tight-binding discretization of H = p^2/2m + U(x, y) on an Mx x My grid.
// Site (i, j) has flat index i * My + j with i = 0..Mx-1 along the channel.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "qfj/core_model.hpp"

namespace qfj {

enum class BoundaryX { periodic, open };

BoundaryX parse_boundary(const std::string& s);
std::string to_string(BoundaryX bc);

struct GridSpec {
  int Mx = 0;
  int My = 0;
  double L = 1.0;
  double Ycut = 0.0;
  BoundaryX bc_x = BoundaryX::periodic;

  double dx() const { return L / Mx; }
  double dy() const { return 2.0 * Ycut / My; }
  double x(int i) const { return dx() * (i + 0.5); }
  double y(int j) const { return dy() * (j - (My - 1) / 2); }
  int size() const { return Mx * My; }
  int index(int i, int j) const { return i * My + j; }
};

/// Ycut defaults to 4 max(L_y, L_omega). An explicit Ycut below 2 L_y throws.
GridSpec build_grid(const ChannelParams& p, int Mx, int My, BoundaryX bc,
                    std::optional<double> Ycut = std::nullopt);

using PotentialFn = std::function<double(double, double)>;

struct HamiltonianMatrix {
  Eigen::SparseMatrix<double> H;
  double Jx = 0.0;
  double Jy = 0.0;
  GridSpec grid;
};

HamiltonianMatrix assemble_hamiltonian(const GridSpec& g, const ChannelParams& p);
HamiltonianMatrix assemble_hamiltonian(const GridSpec& g, const PotentialFn& U, double hbar,
                                       double mass);

struct SpectralDecomposition {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd modes;     // column k is phi_k over flat site index
  int dimension() const { return static_cast<int>(energies.size()); }
};

class EigenSolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDenseDimension = 4096;

SpectralDecomposition diagonalize(const HamiltonianMatrix& h);
SpectralDecomposition diagonalize(const Eigen::MatrixXd& dense);

/// Stable key for (params, grid) used by the on-disk spectrum cache.
std::string spectrum_key(const ChannelParams& p, const GridSpec& g);

/// Binary spectrum files in `dir`, one per key. Missing or corrupt files are
/// treated as absent.
class SpectrumCache {
public:
  explicit SpectrumCache(std::string dir) : dir_(std::move(dir)) {}
  std::optional<SpectralDecomposition> load(const std::string& key) const;
  void store(const std::string& key, const SpectralDecomposition& s) const;
  std::string path_for(const std::string& key) const;

private:
  std::string dir_;
};

/// Diagonalizes through the cache when one is given.
SpectralDecomposition cached_spectrum(const ChannelParams& p, const GridSpec& g,
                                      const SpectrumCache* cache);

}  // namespace qfj
