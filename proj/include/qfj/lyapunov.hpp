#pragma once

// Continuous Lyapunov equations (A + a I) X + X (A + a I)^H = C for complex A
// and real shift a, by Bartels-Stewart on one complex Schur form.

#include <Eigen/Dense>

namespace qfj {

class LyapunovSolver {
public:
  explicit LyapunovSolver(const Eigen::MatrixXcd& A);

  /// Throws std::runtime_error when the shifted spectrum makes the
  /// equation singular (lambda_i + conj(lambda_j) + 2a = 0).
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& C, double shift = 0.0) const;

  const Eigen::MatrixXcd& schur_T() const { return T_; }
  const Eigen::MatrixXcd& schur_U() const { return U_; }

private:
  Eigen::MatrixXcd T_;
  Eigen::MatrixXcd U_;
};

/// Vectorized (I kron A + conj(A) kron I) vec X = vec C; dense, for small N only.
Eigen::MatrixXcd solve_lyapunov_kronecker(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& C);

inline constexpr int kKroneckerMaxN = 48;

}  // namespace qfj
