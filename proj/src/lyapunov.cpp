#include "qfj/lyapunov.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cmath>
#include <stdexcept>
#include <string>

namespace qfj {

LyapunovSolver::LyapunovSolver(const Eigen::MatrixXcd& A) : T_(A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  if (A.rows() != A.cols()) throw std::invalid_argument("Lyapunov: A must be square");
  U_.resize(n, n);
  Eigen::VectorXcd w(n);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, T_.data(), n, &sdim, w.data(),
                    U_.data(), n);
  if (info != 0)
    throw std::runtime_error("complex Schur decomposition failed, info = " + std::to_string(info));
}

namespace {

using CRef = Eigen::Ref<const Eigen::MatrixXcd, 0, Eigen::OuterStride<>>;
using MRef = Eigen::Ref<Eigen::MatrixXcd, 0, Eigen::OuterStride<>>;
constexpr Eigen::Index kBlock = 64;

// Ta Y + Y Tb^H = C in place, Ta and Tb upper triangular; recursive halving
// keeps the bulk of the work in matrix products.
void triangular_sylvester(CRef Ta, CRef Tb, MRef C) {
  const Eigen::Index m = Ta.rows(), n = Tb.rows();
  if (m == 0 || n == 0) return;
  if (m <= kBlock && n <= kBlock) {
    double scale = 1.0;
    const lapack_int info = LAPACKE_ztrsyl(
        LAPACK_COL_MAJOR, 'N', 'C', 1, static_cast<lapack_int>(m), static_cast<lapack_int>(n),
        Ta.data(), static_cast<lapack_int>(Ta.outerStride()), Tb.data(),
        static_cast<lapack_int>(Tb.outerStride()), C.data(),
        static_cast<lapack_int>(C.outerStride()), &scale);
    if (info < 0) throw std::runtime_error("ztrsyl argument error " + std::to_string(info));
    if (!(scale > 0.0)) throw std::runtime_error("Lyapunov equation is singular for this shift");
    if (scale != 1.0) C /= scale;
    return;
  }
  if (m >= n) {
    const Eigen::Index h = m / 2;
    triangular_sylvester(Ta.bottomRightCorner(m - h, m - h), Tb, C.bottomRows(m - h));
    C.topRows(h).noalias() -= Ta.topRightCorner(h, m - h) * C.bottomRows(m - h);
    triangular_sylvester(Ta.topLeftCorner(h, h), Tb, C.topRows(h));
  } else {
    const Eigen::Index h = n / 2;
    triangular_sylvester(Ta, Tb.bottomRightCorner(n - h, n - h), C.rightCols(n - h));
    C.leftCols(h).noalias() -= C.rightCols(n - h) * Tb.topRightCorner(h, n - h).adjoint();
    triangular_sylvester(Ta, Tb.topLeftCorner(h, h), C.leftCols(h));
  }
}

}  // namespace

Eigen::MatrixXcd LyapunovSolver::solve(const Eigen::MatrixXcd& C, double shift) const {
  // T Y + Y T^H = U^H C U with the shift folded into the triangular factor
  Eigen::MatrixXcd Y = U_.adjoint() * C * U_;
  Eigen::MatrixXcd T = T_;
  if (shift != 0.0) T.diagonal().array() += shift;
  triangular_sylvester(T, T, Y);
  if (!Y.allFinite()) throw std::runtime_error("Lyapunov solve produced non-finite values");
  return U_ * Y * U_.adjoint();
}

Eigen::MatrixXcd solve_lyapunov_kronecker(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& C) {
  const Eigen::Index n = A.rows();
  if (n > kKroneckerMaxN)
    throw std::invalid_argument("Kronecker Lyapunov solve limited to N <= " +
                                std::to_string(kKroneckerMaxN) + " (N^2 unknowns, dense)");
  const Eigen::Index n2 = n * n;
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n2, n2);
  // vec(A X) = (I kron A) vec X ; vec(X A^H) = (conj(A) kron I) vec X
  for (Eigen::Index b = 0; b < n; ++b) K.block(b * n, b * n, n, n) += A;
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index c = 0; c < n; ++c)
      if (A(b, c) != 0.0)
        K.block(b * n, c * n, n, n).diagonal().array() += std::conj(A(b, c));
  Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(C.data(), n2);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(K);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw std::runtime_error("Kronecker Lyapunov system is singular (rcond " +
                             std::to_string(rcond) + ")");
  Eigen::VectorXcd x = lu.solve(rhs);
  return Eigen::Map<Eigen::MatrixXcd>(x.data(), n, n);
}

}  // namespace qfj
