#include <algorithm>
#include <cmath>

#include "dclink/errors.hpp"
#include "dclink/state_space.hpp"

namespace dclink::lti {

namespace {

// Factor L with W = L L^T for a symmetric positive semidefinite W. Small
// negative eigenvalues from rounding are clamped; anything larger is an
// indefinite gramian.
Matrix psd_factor(const Matrix& W, const char* which) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (W + W.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues();
  const double top = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  if (lam.minCoeff() < -1e-8 * top) throw NumericalError(std::string("indefinite ") + which + " gramian");
  return es.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

struct SquareRootBalance {
  Matrix Lc, Lo;
  Eigen::JacobiSVD<Matrix> svd;
};

SquareRootBalance square_root_balance(const StateSpace& sys) {
  const Gramians g = gramians(sys);
  SquareRootBalance out;
  out.Lc = psd_factor(g.controllability, "controllability");
  out.Lo = psd_factor(g.observability, "observability");
  out.svd.compute(out.Lo.transpose() * out.Lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return out;
}

}  // namespace

Matrix lyap_solve(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) throw DomainError("lyap_solve: A and Q must be square and equal size");
  if (n > 0 && (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()))
    throw DomainError("lyap_solve: Q must be symmetric");
  if (n == 0) return Matrix(0, 0);
  if (!is_stable(StateSpace(A, Matrix(n, 0), Matrix(0, n), Matrix(0, 0))))
    throw DomainError("lyap_solve: A is not Hurwitz");
  // (I (x) A + A (x) I) vec(P) = -vec(Q), column-major vec.
  const Eigen::Index nn = n * n;
  Matrix K = Matrix::Zero(nn, nn);
  for (Eigen::Index j = 0; j < n; ++j) {
    K.block(j * n, j * n, n, n) += A;
    for (Eigen::Index i = 0; i < n; ++i) K.block(j * n, i * n, n, n).diagonal().array() += A(j, i);
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), nn);
  const Eigen::VectorXd x = K.partialPivLu().solve(rhs);
  Matrix P = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (P + P.transpose());
}

Gramians gramians(const StateSpace& sys) {
  if (sys.is_discrete()) throw DomainError("gramians: continuous-time systems only");
  return {lyap_solve(sys.A, sys.B * sys.B.transpose()), lyap_solve(sys.A.transpose(), sys.C.transpose() * sys.C)};
}

std::vector<double> hankel_singular_values(const StateSpace& sys) {
  if (sys.states() == 0) return {};
  const auto sr = square_root_balance(sys);
  const Eigen::VectorXd s = sr.svd.singularValues();
  return {s.begin(), s.end()};
}

ReducedModel balanced_truncation(const StateSpace& sys, int order) {
  const auto n = static_cast<int>(sys.states());
  if (order < 1 || order > n) throw DomainError("balanced_truncation: order must be in [1, n]");
  const auto sr = square_root_balance(sys);
  const Eigen::VectorXd s = sr.svd.singularValues();
  if (!(s(order - 1) > 1e-14 * s(0)))
    throw NumericalError("balanced_truncation: retained Hankel singular values are numerically zero (non-minimal system)");
  const Eigen::VectorXd inv_sqrt = s.head(order).cwiseSqrt().cwiseInverse();
  const Matrix T = sr.Lc * sr.svd.matrixV().leftCols(order) * inv_sqrt.asDiagonal();
  const Matrix Ti = inv_sqrt.asDiagonal() * sr.svd.matrixU().leftCols(order).transpose() * sr.Lo.transpose();
  ReducedModel out;
  out.sys = StateSpace(Ti * sys.A * T, Ti * sys.B, sys.C * T, sys.D);
  out.hankel.assign(s.begin(), s.end());
  return out;
}

}  // namespace dclink::lti
