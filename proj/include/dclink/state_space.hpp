#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dclink/transfer_function.hpp"

namespace dclink::lti {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

/// Continuous-time realization dx/dt = A x + B u, y = C x + D u.
/// A discrete realization uses the same struct with `Ts > 0`.
struct StateSpace {
  Matrix A, B, C, D;
  double Ts = 0.0;

  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double ts = 0.0);

  /// Static gain with no states.
  static StateSpace gain(const Matrix& d);

  Eigen::Index states() const noexcept { return A.rows(); }
  Eigen::Index inputs() const noexcept { return B.cols(); }
  Eigen::Index outputs() const noexcept { return C.rows(); }
  bool is_discrete() const noexcept { return Ts > 0.0; }
};

/// Strictly increasing, strictly positive angular frequencies (rad/s).
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> omegas);

  /// `points` logarithmically spaced values over [lo, hi].
  static FrequencyGrid logspace(double lo, double hi, std::size_t points);
  /// 400 log points over [0.1, 1e6] rad/s plus a ten times denser band
  /// around 2*pi*120 rad/s.
  static FrequencyGrid standard();

  const std::vector<double>& omegas() const noexcept { return w_; }
  std::size_t size() const noexcept { return w_.size(); }
  auto begin() const noexcept { return w_.begin(); }
  auto end() const noexcept { return w_.end(); }

 private:
  std::vector<double> w_;
};

/// Realization as a cascade of first/second-order sections, diagonally
/// balanced. Requires a proper transfer function.
StateSpace tf_to_ss(const TransferFunction& g);
/// SISO only. Characteristic polynomials come from eigenvalues of A and A-BC.
TransferFunction ss_to_tf(const StateSpace& sys);

/// Block-diagonal concatenation: inputs and outputs are stacked.
StateSpace append(const StateSpace& a, const StateSpace& b);
/// Closes u = M y + N w around `blocks` and reports z = P y + Q w.
/// Throws SingularError when the algebraic loop (I - D M) is singular.
StateSpace connect(const StateSpace& blocks, const Matrix& M, const Matrix& N, const Matrix& P, const Matrix& Q);
/// a - b for systems of identical I/O shape.
StateSpace difference(const StateSpace& a, const StateSpace& b);
/// Diagonal state scaling that equalizes row/column norms of [A B; C 0].
StateSpace balance(const StateSpace& sys);

CMatrix freq_response(const StateSpace& sys, double omega);
double max_singular_value(const CMatrix& m);

std::vector<Complex> poles(const StateSpace& sys);
bool is_stable(const StateSpace& sys, double margin = 0.0);

/// H-infinity norm by level-set iteration on gamma with the Hamiltonian
/// imaginary-eigenvalue test. Result is within relative `tol` of the
/// supremum. Throws DomainError for unstable systems.
double hinf_norm(const StateSpace& sys, double tol = 1e-6);
/// Max singular value over a grid; a lower bound on the norm.
double hinf_norm_grid_oracle(const StateSpace& sys, const FrequencyGrid& grid);

/// Solves A P + P A^T + Q = 0 by Kronecker linearization. A must be Hurwitz.
Matrix lyap_solve(const Matrix& A, const Matrix& Q);

struct Gramians {
  Matrix controllability;
  Matrix observability;
};
Gramians gramians(const StateSpace& sys);
std::vector<double> hankel_singular_values(const StateSpace& sys);

struct ReducedModel {
  StateSpace sys;
  std::vector<double> hankel;  // all n values, descending
};
/// Square-root balanced truncation to `order` states (order <= n; order == n
/// returns the full balanced realization).
ReducedModel balanced_truncation(const StateSpace& sys, int order);

/// Bilinear (Tustin) transform at sample period `Ts`.
StateSpace discretize_tustin(const StateSpace& sys, double Ts);

/// Running discrete realization with its own state vector.
class DiscreteFilter {
 public:
  DiscreteFilter() = default;
  explicit DiscreteFilter(StateSpace discrete);

  /// Output at the current sample, then advances the state.
  double step(double u);
  void reset() { x_.setZero(); }
  /// Sets the state to the equilibrium for a constant input `u`.
  void settle_to(double u);
  const StateSpace& system() const noexcept { return sys_; }

 private:
  StateSpace sys_;
  Eigen::VectorXd x_;
};

}  // namespace dclink::lti
