#include <algorithm>
#include <cmath>

#include "dclink/errors.hpp"
#include "dclink/state_space.hpp"

namespace dclink::lti {

namespace {

constexpr int kMaxBisections = 200;

double sigma_at(const StateSpace& sys, double omega) { return max_singular_value(freq_response(sys, omega)); }

// Signed frequencies of (numerically) imaginary eigenvalues of the Hamiltonian
// associated with level gamma. Empty means gamma exceeds the norm.
std::vector<double> imaginary_axis_crossings(const StateSpace& sys, double gamma) {
  const Eigen::Index n = sys.states();
  const Eigen::Index m = sys.inputs();
  const Eigen::Index p = sys.outputs();
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix& C = sys.C;
  const Matrix& D = sys.D;
  const Matrix R = gamma * gamma * Matrix::Identity(m, m) - D.transpose() * D;
  const Matrix Rinv = R.inverse();
  const Matrix Ah = A + B * Rinv * D.transpose() * C;
  Matrix H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = Ah;
  H.topRightCorner(n, n) = B * Rinv * B.transpose();
  H.bottomLeftCorner(n, n) = -C.transpose() * (Matrix::Identity(p, p) + D * Rinv * D.transpose()) * C;
  H.bottomRightCorner(n, n) = -Ah.transpose();

  Eigen::EigenSolver<Matrix> es(H, false);
  const double scale = H.cwiseAbs().maxCoeff();
  std::vector<double> out;
  for (const Complex& lam : es.eigenvalues()) {
    const double tol = 1e-7 * std::abs(lam) + 1e-13 * scale;
    if (std::abs(lam.real()) <= tol) out.push_back(lam.imag());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Lower bound from a log sweep spanning the modal frequencies.
double initial_lower_bound(const StateSpace& sys) {
  double lb = max_singular_value(sys.D.cast<Complex>());
  double wmin = 1e300;
  double wmax = 0.0;
  std::vector<double> probes{0.0};
  for (const Complex& p : poles(sys)) {
    const double a = std::abs(p);
    if (a > 0.0) {
      wmin = std::min(wmin, a);
      wmax = std::max(wmax, a);
    }
    probes.push_back(std::abs(p.imag()));
    probes.push_back(a);
  }
  if (wmax > 0.0) {
    const auto g = FrequencyGrid::logspace(wmin / 100.0, wmax * 100.0, 600).omegas();
    probes.insert(probes.end(), g.begin(), g.end());
  }
  for (double w : probes) lb = std::max(lb, sigma_at(sys, w));
  return lb;
}

}  // namespace

double hinf_norm(const StateSpace& sys_in, double tol) {
  if (!(tol > 0.0)) throw DomainError("hinf_norm: tolerance must be positive");
  if (sys_in.is_discrete()) throw DomainError("hinf_norm: continuous-time systems only");
  const double dnorm = max_singular_value(sys_in.D.cast<Complex>());
  if (sys_in.states() == 0) return dnorm;
  if (!is_stable(sys_in)) throw DomainError("hinf_norm: system is not stable");
  const StateSpace sys = balance(sys_in);

  double lb = initial_lower_bound(sys);
  if (lb == 0.0) return 0.0;

  // Bruinsma-Steinbuch iteration: lb is always an attained singular value, so
  // spurious Hamiltonian crossings can only stall progress, never inflate it.
  for (int it = 0; it < kMaxBisections; ++it) {
    const double gamma = (1.0 + 2.0 * tol) * lb;
    const auto crossings = imaginary_axis_crossings(sys, gamma);
    if (crossings.size() < 2) return (1.0 + tol) * lb;
    double best = lb;
    for (std::size_t i = 0; i + 1 < crossings.size(); ++i)
      best = std::max(best, sigma_at(sys, std::abs(0.5 * (crossings[i] + crossings[i + 1]))));
    if (!(best > lb)) return (1.0 + tol) * lb;
    lb = best;
  }
  throw NumericalError("hinf_norm: iteration did not converge");
}

double hinf_norm_grid_oracle(const StateSpace& sys, const FrequencyGrid& grid) {
  if (sys.states() > 0 && !is_stable(sys)) throw DomainError("hinf_norm_grid_oracle: system is not stable");
  double best = 0.0;
  for (double w : grid) best = std::max(best, sigma_at(sys, w));
  return best;
}

}  // namespace dclink::lti
