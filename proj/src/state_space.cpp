#include "dclink/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dclink/errors.hpp"
#include "dclink/linalg.hpp"

namespace dclink::lti {

namespace {

// Parlett-Reinsch on the state coordinates of [A B; C 0]: rows of B count
// toward the row norm of a state, columns of C toward its column norm.
Eigen::VectorXd balancing_scale(const Matrix& A, const Matrix& B, const Matrix& C) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  if (n == 0) return d;
  Matrix a = A;
  Matrix b = B;
  Matrix c = C;
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  for (int sweep = 0; sweep < 200 && !done; ++sweep) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double col = c.rows() > 0 ? c.col(i).cwiseAbs().sum() : 0.0;
      double row = b.cols() > 0 ? b.row(i).cwiseAbs().sum() : 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        col += std::abs(a(j, i));
        row += std::abs(a(i, j));
      }
      if (col == 0.0 || row == 0.0) continue;
      const double s = col + row;
      double f = 1.0;
      double g = row / radix;
      while (col < g) {
        f *= radix;
        col *= sqrdx;
      }
      g = row * radix;
      while (col > g) {
        f /= radix;
        col /= sqrdx;
      }
      if ((col + row) / f < 0.95 * s) {
        done = false;
        d(i) *= f;
        a.row(i) /= f;
        a.col(i) *= f;
        if (b.cols() > 0) b.row(i) /= f;
        if (c.rows() > 0) c.col(i) *= f;
      }
    }
  }
  return d;
}

StateSpace section_realization(const TransferFunction& g) {
  const int n = g.order();
  const double d = g.num().coeff(n);
  if (n == 0) return StateSpace::gain(Matrix::Constant(1, 1, d));
  Matrix A = Matrix::Zero(n, n);
  Matrix B = Matrix::Zero(n, 1);
  Matrix C = Matrix::Zero(1, n);
  for (int j = 0; j < n; ++j) {
    const double a = g.den().coeff(n - 1 - j);
    A(0, j) = -a;
    C(0, j) = g.num().coeff(n - 1 - j) - d * a;
  }
  for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
  B(0, 0) = 1.0;
  return {A, B, C, Matrix::Constant(1, 1, d)};
}

// Output of `first` feeds the input of `second`.
StateSpace cascade(const StateSpace& first, const StateSpace& second) {
  const Eigen::Index n1 = first.states();
  const Eigen::Index n2 = second.states();
  Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = first.A;
  A.bottomLeftCorner(n2, n1) = second.B * first.C;
  A.bottomRightCorner(n2, n2) = second.A;
  Matrix B(n1 + n2, first.inputs());
  B << first.B, second.B * first.D;
  Matrix C(second.outputs(), n1 + n2);
  C << second.D * first.C, second.C;
  return {A, B, C, second.D * first.D};
}

}  // namespace

Eigen::VectorXd balance_in_place(Eigen::MatrixXd& a) {
  const Eigen::VectorXd d = balancing_scale(a, Matrix(a.rows(), 0), Matrix(0, a.cols()));
  a = d.cwiseInverse().asDiagonal() * a * d.asDiagonal();
  return d;
}

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double ts)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), Ts(ts) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols()) {
    std::ostringstream os;
    os << "state-space dimension mismatch: A " << A.rows() << "x" << A.cols() << ", B " << B.rows() << "x"
       << B.cols() << ", C " << C.rows() << "x" << C.cols() << ", D " << D.rows() << "x" << D.cols();
    throw DomainError(os.str());
  }
}

StateSpace StateSpace::gain(const Matrix& d) {
  return {Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d};
}

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : w_(std::move(omegas)) {
  if (w_.empty()) throw DomainError("frequency grid is empty");
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) throw DomainError("frequency grid entries must be positive and finite");
    if (i > 0 && !(w_[i] > w_[i - 1])) throw DomainError("frequency grid must be strictly increasing");
  }
}

FrequencyGrid FrequencyGrid::logspace(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw DomainError("logspace: need 0 < lo < hi and at least two points");
  std::vector<double> w(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i)
    w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  w.back() = hi;
  w.front() = lo;
  return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::standard() {
  constexpr double lo = 1e-1;
  constexpr double hi = 1e6;
  constexpr std::size_t base_points = 400;
  const double w0 = 2.0 * std::numbers::pi * 120.0;
  std::vector<double> w = logspace(lo, hi, base_points).omegas();
  // Band of half an octave either side of the notch at base density x10.
  const double per_decade = static_cast<double>(base_points - 1) / std::log10(hi / lo);
  const double band_lo = w0 / std::sqrt(2.0);
  const double band_hi = w0 * std::sqrt(2.0);
  const auto band_points = static_cast<std::size_t>(std::ceil(10.0 * per_decade * std::log10(band_hi / band_lo))) + 1;
  const auto band = logspace(band_lo, band_hi, band_points).omegas();
  w.insert(w.end(), band.begin(), band.end());
  std::erase_if(w, [&](double v) { return std::abs(v - w0) <= 1e-9 * w0; });
  w.push_back(w0);
  std::sort(w.begin(), w.end());
  std::vector<double> out;
  out.reserve(w.size());
  for (double v : w)
    if (out.empty() || v > out.back() * (1.0 + 1e-12)) out.push_back(v);
  return FrequencyGrid(std::move(out));
}

StateSpace tf_to_ss(const TransferFunction& g) {
  if (!g.is_proper()) throw DomainError("tf_to_ss: transfer function is improper");
  const auto parts = sections(g);
  StateSpace acc = section_realization(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) acc = cascade(acc, section_realization(parts[i]));
  return balance(acc);
}

TransferFunction ss_to_tf(const StateSpace& sys) {
  if (sys.inputs() != 1 || sys.outputs() != 1) throw DomainError("ss_to_tf: only SISO systems are supported");
  const double d = sys.D(0, 0);
  if (sys.states() == 0) return TransferFunction::gain(d);
  const StateSpace b = balance(sys);
  auto charpoly = [](Matrix m) {
    balance_in_place(m);
    Eigen::EigenSolver<Matrix> es(m, false);
    std::vector<Complex> ev(es.eigenvalues().begin(), es.eigenvalues().end());
    return Polynomial::from_roots(ev);
  };
  const Polynomial den = charpoly(b.A);
  const Polynomial closed = charpoly(b.A - b.B * b.C);
  // C (sI - A)^-1 B = det(sI - A + BC) / det(sI - A) - 1
  Polynomial num = closed - den;
  num += d * den;
  return {num, den};
}

StateSpace append(const StateSpace& a, const StateSpace& b) {
  const Eigen::Index na = a.states();
  const Eigen::Index nb = b.states();
  Matrix A = Matrix::Zero(na + nb, na + nb);
  A.topLeftCorner(na, na) = a.A;
  A.bottomRightCorner(nb, nb) = b.A;
  Matrix B = Matrix::Zero(na + nb, a.inputs() + b.inputs());
  B.topLeftCorner(na, a.inputs()) = a.B;
  B.bottomRightCorner(nb, b.inputs()) = b.B;
  Matrix C = Matrix::Zero(a.outputs() + b.outputs(), na + nb);
  C.topLeftCorner(a.outputs(), na) = a.C;
  C.bottomRightCorner(b.outputs(), nb) = b.C;
  Matrix D = Matrix::Zero(a.outputs() + b.outputs(), a.inputs() + b.inputs());
  D.topLeftCorner(a.outputs(), a.inputs()) = a.D;
  D.bottomRightCorner(b.outputs(), b.inputs()) = b.D;
  return {A, B, C, D};
}

StateSpace connect(const StateSpace& blocks, const Matrix& M, const Matrix& N, const Matrix& P, const Matrix& Q) {
  const Eigen::Index nu = blocks.inputs();
  const Eigen::Index ny = blocks.outputs();
  if (M.rows() != nu || M.cols() != ny || N.rows() != nu || P.cols() != ny || Q.rows() != P.rows() ||
      Q.cols() != N.cols())
    throw DomainError("connect: interconnection matrices have inconsistent shapes");
  const Matrix E = Matrix::Identity(ny, ny) - blocks.D * M;
  Eigen::FullPivLU<Matrix> lu(E);
  if (!lu.isInvertible()) throw SingularError("connect: algebraic loop I - D M is singular");
  const Matrix Einv = lu.inverse();
  const Matrix A = blocks.A + blocks.B * M * Einv * blocks.C;
  const Matrix B = blocks.B * (M * Einv * blocks.D * N + N);
  const Matrix C = P * Einv * blocks.C;
  const Matrix D = P * Einv * blocks.D * N + Q;
  return {A, B, C, D};
}

StateSpace difference(const StateSpace& a, const StateSpace& b) {
  if (a.inputs() != b.inputs() || a.outputs() != b.outputs())
    throw DomainError("difference: systems have different input/output shapes");
  const StateSpace both = append(a, b);
  const Eigen::Index ni = a.inputs();
  const Eigen::Index no = a.outputs();
  Matrix M = Matrix::Zero(2 * ni, 2 * no);
  Matrix N(2 * ni, ni);
  N << Matrix::Identity(ni, ni), Matrix::Identity(ni, ni);
  Matrix P(no, 2 * no);
  P << Matrix::Identity(no, no), -Matrix::Identity(no, no);
  return connect(both, M, N, P, Matrix::Zero(no, ni));
}

StateSpace balance(const StateSpace& sys) {
  if (sys.states() == 0) return sys;
  const Eigen::VectorXd d = balancing_scale(sys.A, sys.B, sys.C);
  const Eigen::VectorXd di = d.cwiseInverse();
  return {di.asDiagonal() * sys.A * d.asDiagonal(), di.asDiagonal() * sys.B, sys.C * d.asDiagonal(), sys.D, sys.Ts};
}

CMatrix freq_response(const StateSpace& sys, double omega) {
  const CMatrix D = sys.D.cast<Complex>();
  if (sys.states() == 0) return D;
  const Eigen::Index n = sys.states();
  CMatrix M = CMatrix::Identity(n, n) * Complex(0.0, omega) - sys.A.cast<Complex>();
  Eigen::FullPivLU<CMatrix> lu(M);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "frequency response evaluated on a pole at omega = " << omega;
    throw SingularError(os.str());
  }
  return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>()) + D;
}

double max_singular_value(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

std::vector<Complex> poles(const StateSpace& sys) {
  if (sys.states() == 0) return {};
  Matrix a = sys.A;
  balance_in_place(a);
  Eigen::EigenSolver<Matrix> es(a, false);
  return {es.eigenvalues().begin(), es.eigenvalues().end()};
}

bool is_stable(const StateSpace& sys, double margin) {
  const auto p = poles(sys);
  return std::all_of(p.begin(), p.end(), [margin](Complex z) { return z.real() < -margin; });
}

StateSpace discretize_tustin(const StateSpace& sys, double Ts) {
  if (!(Ts > 0.0)) throw DomainError("discretize_tustin: sample period must be positive");
  if (sys.is_discrete()) throw DomainError("discretize_tustin: system is already discrete");
  const Eigen::Index n = sys.states();
  if (n == 0) return {sys.A, sys.B, sys.C, sys.D, Ts};
  const Matrix I = Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(I - sys.A * (Ts / 2.0));
  if (!lu.isInvertible()) throw DomainError("discretize_tustin: I - A*Ts/2 is singular");
  const Matrix Minv = lu.inverse();
  const Matrix Ad = Minv * (I + sys.A * (Ts / 2.0));
  const Matrix Bd = Minv * sys.B * Ts;
  const Matrix Cd = sys.C * Minv;
  const Matrix Dd = sys.D + sys.C * Minv * sys.B * (Ts / 2.0);
  return {Ad, Bd, Cd, Dd, Ts};
}

DiscreteFilter::DiscreteFilter(StateSpace discrete) : sys_(std::move(discrete)), x_(Eigen::VectorXd::Zero(sys_.states())) {
  if (!sys_.is_discrete()) throw DomainError("DiscreteFilter: system must be discrete");
  if (sys_.inputs() != 1 || sys_.outputs() != 1) throw DomainError("DiscreteFilter: SISO only");
}

double DiscreteFilter::step(double u) {
  if (sys_.states() == 0) return sys_.D(0, 0) * u;
  const double y = sys_.C.row(0).dot(x_) + sys_.D(0, 0) * u;
  x_ = sys_.A * x_ + sys_.B.col(0) * u;
  return y;
}

void DiscreteFilter::settle_to(double u) {
  const Eigen::Index n = sys_.states();
  if (n == 0) return;
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - sys_.A);
  if (!lu.isInvertible()) throw DomainError("settle_to: filter has a pole at z = 1");
  x_ = lu.solve(sys_.B.col(0) * u);
}

}  // namespace dclink::lti
