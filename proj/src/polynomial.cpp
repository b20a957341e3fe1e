#include "dclink/polynomial.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dclink/linalg.hpp"

namespace dclink::lti {

Polynomial::Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

Polynomial::Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

void Polynomial::trim() {
  auto first = std::find_if(c_.begin(), c_.end(), [](double v) { return v != 0.0; });
  c_.erase(c_.begin(), first);
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots, double gain) {
  // Multiply in complex arithmetic, then keep the real part.
  std::vector<Complex> acc{Complex(1.0, 0.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(acc.size() + 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < acc.size(); ++i) {
      next[i] += acc[i];
      next[i + 1] -= acc[i] * r;
    }
    acc = std::move(next);
  }
  std::vector<double> out(acc.size());
  std::transform(acc.begin(), acc.end(), out.begin(), [gain](Complex v) { return gain * v.real(); });
  return Polynomial(std::move(out));
}

double Polynomial::coeff(int power) const noexcept {
  const int idx = degree() - power;
  if (power < 0 || idx < 0) return 0.0;
  return c_[static_cast<std::size_t>(idx)];
}

Complex Polynomial::operator()(Complex s) const noexcept {
  Complex acc(0.0, 0.0);
  for (double c : c_) acc = acc * s + c;
  return acc;
}

double Polynomial::operator()(double s) const noexcept {
  double acc = 0.0;
  for (double c : c_) acc = acc * s + c;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return {};
  std::vector<double> d(c_.size() - 1);
  const int n = degree();
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = c_[static_cast<std::size_t>(i)] * (n - i);
  return Polynomial(std::move(d));
}

std::vector<Complex> Polynomial::roots() const {
  const int n = degree();
  if (n < 1) return {};
  // Strip roots at the origin exactly; they would otherwise be smeared by
  // the eigen solver.
  int zeros_at_origin = 0;
  while (zeros_at_origin < n && c_[static_cast<std::size_t>(n - zeros_at_origin)] == 0.0) ++zeros_at_origin;
  const int m = n - zeros_at_origin;

  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(n));
  if (m > 0) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) companion(0, j) = -c_[static_cast<std::size_t>(j + 1)] / c_[0];
    for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    balance_in_place(companion);
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    const Eigen::VectorXcd ev = es.eigenvalues();

    const Polynomial dp = derivative();
    for (int i = 0; i < m; ++i) {
      Complex z = ev(i);
      // Newton polish; accept a step only while it shrinks the residual.
      double res = std::abs((*this)(z));
      for (int it = 0; it < 3 && res > 0.0; ++it) {
        const Complex dz = dp(z);
        if (dz == Complex(0.0, 0.0)) break;
        const Complex cand = z - (*this)(z) / dz;
        const double cres = std::abs((*this)(cand));
        if (!(cres < res)) break;
        z = cand;
        res = cres;
      }
      out.push_back(z);
    }
  }
  for (int i = 0; i < zeros_at_origin; ++i) out.emplace_back(0.0, 0.0);
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  if (rhs.c_.size() > c_.size()) c_.insert(c_.begin(), rhs.c_.size() - c_.size(), 0.0);
  const std::size_t off = c_.size() - rhs.c_.size();
  for (std::size_t i = 0; i < rhs.c_.size(); ++i) c_[off + i] += rhs.c_[i];
  trim();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) { return *this += rhs * -1.0; }

Polynomial& Polynomial::operator*=(const Polynomial& rhs) {
  if (c_.empty() || rhs.c_.empty()) {
    c_.clear();
    return *this;
  }
  std::vector<double> out(c_.size() + rhs.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < rhs.c_.size(); ++j) out[i + j] += c_[i] * rhs.c_[j];
  c_ = std::move(out);
  trim();
  return *this;
}

Polynomial& Polynomial::operator*=(double k) {
  for (double& c : c_) c *= k;
  trim();
  return *this;
}

}  // namespace dclink::lti
