#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

namespace dclink::lti {

using Complex = std::complex<double>;

/// Real polynomial in s, coefficients stored in descending powers.
///
/// Leading zeros are stripped on construction, so the zero polynomial is the
/// empty coefficient vector and `degree()` returns -1 for it.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);
  Polynomial(std::initializer_list<double> coeffs);

  /// Monic product of (s - r) over `roots`, scaled by `gain`. Complex roots
  /// must come in conjugate pairs; residual imaginary parts are dropped.
  static Polynomial from_roots(std::span<const Complex> roots, double gain = 1.0);
  static Polynomial constant(double c) { return Polynomial({c}); }
  static Polynomial s() { return Polynomial({1.0, 0.0}); }

  const std::vector<double>& coeffs() const noexcept { return c_; }
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const noexcept { return c_.empty(); }
  double leading() const noexcept { return c_.empty() ? 0.0 : c_.front(); }
  /// Coefficient of s^k (0 beyond the degree).
  double coeff(int power) const noexcept;

  Complex operator()(Complex s) const noexcept;
  double operator()(double s) const noexcept;

  /// Roots from the eigenvalues of the balanced companion matrix, polished
  /// with a few Newton steps.
  std::vector<Complex> roots() const;

  Polynomial derivative() const;

  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  Polynomial& operator*=(const Polynomial& rhs);
  Polynomial& operator*=(double k);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const Polynomial& b) { return a *= b; }
  friend Polynomial operator*(Polynomial a, double k) { return a *= k; }
  friend Polynomial operator*(double k, Polynomial a) { return a *= k; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void trim();

  std::vector<double> c_;
};

}  // namespace dclink::lti
