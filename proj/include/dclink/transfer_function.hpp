#pragma once

#include <complex>
#include <vector>

#include "dclink/polynomial.hpp"

namespace dclink::lti {

/// SISO rational transfer function num(s)/den(s).
///
/// The denominator is normalized to be monic on construction. Products and
/// sums never cancel common factors; use `minreal` for that explicitly.
class TransferFunction {
 public:
  TransferFunction() : TransferFunction(Polynomial{}, Polynomial{1.0}) {}
  TransferFunction(Polynomial num, Polynomial den);

  static TransferFunction gain(double k) { return {Polynomial::constant(k), Polynomial{1.0}}; }
  /// k * prod(s - z) / prod(s - p).
  static TransferFunction zpk(std::span<const Complex> zeros, std::span<const Complex> poles, double k);

  const Polynomial& num() const noexcept { return num_; }
  const Polynomial& den() const noexcept { return den_; }
  int order() const noexcept { return den_.degree(); }
  bool is_proper() const noexcept { return num_.degree() <= den_.degree(); }
  bool is_strictly_proper() const noexcept { return num_.degree() < den_.degree(); }
  bool is_zero() const noexcept { return num_.is_zero(); }

  /// Throws SingularError when s is a root of the denominator.
  Complex operator()(Complex s) const;
  Complex freq_response(double omega) const { return (*this)(Complex(0.0, omega)); }
  double dc_gain() const { return (*this)(Complex(0.0, 0.0)).real(); }

  std::vector<Complex> poles() const { return den_.roots(); }
  std::vector<Complex> zeros() const { return num_.roots(); }

  friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

 private:
  Polynomial num_;
  Polynomial den_;
};

TransferFunction series(const TransferFunction& a, const TransferFunction& b);
/// a + b. When the denominators are identical the numerators are added over
/// the shared denominator; otherwise the denominators are multiplied.
TransferFunction parallel(const TransferFunction& a, const TransferFunction& b);

inline TransferFunction operator*(const TransferFunction& a, const TransferFunction& b) { return series(a, b); }
inline TransferFunction operator+(const TransferFunction& a, const TransferFunction& b) { return parallel(a, b); }
TransferFunction operator-(const TransferFunction& a);
inline TransferFunction operator-(const TransferFunction& a, const TransferFunction& b) { return parallel(a, -b); }
TransferFunction operator*(double k, const TransferFunction& a);
inline TransferFunction operator*(const TransferFunction& a, double k) { return k * a; }

/// Negative unity feedback closure L/(1+L). Throws SingularError when
/// 1 + L vanishes identically.
TransferFunction feedback(const TransferFunction& loop_gain);
/// 1/(1+L), sharing the denominator polynomial of `feedback(L)` bit for bit.
TransferFunction sensitivity(const TransferFunction& loop_gain);

/// Cancels numerator/denominator roots that agree within `rel_tol`
/// (relative to the larger magnitude, absolute near the origin).
TransferFunction minreal(const TransferFunction& g, double rel_tol = 1e-7);

/// Strictly open left half plane; `margin` shifts the boundary to -margin.
bool is_stable(const TransferFunction& g, double margin = 0.0);

/// Relative coefficient match after normalization (monic denominators, equal
/// degrees required).
bool coefficients_match(const TransferFunction& a, const TransferFunction& b, double rel_tol);

/// Second-or-lower-order factors whose product is `g`: each section holds at
/// most two poles and is proper. The static gain rides on the first section.
std::vector<TransferFunction> sections(const TransferFunction& g);

}  // namespace dclink::lti
