#include "dclink/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dclink/errors.hpp"

namespace dclink::lti {

namespace {

Polynomial divided(const Polynomial& p, double k) {
  if (k == 1.0) return p;
  std::vector<double> c = p.coeffs();
  for (double& v : c) v /= k;
  return Polynomial(std::move(c));
}

// Groups roots into real factors of degree one or two. Conjugate pairs stay
// together; real roots are paired with their nearest neighbour by value.
std::vector<Polynomial> group_roots(std::vector<Complex> roots) {
  std::vector<Polynomial> out;
  std::vector<double> reals;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    const Complex r = roots[i];
    if (std::abs(r.imag()) <= 1e-12 * std::abs(r)) {
      reals.push_back(r.real());
      used[i] = true;
      continue;
    }
    std::size_t best = roots.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(roots[j] - std::conj(r));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    used[i] = true;
    if (best == roots.size()) {
      // Unpaired complex root; only possible for non-real polynomials.
      reals.push_back(r.real());
      continue;
    }
    used[best] = true;
    const Complex mid = 0.5 * (r + std::conj(roots[best]));
    out.push_back(Polynomial({1.0, -2.0 * mid.real(), std::norm(mid)}));
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    out.push_back(Polynomial({1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]}));
  if (reals.size() % 2 == 1) out.push_back(Polynomial({1.0, -reals.back()}));
  return out;
}

// Natural frequency of a monic factor of degree 1 or 2 (0 for s or s^2).
double natural_frequency(const Polynomial& p) {
  const double c0 = std::abs(p.coeff(0));
  return p.degree() == 2 ? std::sqrt(c0) : c0;
}

}  // namespace

TransferFunction::TransferFunction(Polynomial num, Polynomial den) {
  if (den.is_zero()) throw DomainError("transfer function denominator is the zero polynomial");
  const double lead = den.leading();
  num_ = divided(num, lead);
  den_ = divided(den, lead);
}

TransferFunction TransferFunction::zpk(std::span<const Complex> zeros, std::span<const Complex> poles, double k) {
  return {Polynomial::from_roots(zeros, k), Polynomial::from_roots(poles)};
}

Complex TransferFunction::operator()(Complex s) const {
  const Complex d = den_(s);
  if (d == Complex(0.0, 0.0)) {
    std::ostringstream os;
    os << "transfer function evaluated at a pole s = " << s;
    throw SingularError(os.str());
  }
  return num_(s) / d;
}

TransferFunction series(const TransferFunction& a, const TransferFunction& b) {
  return {a.num() * b.num(), a.den() * b.den()};
}

TransferFunction parallel(const TransferFunction& a, const TransferFunction& b) {
  if (a.den() == b.den()) return {a.num() + b.num(), a.den()};
  return {a.num() * b.den() + b.num() * a.den(), a.den() * b.den()};
}

TransferFunction operator-(const TransferFunction& a) { return {-a.num(), a.den()}; }

TransferFunction operator*(double k, const TransferFunction& a) { return {k * a.num(), a.den()}; }

TransferFunction feedback(const TransferFunction& loop_gain) {
  Polynomial closed = loop_gain.den() + loop_gain.num();
  if (closed.is_zero()) throw SingularError("feedback: 1 + L is identically zero");
  return {loop_gain.num(), std::move(closed)};
}

TransferFunction sensitivity(const TransferFunction& loop_gain) {
  Polynomial closed = loop_gain.den() + loop_gain.num();
  if (closed.is_zero()) throw SingularError("sensitivity: 1 + L is identically zero");
  return {loop_gain.den(), std::move(closed)};
}

TransferFunction minreal(const TransferFunction& g, double rel_tol) {
  if (g.is_zero()) return {Polynomial{}, Polynomial{1.0}};
  std::vector<Complex> z = g.zeros();
  std::vector<Complex> p = g.poles();
  std::vector<bool> pole_used(p.size(), false);
  std::vector<Complex> kept_zeros;
  for (const Complex& zi : z) {
    bool cancelled = false;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (pole_used[j]) continue;
      const double scale = std::max({std::abs(zi), std::abs(p[j]), 1.0});
      if (std::abs(zi - p[j]) <= rel_tol * scale) {
        pole_used[j] = true;
        cancelled = true;
        break;
      }
    }
    if (!cancelled) kept_zeros.push_back(zi);
  }
  std::vector<Complex> kept_poles;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (!pole_used[j]) kept_poles.push_back(p[j]);
  return TransferFunction::zpk(kept_zeros, kept_poles, g.num().leading());
}

bool is_stable(const TransferFunction& g, double margin) {
  const auto p = g.poles();
  return std::all_of(p.begin(), p.end(), [margin](Complex z) { return z.real() < -margin; });
}

bool coefficients_match(const TransferFunction& a, const TransferFunction& b, double rel_tol) {
  auto match = [rel_tol](const Polynomial& x, const Polynomial& y) {
    if (x.degree() != y.degree()) return false;
    for (std::size_t i = 0; i < x.coeffs().size(); ++i) {
      const double u = x.coeffs()[i];
      const double v = y.coeffs()[i];
      if (std::abs(u - v) > rel_tol * std::max(std::abs(u), std::abs(v))) return false;
    }
    return true;
  };
  return match(a.num(), b.num()) && match(a.den(), b.den());
}

std::vector<TransferFunction> sections(const TransferFunction& g) {
  if (!g.is_proper()) throw DomainError("sections: transfer function is improper");
  const double k = g.num().leading();
  if (g.order() <= 0 || g.is_zero()) return {TransferFunction::gain(g.is_zero() ? 0.0 : k)};

  std::vector<Polynomial> pole_groups = group_roots(g.poles());
  std::vector<Polynomial> zero_groups = group_roots(g.zeros());
  std::sort(pole_groups.begin(), pole_groups.end(),
            [](const Polynomial& a, const Polynomial& b) { return natural_frequency(a) < natural_frequency(b); });
  // Quadratic zero factors first so they always find a second-order slot.
  std::stable_sort(zero_groups.begin(), zero_groups.end(),
                   [](const Polynomial& a, const Polynomial& b) { return a.degree() > b.degree(); });

  std::vector<Polynomial> section_num(pole_groups.size(), Polynomial{1.0});
  std::vector<int> capacity(pole_groups.size());
  for (std::size_t i = 0; i < pole_groups.size(); ++i) capacity[i] = pole_groups[i].degree();

  for (const Polynomial& zg : zero_groups) {
    std::size_t best = pole_groups.size();
    double best_cost = std::numeric_limits<double>::infinity();
    const double wz = natural_frequency(zg);
    for (std::size_t i = 0; i < pole_groups.size(); ++i) {
      if (capacity[i] < zg.degree()) continue;
      const double wp = natural_frequency(pole_groups[i]);
      const double cost = (wz > 0.0 && wp > 0.0) ? std::abs(std::log(wz / wp)) : 1e3;
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    if (best == pole_groups.size()) throw NumericalError("sections: could not place zero factor");
    capacity[best] -= zg.degree();
    section_num[best] *= zg;
  }

  std::vector<TransferFunction> out;
  out.reserve(pole_groups.size());
  for (std::size_t i = 0; i < pole_groups.size(); ++i)
    out.emplace_back(i == 0 ? k * section_num[i] : section_num[i], pole_groups[i]);
  return out;
}

}  // namespace dclink::lti
