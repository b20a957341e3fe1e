#include "dclink/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dclink/errors.hpp"

namespace dclink::design {

using lti::Complex;
using lti::Matrix;
using lti::Polynomial;
using lti::StateSpace;

namespace {

Polynomial quadratic(double zeta, double w0) { return Polynomial({1.0, 2.0 * zeta * w0, w0 * w0}); }
Polynomial linear(double root_shift) { return Polynomial({1.0, root_shift}); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

void InnerDesign::validate() const {
  if (!(omega0 > 0.0)) throw DomainError("inner design: omega0 must be positive");
  if (!(zeta1 > 0.0)) throw DomainError("inner design: zeta1 must be positive");
  if (!(zeta2 > zeta1)) throw DomainError("inner design: zeta2 must exceed zeta1 (notch must attenuate)");
  if (!(omega_tilde > omega0)) throw DomainError("inner design: omega_tilde must exceed omega0");
}

InnerDesign reference_inner_design() {
  return {kRippleOmega, 1.2, 2.1, 2.0 * std::numbers::pi * 200.0};
}

TransferFunction shaped_plant(const InnerDesign& d) {
  d.validate();
  return {d.omega_tilde * quadratic(d.zeta1, d.omega0), linear(d.omega_tilde) * quadratic(d.zeta2, d.omega0)};
}

TransferFunction design_inner(double L, const InnerDesign& d) {
  d.validate();
  if (!(L > 0.0)) throw DomainError("design_inner: inductance must be positive");
  const double w0 = d.omega0;
  Polynomial den = quadratic(d.zeta2, w0);
  den += Polynomial::constant(2.0 * (d.zeta2 - d.zeta1) * w0 * d.omega_tilde);
  TransferFunction kc(L * d.omega_tilde * quadratic(d.zeta1, w0), den);

  const TransferFunction inductor(Polynomial{1.0}, Polynomial({L, 0.0}));
  if (!lti::coefficients_match(lti::feedback(kc * inductor), shaped_plant(d), 1e-9))
    throw NumericalError("design_inner: closed inner loop does not reproduce the shaped plant");
  return kc;
}

TransferFunction bus_plant(double C) {
  if (!(C > 0.0)) throw DomainError("bus capacitance must be positive");
  return {Polynomial{1.0}, Polynomial({C, 0.0})};
}

OuterControllers canonical_outer() {
  const Polynomial kv_num = -0.0076 * linear(-8.69e5) * linear(2.01e4) * linear(2577.0) * linear(194.2) *
                            Polynomial({1.0, 0.02, 0.0001});
  const Polynomial kv_den = linear(2.73e4) * linear(1.07e4) * linear(433.9) * linear(2.498) *
                            Polynomial({1.0, 0.01978, 0.0008});
  const Polynomial kr_num =
      0.065 * linear(4.07e5) * linear(2474.0) * linear(191.7) * linear(3.20) * linear(0.01) * linear(0.0099);
  const Polynomial kr_den =
      linear(1.15e4) * linear(422.4) * linear(3.11) * linear(2.03) * Polynomial({1.0, 0.01978, 0.0008});
  return {TransferFunction(kv_num, kv_den), TransferFunction(kr_num, kr_den)};
}

TransferFunction highpass_weight(double k, double omega_h) {
  if (!(omega_h > 0.0)) throw DomainError("high-pass weight corner must be positive");
  return {Polynomial({k, 0.0}), linear(omega_h)};
}

TransferFunction default_w4() { return highpass_weight(0.5, 2.0 * std::numbers::pi * 500.0); }

WeightSet canonical_weights() {
  return {TransferFunction(0.5 * linear(502.7), linear(2.513)), TransferFunction(0.5 * linear(628.3), linear(3.142)),
          TransferFunction::gain(0.1), default_w4()};
}

GeneralizedPlant::GeneralizedPlant(TransferFunction Gv, TransferFunction Gc_tilde, WeightSet w)
    : gv_(std::move(Gv)), gc_(std::move(Gc_tilde)), w_(std::move(w)) {
  const TransferFunction zero;
  const TransferFunction one = TransferFunction::gain(1.0);
  const TransferFunction gvgc = gv_ * gc_;
  entries_ = {{
      {w_.W1, w_.W1 * gv_, -(w_.W1 * gvgc)},
      {zero, w_.W2, -(w_.W2 * gc_)},
      {zero, zero, w_.W3},
      {zero, -(w_.W4 * gv_), w_.W4 * gvgc},
      {one, gv_, -gvgc},
      {zero, one, -gc_},
  }};
}

const TransferFunction& GeneralizedPlant::entry(int row, int col) const {
  if (row < 1 || row > kRows || col < 1 || col > kCols) throw DomainError("generalized plant entry out of range");
  return entries_[static_cast<std::size_t>(row - 1)][static_cast<std::size_t>(col - 1)];
}

StateSpace GeneralizedPlant::realization() const {
  // Blocks (in order): Gv, Gc, W1, W2, W3, W4.
  // Block outputs: y0 = V_dc, y1 = i_L, y2..y5 = z1..z4.
  StateSpace blocks = lti::tf_to_ss(gv_);
  for (const TransferFunction* g : {&gc_, &w_.W1, &w_.W2, &w_.W3, &w_.W4}) blocks = lti::append(blocks, lti::tf_to_ss(*g));
  Matrix M = Matrix::Zero(6, 6);
  Matrix N = Matrix::Zero(6, 3);
  M(0, 1) = 1.0;  // Gv <- i_L - i_load
  N(0, 1) = -1.0;
  N(1, 2) = 1.0;  // Gc <- u
  N(2, 0) = 1.0;  // W1 <- V_ref - V_dc
  M(2, 0) = -1.0;
  N(3, 1) = 1.0;  // W2 <- i_load - i_L
  M(3, 1) = -1.0;
  N(4, 2) = 1.0;  // W3 <- u
  M(5, 0) = 1.0;  // W4 <- V_dc
  Matrix P = Matrix::Zero(6, 6);
  Matrix Q = Matrix::Zero(6, 3);
  for (int i = 0; i < 4; ++i) P(i, 2 + i) = 1.0;
  P(4, 0) = -1.0;
  Q(4, 0) = 1.0;
  P(5, 1) = -1.0;
  Q(5, 1) = 1.0;
  return lti::connect(blocks, M, N, P, Q);
}

StateSpace weighted_closed_loop(const GeneralizedPlant& gp, const OuterControllers& K) {
  // Inputs [V_ref, i_load, u, e_Kv, e_Kr]; outputs [z1..z4, e1, e2, y_Kv, y_Kr].
  const StateSpace blocks = lti::append(gp.realization(), lti::append(lti::tf_to_ss(K.Kv), lti::tf_to_ss(K.Kr)));
  Matrix M = Matrix::Zero(5, 8);
  M(2, 6) = 1.0;
  M(2, 7) = 1.0;
  M(3, 4) = 1.0;
  M(4, 5) = 1.0;
  Matrix N = Matrix::Zero(5, 2);
  N(0, 0) = 1.0;
  N(1, 1) = 1.0;
  Matrix P = Matrix::Zero(4, 8);
  for (int i = 0; i < 4; ++i) P(i, i) = 1.0;
  StateSpace closed = lti::connect(blocks, M, N, P, Matrix::Zero(4, 2));
  if (!lti::is_stable(closed)) {
    std::ostringstream os;
    os << "weighted closed loop is not internally stable; poles:";
    for (const Complex& p : lti::poles(closed))
      if (p.real() >= 0.0) os << ' ' << p;
    throw DomainError(os.str());
  }
  return closed;
}

SensitivityFamily sensitivity_family(const TransferFunction& Gv, const TransferFunction& Gc_tilde,
                                     const OuterControllers& K) {
  const TransferFunction current_loop = Gc_tilde * K.Kr;
  const TransferFunction voltage_path = Gv * Gc_tilde * K.Kv;
  SensitivityFamily f;
  f.S1 = lti::sensitivity(current_loop + voltage_path);
  f.T1 = voltage_path * f.S1;
  f.S2 = lti::sensitivity(current_loop);
  f.T2 = lti::feedback(current_loop);
  f.H = Gc_tilde * K.Kv * f.S1;
  return f;
}

ControllerRatio controller_ratio_analysis(const OuterControllers& K, const FrequencyGrid& grid) {
  std::vector<double> mag;
  std::vector<double> re;
  mag.reserve(grid.size());
  re.reserve(grid.size());
  for (double w : grid) {
    const Complex kv = K.Kv.freq_response(w);
    const Complex kr = K.Kr.freq_response(w);
    if (kv == Complex(0.0, 0.0)) throw DomainError("controller ratio: Kv vanishes on the grid");
    const Complex r = kr / kv;
    mag.push_back(std::abs(r));
    re.push_back(r.real());
  }
  ControllerRatio out;
  out.alpha = median(mag);
  out.alpha_signed = median(re);
  if (out.alpha > 0.0)
    for (double m : mag) out.flatness = std::max(out.flatness, std::abs(m - out.alpha) / out.alpha);
  return out;
}

TransferFunction droop_filter() { return {Polynomial{376.99}, linear(314.16)}; }

}  // namespace dclink::design
