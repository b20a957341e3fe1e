#pragma once

#include <array>
#include <numbers>

#include "dclink/state_space.hpp"
#include "dclink/transfer_function.hpp"

namespace dclink::design {

using lti::FrequencyGrid;
using lti::TransferFunction;

inline constexpr double kRippleOmega = 2.0 * std::numbers::pi * 120.0;

/// Parameters of the notch-shaped inner closed loop from u to i_L.
struct InnerDesign {
  double omega0 = kRippleOmega;  // notch centre, rad/s
  double zeta1 = 0.0;            // numerator damping
  double zeta2 = 0.0;            // denominator damping, > zeta1
  double omega_tilde = 0.0;      // low-pass corner, rad/s, > omega0

  /// Throws DomainError unless 0 < zeta1 < zeta2 and omega_tilde > omega0 > 0.
  void validate() const;
  double notch_ratio() const noexcept { return zeta1 / zeta2; }
};

/// Design used in the single-converter robustness study.
InnerDesign reference_inner_design();

/// (w~/(s+w~)) (s^2 + 2 z1 w0 s + w0^2)/(s^2 + 2 z2 w0 s + w0^2)
TransferFunction shaped_plant(const InnerDesign& d);

/// Second-order current controller that closes 1/(sL) into shaped_plant(d).
/// The closure is re-checked against shaped_plant to 1e-9 before returning.
TransferFunction design_inner(double L, const InnerDesign& d);

/// Bus plant Gv = 1/(sC).
TransferFunction bus_plant(double C);

struct OuterControllers {
  TransferFunction Kv;  // voltage-error path
  TransferFunction Kr;  // current-error path
};

/// The published sixth-order voltage and current controllers.
OuterControllers canonical_outer();

struct WeightSet {
  TransferFunction W1, W2, W3, W4;
};

/// k s / (s + omega_h).
TransferFunction highpass_weight(double k, double omega_h);
TransferFunction default_w4();
/// Published W1..W3 plus the default high-pass W4.
WeightSet canonical_weights();

/// Stacked map [z1 z2 z3 z4 e1 e2]^T = P [V_ref i_load u]^T.
class GeneralizedPlant {
 public:
  static constexpr int kRows = 6;
  static constexpr int kCols = 3;

  GeneralizedPlant(TransferFunction Gv, TransferFunction Gc_tilde, WeightSet w);

  /// 1-based indexing to match the usual (row, column) notation.
  const TransferFunction& entry(int row, int col) const;
  const TransferFunction& Gv() const noexcept { return gv_; }
  const TransferFunction& Gc() const noexcept { return gc_; }
  const WeightSet& weights() const noexcept { return w_; }

  /// Realization assembled from the component blocks (not from the entries),
  /// inputs [V_ref, i_load, u], outputs [z1..z4, e1, e2].
  lti::StateSpace realization() const;

 private:
  TransferFunction gv_, gc_;
  WeightSet w_;
  std::array<std::array<TransferFunction, kCols>, kRows> entries_;
};

/// Lower closure u = Kv e1 + Kr e2; returns the 4x2 map [V_ref, i_load] ->
/// [z1..z4]. Throws DomainError listing the closed-loop poles when the
/// interconnection is not internally stable.
lti::StateSpace weighted_closed_loop(const GeneralizedPlant& gp, const OuterControllers& K);

struct SensitivityFamily {
  TransferFunction S1, T1, S2, T2, H;
};

SensitivityFamily sensitivity_family(const TransferFunction& Gv, const TransferFunction& Gc_tilde,
                                     const OuterControllers& K);

struct ControllerRatio {
  double alpha = 0.0;         // median |Kr/Kv|
  double alpha_signed = 0.0;  // median Re(Kr/Kv)
  double flatness = 0.0;      // max |(|Kr/Kv| - alpha)| / alpha
};

ControllerRatio controller_ratio_analysis(const OuterControllers& K, const FrequencyGrid& grid);

/// First-order droop filter 376.99/(s + 314.16).
TransferFunction droop_filter();

}  // namespace dclink::design
