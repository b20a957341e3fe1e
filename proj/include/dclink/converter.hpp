#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace dclink::converter {

enum class Topology { buck, boost };

std::string_view to_string(Topology t);
Topology topology_from_string(std::string_view s);

/// Averaged-model parameters of one converter.
struct ConverterParams {
  Topology topology = Topology::buck;
  double L = 0.0;       // H
  double Vg = 0.0;      // V, source voltage
  double Dprime = 1.0;  // boost only: Vg / V_ref

  /// Boost parameters with D' derived from the regulated voltage.
  static ConverterParams boost(double L, double Vg, double v_ref);
  static ConverterParams buck(double L, double Vg) { return {Topology::buck, L, Vg, 1.0}; }

  /// Checks L, Vg > 0 and the step-down/step-up relation against v_ref.
  void validate(double v_ref) const;
};

struct ConverterState {
  double iL = 0.0;  // A
};

struct BusState {
  double V = 0.0;  // V
  double C = 0.0;  // F
};

/// Contribution of one converter to the bus node.
struct BusFeed {
  Topology topology = Topology::buck;
  double Dprime = 1.0;
  double iL = 0.0;

  double effective_current() const noexcept { return topology == Topology::boost ? Dprime * iL : iL; }
};

/// L di/dt = u~ for both topologies.
double inductor_derivative(const ConverterParams& p, double u_tilde);

/// (sum of effective currents - i_load) / C.
double bus_derivative(const BusState& bus, std::span<const BusFeed> feeds, double i_load);

struct DutyCommand {
  double duty = 0.0;       // switch on-fraction d
  double raw_duty = 0.0;   // before clamping to [0, 1]
  bool saturated = false;
  double u_applied = 0.0;  // u~ realized by the clamped duty
};

/// Buck: d = (u~ + V)/Vg. Boost: d' = (Vg - u~)/V, d = 1 - d'. Both clamped
/// to [0, 1]. Throws DomainError for a boost with V <= 0.
DutyCommand duty_from_control(const ConverterParams& p, double u_tilde, double V);

/// Scales L by a uniform draw in [1 - fraction, 1 + fraction]; deterministic
/// for a fixed seed. Topology, Vg and D' are preserved.
ConverterParams perturb_params(const ConverterParams& p, double fraction, std::uint64_t seed);

/// The same draw applied to a scalar (used for the bus capacitance).
double perturb_value(double nominal, double fraction, std::uint64_t seed);

}  // namespace dclink::converter
