#include "dclink/converter.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dclink/errors.hpp"

namespace dclink::converter {

std::string_view to_string(Topology t) { return t == Topology::buck ? "buck" : "boost"; }

Topology topology_from_string(std::string_view s) {
  if (s == "buck") return Topology::buck;
  if (s == "boost") return Topology::boost;
  throw DomainError("unknown converter topology '" + std::string(s) + "'");
}

ConverterParams ConverterParams::boost(double L, double Vg, double v_ref) {
  if (!(v_ref > 0.0)) throw DomainError("boost: reference voltage must be positive");
  return {Topology::boost, L, Vg, Vg / v_ref};
}

void ConverterParams::validate(double v_ref) const {
  if (!(L > 0.0)) throw DomainError("converter inductance must be positive");
  if (!(Vg > 0.0)) throw DomainError("converter source voltage must be positive");
  if (topology == Topology::buck) {
    if (!(v_ref < Vg)) throw DomainError("buck converter requires V_ref < Vg");
  } else {
    if (!(v_ref > Vg)) throw DomainError("boost converter requires V_ref > Vg");
    if (!(Dprime > 0.0 && Dprime < 1.0)) throw DomainError("boost converter requires 0 < D' < 1");
  }
}

double inductor_derivative(const ConverterParams& p, double u_tilde) { return u_tilde / p.L; }

double bus_derivative(const BusState& bus, std::span<const BusFeed> feeds, double i_load) {
  double total = 0.0;
  for (const BusFeed& f : feeds) total += f.effective_current();
  return (total - i_load) / bus.C;
}

DutyCommand duty_from_control(const ConverterParams& p, double u_tilde, double V) {
  DutyCommand out;
  if (p.topology == Topology::buck) {
    out.raw_duty = (u_tilde + V) / p.Vg;
    out.duty = std::clamp(out.raw_duty, 0.0, 1.0);
    out.u_applied = -V + out.duty * p.Vg;
  } else {
    if (!(V > 0.0)) throw DomainError("duty_from_control: boost converter needs a positive bus voltage");
    const double raw_off = (p.Vg - u_tilde) / V;
    const double off = std::clamp(raw_off, 0.0, 1.0);
    out.raw_duty = 1.0 - raw_off;
    out.duty = 1.0 - off;
    out.u_applied = p.Vg - off * V;
  }
  out.saturated = out.duty != out.raw_duty;
  if (!out.saturated) out.u_applied = u_tilde;
  return out;
}

double perturb_value(double nominal, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("perturbation fraction must lie in [0, 1)");
  if (fraction == 0.0) return nominal;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1.0 - fraction, 1.0 + fraction);
  return nominal * dist(rng);
}

ConverterParams perturb_params(const ConverterParams& p, double fraction, std::uint64_t seed) {
  ConverterParams out = p;
  out.L = perturb_value(p.L, fraction, seed);
  return out;
}

}  // namespace dclink::converter
