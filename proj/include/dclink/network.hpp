#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dclink/converter.hpp"
#include "dclink/design.hpp"
#include "dclink/errors.hpp"
#include "dclink/state_space.hpp"

namespace dclink::network {

using lti::Complex;
using lti::TransferFunction;

enum class Mode { centralized, decentralized };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct ConverterSpec {
  converter::ConverterParams plant;
  /// Inductance the inner controller is designed for; 0 means plant.L.
  double design_L = 0.0;

  double inner_design_L() const noexcept { return design_L > 0.0 ? design_L : plant.L; }
};

/// m parallel converters on one DC-link capacitor, sharing one outer design.
struct NetworkConfig {
  std::vector<ConverterSpec> converters;
  design::InnerDesign inner;
  double busC = 0.0;
  design::OuterControllers outer;
  Mode mode = Mode::centralized;
  std::optional<TransferFunction> droop;
  /// Optional per-converter outer controllers. Empty selects the shared
  /// design: Kv/m on the voltage path and Kr on the current path.
  std::vector<design::OuterControllers> per_converter;

  std::size_t m() const noexcept { return converters.size(); }
  design::OuterControllers controllers_for(std::size_t k) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct LoadSpec {
  enum class Kind { resistive, current };
  Kind kind = Kind::resistive;
  double R = 0.0;           // ohm, resistive
  double i_dc = 0.0;        // A, current source
  double ripple_amp = 0.0;  // A, current source
  double ripple_hz = 0.0;

  static LoadSpec resistor(double R) { return {Kind::resistive, R, 0.0, 0.0, 0.0}; }
  static LoadSpec current(double i_dc, double amp = 0.0, double hz = 0.0) { return {Kind::current, 0.0, i_dc, amp, hz}; }

  double current_at(double t, double V) const noexcept;
};

struct Segment {
  double t_start = 0.0;
  double v_ref = 0.0;
  LoadSpec load;
  std::vector<double> gammas;  // centralized
  std::vector<double> i_refs;  // decentralized
};

/// Piecewise schedule; segment k holds from its t_start to the next one.
struct Schedule {
  std::vector<Segment> segments;

  /// Throws ConfigError; centralized schedules need gammas summing to one.
  void validate(std::size_t m, Mode mode) const;
  std::size_t segment_index(double t) const;
};

enum class InitMode { equilibrium, cold };

struct SimOptions {
  double duration = 0.0;
  double Ts = 2e-5;
  int substeps = 4;
  InitMode init = InitMode::equilibrium;
};

struct SaturationEvent {
  std::size_t sample = 0;
  std::size_t converter = 0;
  double raw_duty = 0.0;
};

/// Uniformly sampled logs at the controller period.
struct SimResult {
  double Ts = 0.0;
  std::vector<double> t, Vdc, iload, e1;
  std::vector<std::vector<double>> iL, duty, utilde, e2;  // [converter][sample]
  std::vector<SaturationEvent> saturation;
  std::size_t negative_current_samples = 0;

  std::size_t size() const noexcept { return t.size(); }
  std::size_t m() const noexcept { return iL.size(); }
};

class SimulationDiverged : public NumericalError {
 public:
  SimulationDiverged(std::size_t last_valid, const std::string& what) : NumericalError(what), last_valid_(last_valid) {}
  std::size_t last_valid_sample() const noexcept { return last_valid_; }

 private:
  std::size_t last_valid_;
};

/// Holds the per-converter controller designs discretized on demand.
class SimEngine {
 public:
  explicit SimEngine(NetworkConfig cfg);

  const NetworkConfig& config() const noexcept { return cfg_; }
  const std::vector<TransferFunction>& inner_controllers() const noexcept { return kc_; }

  /// Fixed-step run: controllers update every Ts, the averaged plant is
  /// integrated with RK4 over `substeps` sub-intervals under a held u~.
  SimResult simulate(const Schedule& schedule, const SimOptions& opt) const;

 private:
  struct Loop {
    lti::DiscreteFilter kv, kr, kc;
    std::optional<lti::DiscreteFilter> droop;
  };
  void settle_to_operating_point(const Segment& s, std::vector<Loop>& loops, std::vector<double>& x) const;

  NetworkConfig cfg_;
  std::vector<TransferFunction> kc_;
};

SimEngine build_network(NetworkConfig cfg);

struct ClosedMaps {
  TransferFunction from_Vref;   // V_ref -> V_dc
  TransferFunction from_iload;  // i_load -> V_dc
};

/// Single-converter closure V_dc = S1 (Gv Gc Kv V_ref - Gv i_load).
ClosedMaps single_converter_maps(const TransferFunction& Gv, const TransferFunction& Gc,
                                 const design::OuterControllers& K);

/// Block-algebra closure of the multi-converter network with per-converter
/// references i_k,ref = gamma_k i_load (uniform gammas when empty).
ClosedMaps transfer_functions_of_network(const NetworkConfig& cfg, std::span<const double> gammas = {});

/// Pointwise network response using each converter's own inner loop
/// (plant inductance, its Kc) instead of the shared shaped plant.
std::pair<Complex, Complex> network_frequency_response(const NetworkConfig& cfg, double omega,
                                                       std::span<const double> gammas = {});

}  // namespace dclink::network
