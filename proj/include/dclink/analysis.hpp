#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dclink/design.hpp"
#include "dclink/network.hpp"

namespace dclink::analysis {

using lti::Complex;
using lti::FrequencyGrid;

/// Max relative deviation |multi - single| / |single| over the grid and both
/// channels (V_ref -> V_dc, i_load -> V_dc).
double equivalence_residual(const network::ClosedMaps& single, const network::ClosedMaps& multi,
                            const FrequencyGrid& grid);

/// Complex spectra of the exogenous signals sampled on the analysis grid.
struct SharingSignals {
  std::vector<Complex> v_ref;
  std::vector<Complex> i_load;
  std::vector<std::vector<Complex>> i_ref;  // [converter][grid index]
};

struct SharingPoint {
  double omega = 0.0;
  double epsilon_H = 0.0;
  double epsilon_S2 = 0.0;
  double epsilon = 0.0;  // max(epsilon_H, epsilon_S2)
  double delta = 0.0;    // |sum_k i_k,ref - i_load|
  double T1 = 0.0;
  double T2 = 0.0;
  bool premise_ok = false;  // |T1|, |T2| < 1 + epsilon
  std::vector<double> lhs;  // |iL_k - i_k,ref| per converter
  std::vector<double> rhs;  // bound per converter
  bool satisfied = false;   // lhs_k < rhs_k for every k
};

struct SharingBoundReport {
  std::vector<SharingPoint> points;

  std::size_t premise_failures() const;
  /// True when every point whose premise holds satisfies the strict bound.
  bool passes() const;
};

/// Evaluates the exact current error (left side) and its bound per frequency.
SharingBoundReport sharing_bound_check(const design::SensitivityFamily& family, const SharingSignals& signals,
                                       std::size_t m, const FrequencyGrid& grid);

struct SignalStats {
  double mean = 0.0;
  double peak_to_peak = 0.0;
};

struct SteadyStateReport {
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
  SignalStats Vdc, iload, e1;
  std::vector<SignalStats> iL, duty;
  std::vector<double> ratios;  // iL_k means normalized by their sum
};

/// Statistics over samples with t_start <= t < t_end.
SteadyStateReport steady_state(const network::SimResult& sim, double t_start, double t_end);

/// Amplitude of the f-hertz sinusoid in `series`, from a single-bin DFT over
/// the longest trailing window spanning a whole number of periods.
double ripple_amplitude(std::span<const double> series, double Ts, double f);

struct TrackingMetrics {
  double overshoot_pct = 0.0;
  std::optional<double> settling_time_2pct;  // empty: never settles
  double ss_error_pct = 0.0;
};

/// Step-response metrics of V_dc. The final value is the mean of the last 10%
/// of samples; overshoot and the 2% settling band are relative to the move
/// from the first sample to it (to |final| when there is no move). The
/// steady-state error is measured against `v_ref_final`.
TrackingMetrics tracking_metrics(const network::SimResult& sim, double v_ref_final);

}  // namespace dclink::analysis
