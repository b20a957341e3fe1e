#include "dclink/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dclink/errors.hpp"

namespace dclink::analysis {

namespace {

double relative_deviation(Complex ref, Complex other) {
  const double scale = std::abs(ref);
  const double diff = std::abs(other - ref);
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

SignalStats stats(std::span<const double> v) {
  SignalStats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.peak_to_peak = *hi - *lo;
  return s;
}

// Smallest number of periods that spans an integer number of samples.
std::size_t commensurate_periods(double samples_per_period) {
  for (std::size_t p = 1; p <= 1000; ++p) {
    const double len = samples_per_period * static_cast<double>(p);
    if (std::abs(len - std::round(len)) < 1e-6) return p;
  }
  return 0;
}

}  // namespace

double equivalence_residual(const network::ClosedMaps& single, const network::ClosedMaps& multi,
                            const FrequencyGrid& grid) {
  double worst = 0.0;
  for (double w : grid) {
    worst = std::max(worst, relative_deviation(single.from_Vref.freq_response(w), multi.from_Vref.freq_response(w)));
    worst = std::max(worst, relative_deviation(single.from_iload.freq_response(w), multi.from_iload.freq_response(w)));
  }
  return worst;
}

std::size_t SharingBoundReport::premise_failures() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const SharingPoint& p) { return !p.premise_ok; }));
}

bool SharingBoundReport::passes() const {
  return std::all_of(points.begin(), points.end(), [](const SharingPoint& p) { return !p.premise_ok || p.satisfied; });
}

SharingBoundReport sharing_bound_check(const design::SensitivityFamily& family, const SharingSignals& signals,
                                       std::size_t m, const FrequencyGrid& grid) {
  if (m == 0) throw DomainError("sharing_bound_check: m must be positive");
  if (signals.v_ref.size() != grid.size() || signals.i_load.size() != grid.size() || signals.i_ref.size() != m)
    throw DomainError("sharing_bound_check: signal spectra do not match the grid / converter count");
  for (const auto& r : signals.i_ref)
    if (r.size() != grid.size()) throw DomainError("sharing_bound_check: reference spectrum length mismatch");

  const double md = static_cast<double>(m);
  SharingBoundReport report;
  report.points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid.omegas()[i];
    const Complex H = family.H.freq_response(w);
    const Complex S2 = family.S2.freq_response(w);
    const Complex T1 = family.T1.freq_response(w);
    const Complex T2 = family.T2.freq_response(w);
    const Complex vref = signals.v_ref[i];
    const Complex iload = signals.i_load[i];
    Complex ref_sum(0.0, 0.0);
    for (std::size_t k = 0; k < m; ++k) ref_sum += signals.i_ref[k][i];
    const Complex mismatch = ref_sum - iload;

    SharingPoint p;
    p.omega = w;
    p.epsilon_H = std::abs(H);
    p.epsilon_S2 = std::abs(S2);
    p.epsilon = std::max(p.epsilon_H, p.epsilon_S2);
    p.delta = std::abs(mismatch);
    p.T1 = std::abs(T1);
    p.T2 = std::abs(T2);
    p.premise_ok = p.T1 < 1.0 + p.epsilon && p.T2 < 1.0 + p.epsilon;
    const double eps = p.epsilon;
    p.satisfied = true;
    for (std::size_t k = 0; k < m; ++k) {
      const Complex iref = signals.i_ref[k][i];
      const Complex err = H * vref / md - T1 * T2 * mismatch / md + T1 * S2 * iload / md - S2 * iref;
      const double bound = eps / md * std::abs(vref) + eps * (1.0 + eps) / md * std::abs(iload) +
                           (1.0 + eps) * (1.0 + eps) * p.delta / md + eps * std::abs(iref);
      p.lhs.push_back(std::abs(err));
      p.rhs.push_back(bound);
      p.satisfied = p.satisfied && std::abs(err) < bound;
    }
    report.points.push_back(std::move(p));
  }
  return report;
}

SteadyStateReport steady_state(const network::SimResult& sim, double t_start, double t_end) {
  if (sim.size() == 0) throw DomainError("steady_state: empty simulation result");
  if (!(t_end > t_start)) throw DomainError("steady_state: window end must follow its start");
  const double t_last = sim.t.back() + sim.Ts;
  if (t_start < sim.t.front() - 1e-12 || t_end > t_last + 1e-12)
    throw DomainError("steady_state: window lies outside the simulated range");
  const auto first = static_cast<std::size_t>(std::lower_bound(sim.t.begin(), sim.t.end(), t_start) - sim.t.begin());
  const auto last = static_cast<std::size_t>(std::lower_bound(sim.t.begin(), sim.t.end(), t_end) - sim.t.begin());
  if (last <= first) throw DomainError("steady_state: window contains no samples");

  auto slice = [first, last](const std::vector<double>& v) { return std::span<const double>(v).subspan(first, last - first); };
  SteadyStateReport r;
  r.t_start = t_start;
  r.t_end = t_end;
  r.samples = last - first;
  r.Vdc = stats(slice(sim.Vdc));
  r.iload = stats(slice(sim.iload));
  r.e1 = stats(slice(sim.e1));
  double total = 0.0;
  for (std::size_t k = 0; k < sim.m(); ++k) {
    r.iL.push_back(stats(slice(sim.iL[k])));
    r.duty.push_back(stats(slice(sim.duty[k])));
    total += r.iL.back().mean;
  }
  for (const auto& s : r.iL) r.ratios.push_back(total != 0.0 ? s.mean / total : 0.0);
  return r;
}

double ripple_amplitude(std::span<const double> series, double Ts, double f) {
  if (!(Ts > 0.0) || !(f > 0.0)) throw DomainError("ripple_amplitude: Ts and f must be positive");
  const double per_period = 1.0 / (f * Ts);
  const auto whole_periods = static_cast<std::size_t>(std::floor(static_cast<double>(series.size()) / per_period + 1e-9));
  if (whole_periods == 0) throw DomainError("ripple_amplitude: series shorter than one period");
  std::size_t periods = whole_periods;
  if (const std::size_t step = commensurate_periods(per_period); step > 0 && step <= whole_periods)
    periods = whole_periods / step * step;
  const auto len = std::min(series.size(), static_cast<std::size_t>(std::llround(per_period * static_cast<double>(periods))));
  const auto window = series.last(len);

  // Goertzel recurrence at the exact (possibly fractional) bin.
  const double w = 2.0 * std::numbers::pi * f * Ts;
  const double coeff = 2.0 * std::cos(w);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : window) {
    const double s0 = x + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const Complex X = Complex(s1, 0.0) - std::polar(1.0, -w) * s2;
  return 2.0 * std::abs(X) / static_cast<double>(len);
}

TrackingMetrics tracking_metrics(const network::SimResult& sim, double v_ref_final) {
  if (sim.size() == 0) throw DomainError("tracking_metrics: empty simulation result");
  if (v_ref_final == 0.0) throw DomainError("tracking_metrics: reference must be non-zero");
  const auto& v = sim.Vdc;
  const std::size_t tail = std::max<std::size_t>(1, v.size() / 10);
  const double final_value =
      std::accumulate(v.end() - static_cast<std::ptrdiff_t>(tail), v.end(), 0.0) / static_cast<double>(tail);
  const double move = final_value - v.front();
  const bool has_move = std::abs(move) > 1e-3 * std::abs(final_value);
  const double scale = has_move ? std::abs(move) : std::abs(final_value);

  TrackingMetrics m;
  if (!has_move) {
    double dev = 0.0;
    for (double x : v) dev = std::max(dev, std::abs(x - final_value));
    m.overshoot_pct = 100.0 * dev / scale;
  } else if (move > 0.0) {
    m.overshoot_pct = 100.0 * std::max(0.0, *std::max_element(v.begin(), v.end()) - final_value) / scale;
  } else {
    m.overshoot_pct = 100.0 * std::max(0.0, final_value - *std::min_element(v.begin(), v.end())) / scale;
  }

  const double band = 0.02 * scale;
  std::size_t last_outside = v.size();
  for (std::size_t i = v.size(); i-- > 0;)
    if (std::abs(v[i] - final_value) > band) {
      last_outside = i;
      break;
    }
  if (last_outside == v.size())
    m.settling_time_2pct = sim.t.front();
  else if (last_outside + 1 < v.size())
    m.settling_time_2pct = sim.t[last_outside + 1];

  m.ss_error_pct = 100.0 * std::abs(final_value - v_ref_final) / std::abs(v_ref_final);
  return m;
}

}  // namespace dclink::analysis
