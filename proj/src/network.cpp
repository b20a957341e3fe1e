#include "dclink/network.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace dclink::network {

namespace {

std::string converter_path(std::size_t k, const char* field) {
  return "converter." + std::to_string(k + 1) + "." + field;
}

std::string segment_path(std::size_t k, const char* field) {
  return "segment." + std::to_string(k + 1) + "." + field;
}

std::vector<double> uniform_or(std::span<const double> gammas, std::size_t m) {
  if (gammas.empty()) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  if (gammas.size() != m) throw DomainError("gamma vector length does not match the converter count");
  return {gammas.begin(), gammas.end()};
}

lti::DiscreteFilter make_filter(const TransferFunction& g, double Ts) {
  return lti::DiscreteFilter(lti::discretize_tustin(lti::tf_to_ss(g), Ts));
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::centralized ? "centralized" : "decentralized"; }

Mode mode_from_string(std::string_view s) {
  if (s == "centralized") return Mode::centralized;
  if (s == "decentralized") return Mode::decentralized;
  throw DomainError("unknown mode '" + std::string(s) + "'");
}

design::OuterControllers NetworkConfig::controllers_for(std::size_t k) const {
  if (!per_converter.empty()) return per_converter.at(k);
  return {(1.0 / static_cast<double>(m())) * outer.Kv, outer.Kr};
}

void NetworkConfig::validate() const {
  if (converters.empty()) throw ConfigError("network.converters", "at least one converter is required");
  if (!(busC > 0.0)) throw ConfigError("network.busC", "bus capacitance must be positive");
  try {
    inner.validate();
  } catch (const DomainError& e) {
    throw ConfigError("inner", e.what());
  }
  for (std::size_t k = 0; k < converters.size(); ++k) {
    const auto& c = converters[k];
    if (!(c.plant.L > 0.0)) throw ConfigError(converter_path(k, "L"), "inductance must be positive");
    if (!(c.plant.Vg > 0.0)) throw ConfigError(converter_path(k, "Vg"), "source voltage must be positive");
    if (c.design_L < 0.0) throw ConfigError(converter_path(k, "design_L"), "design inductance must be positive");
    if (c.plant.topology == converter::Topology::boost && !(c.plant.Dprime > 0.0 && c.plant.Dprime < 1.0))
      throw ConfigError(converter_path(k, "topology"), "boost converter requires 0 < D' < 1");
  }
  if (mode == Mode::decentralized && !droop) throw ConfigError("mode.droop", "decentralized mode needs a droop filter");
  if (!per_converter.empty() && per_converter.size() != converters.size())
    throw ConfigError("controllers", "per-converter controller list must have one entry per converter");
  auto check_proper = [](const TransferFunction& g, const std::string& where) {
    if (!g.is_proper()) throw ConfigError(where, "controller must be proper");
  };
  check_proper(outer.Kv, "controllers.Kv");
  check_proper(outer.Kr, "controllers.Kr");
  if (droop) check_proper(*droop, "mode.droop");
}

double LoadSpec::current_at(double t, double V) const noexcept {
  if (kind == Kind::resistive) return V / R;
  return i_dc + ripple_amp * std::sin(2.0 * std::numbers::pi * ripple_hz * t);
}

void Schedule::validate(std::size_t m, Mode mode) const {
  if (segments.empty()) throw ConfigError("schedule", "at least one segment is required");
  if (segments.front().t_start != 0.0) throw ConfigError(segment_path(0, "t_start"), "first segment must start at 0");
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    if (k > 0 && !(s.t_start > segments[k - 1].t_start))
      throw ConfigError(segment_path(k, "t_start"), "segment start times must be strictly increasing");
    if (!(s.v_ref > 0.0)) throw ConfigError(segment_path(k, "V_ref"), "reference voltage must be positive");
    if (s.load.kind == LoadSpec::Kind::resistive) {
      if (!(s.load.R > 0.0)) throw ConfigError(segment_path(k, "R"), "load resistance must be positive");
    } else {
      if (!std::isfinite(s.load.i_dc)) throw ConfigError(segment_path(k, "i_load"), "load current must be finite");
      if (s.load.ripple_amp < 0.0) throw ConfigError(segment_path(k, "ripple_amp"), "ripple amplitude must be >= 0");
      if (s.load.ripple_amp > 0.0 && !(s.load.ripple_hz > 0.0))
        throw ConfigError(segment_path(k, "ripple_hz"), "ripple frequency must be positive");
    }
    if (mode == Mode::centralized) {
      if (s.gammas.size() != m)
        throw ConfigError(segment_path(k, "gammas"), "expected " + std::to_string(m) + " sharing ratios");
      double sum = 0.0;
      for (double g : s.gammas) {
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError(segment_path(k, "gammas"), "each ratio must lie in [0, 1]");
        sum += g;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(segment_path(k, "gammas"), "sharing ratios must sum to 1");
    } else {
      if (s.i_refs.size() != m)
        throw ConfigError(segment_path(k, "i_refs"), "expected " + std::to_string(m) + " reference currents");
    }
  }
}

std::size_t Schedule::segment_index(double t) const {
  std::size_t idx = 0;
  for (std::size_t k = 1; k < segments.size(); ++k)
    if (segments[k].t_start <= t) idx = k;
  return idx;
}

SimEngine::SimEngine(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  kc_.reserve(cfg_.m());
  for (std::size_t k = 0; k < cfg_.m(); ++k) {
    try {
      kc_.push_back(design::design_inner(cfg_.converters[k].inner_design_L(), cfg_.inner));
    } catch (const DomainError& e) {
      throw ConfigError(converter_path(k, "L"), e.what());
    }
  }
}

// DC operating point of the first segment with every controller state settled.
// With u~ = 0 the inner loop forces u_k = iL_k; unknowns are e1 and iL_k.
void SimEngine::settle_to_operating_point(const Segment& s, std::vector<Loop>& loops, std::vector<double>& x) const {
  const std::size_t m = cfg_.m();
  const auto n = static_cast<Eigen::Index>(m + 1);
  // Affine load i = a + b V, with V = v_ref - e1.
  const double a = s.load.current_at(0.0, 0.0);
  const double b = s.load.current_at(0.0, 1.0) - a;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::vector<double> kr0(m);
  std::vector<double> droop0(m, 0.0);
  try {
    for (std::size_t k = 0; k < m; ++k) {
      const auto K = cfg_.controllers_for(k);
      const auto i = static_cast<Eigen::Index>(k + 1);
      const double kv0 = K.Kv.dc_gain();
      kr0[k] = K.Kr.dc_gain();
      if (cfg_.mode == Mode::decentralized) droop0[k] = cfg_.droop->dc_gain();
      // Kv0 e1 + Kr0 (ref_k - iL_k) - iL_k = 0
      M(i, 0) = kv0;
      M(i, i) = -(1.0 + kr0[k]);
      if (cfg_.mode == Mode::centralized) {
        M(i, 0) -= kr0[k] * s.gammas[k] * b;
        rhs(i) = -kr0[k] * s.gammas[k] * (a + b * s.v_ref);
      } else {
        M(i, 0) += kr0[k] * droop0[k];
        rhs(i) = -kr0[k] * s.i_refs[k];
      }
      const converter::BusFeed unit{cfg_.converters[k].plant.topology, cfg_.converters[k].plant.Dprime, 1.0};
      M(0, i) = unit.effective_current();
    }
  } catch (const SingularError&) {
    throw ConfigError("sim.init", "equilibrium start needs controllers with finite dc gain; use init = cold");
  }
  // Bus balance: sum of feeds = a + b (v_ref - e1).
  M(0, 0) = b;
  rhs(0) = a + b * s.v_ref;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw ConfigError("sim.init", "no dc operating point for the first segment; use init = cold");
  const Eigen::VectorXd z = lu.solve(rhs);
  const double e1 = z(0);
  x[m] = s.v_ref - e1;
  const double i_meas = a + b * x[m];
  for (std::size_t k = 0; k < m; ++k) {
    x[k] = z(static_cast<Eigen::Index>(k + 1));
    double ref = s.gammas.empty() ? 0.0 : s.gammas[k] * i_meas;
    if (cfg_.mode == Mode::decentralized) {
      loops[k].droop->settle_to(e1);
      ref = s.i_refs[k] + droop0[k] * e1;
    }
    loops[k].kv.settle_to(e1);
    loops[k].kr.settle_to(ref - x[k]);
    loops[k].kc.settle_to(0.0);
  }
}

SimEngine build_network(NetworkConfig cfg) { return SimEngine(std::move(cfg)); }

SimResult SimEngine::simulate(const Schedule& schedule, const SimOptions& opt) const {
  const std::size_t m = cfg_.m();
  schedule.validate(m, cfg_.mode);
  if (!(opt.Ts > 0.0)) throw ConfigError("sim.Ts", "sample period must be positive");
  if (opt.substeps < 1) throw ConfigError("sim.substeps", "substeps must be at least 1");
  if (!(opt.duration >= opt.Ts * (1.0 - 1e-9))) throw ConfigError("sim.duration", "duration must be at least one sample");

  const double Ts = opt.Ts;
  const auto samples = static_cast<std::size_t>(std::llround(opt.duration / Ts));

  // Segment k becomes active at the first sample at or after its start.
  std::vector<std::size_t> seg_start(schedule.segments.size());
  for (std::size_t k = 0; k < seg_start.size(); ++k)
    seg_start[k] = static_cast<std::size_t>(std::ceil(schedule.segments[k].t_start / Ts - 1e-9));

  std::vector<Loop> loops;
  loops.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = cfg_.controllers_for(k);
    Loop l{make_filter(K.Kv, Ts), make_filter(K.Kr, Ts), make_filter(kc_[k], Ts), std::nullopt};
    if (cfg_.mode == Mode::decentralized) l.droop = make_filter(*cfg_.droop, Ts);
    loops.push_back(std::move(l));
  }

  // Plant state: [iL_1 .. iL_m, V].
  std::vector<double> x(m + 1, 0.0);
  const Segment& first = schedule.segments.front();
  if (opt.init == InitMode::equilibrium) {
    settle_to_operating_point(first, loops, x);
  } else {
    // Boost stages precharge the bus to their input voltage through the diode.
    for (const auto& c : cfg_.converters)
      if (c.plant.topology == converter::Topology::boost) x[m] = std::max(x[m], c.plant.Vg);
  }

  SimResult r;
  r.Ts = Ts;
  auto reserve = [samples](std::vector<double>& v) { v.reserve(samples); };
  for (auto* v : {&r.t, &r.Vdc, &r.iload, &r.e1}) reserve(*v);
  for (auto* vv : {&r.iL, &r.duty, &r.utilde, &r.e2}) {
    vv->assign(m, {});
    for (auto& v : *vv) reserve(v);
  }

  std::vector<double> u_hold(m, 0.0);
  std::vector<converter::BusFeed> feeds(m);
  for (std::size_t k = 0; k < m; ++k) {
    feeds[k].topology = cfg_.converters[k].plant.topology;
    feeds[k].Dprime = cfg_.converters[k].plant.Dprime;
  }
  const converter::BusState bus_shape{0.0, cfg_.busC};

  auto derivative = [&](double t, const std::vector<double>& s, const LoadSpec& load, std::vector<double>& out) {
    for (std::size_t k = 0; k < m; ++k) {
      out[k] = converter::inductor_derivative(cfg_.converters[k].plant, u_hold[k]);
      feeds[k].iL = s[k];
    }
    out[m] = converter::bus_derivative(bus_shape, feeds, load.current_at(t, s[m]));
  };

  std::vector<double> k1(m + 1), k2(m + 1), k3(m + 1), k4(m + 1), tmp(m + 1);
  std::size_t seg = 0;
  for (std::size_t n = 0; n < samples; ++n) {
    while (seg + 1 < seg_start.size() && seg_start[seg + 1] <= n) ++seg;
    const Segment& s = schedule.segments[seg];
    const double t = static_cast<double>(n) * Ts;
    const double V = x[m];
    const double i_meas = s.load.current_at(t, V);
    const double e1 = s.v_ref - V;

    r.t.push_back(t);
    r.Vdc.push_back(V);
    r.iload.push_back(i_meas);
    r.e1.push_back(e1);

    for (std::size_t k = 0; k < m; ++k) {
      Loop& l = loops[k];
      const double ref = cfg_.mode == Mode::centralized ? s.gammas[k] * i_meas : s.i_refs[k] + l.droop->step(e1);
      const double e2 = ref - x[k];
      const double u = l.kv.step(e1) + l.kr.step(e2);
      const double u_tilde = l.kc.step(u - x[k]);
      const auto cmd = converter::duty_from_control(cfg_.converters[k].plant, u_tilde, V);
      if (cmd.saturated) r.saturation.push_back({n, k, cmd.raw_duty});
      if (x[k] < 0.0) ++r.negative_current_samples;
      u_hold[k] = cmd.u_applied;
      r.iL[k].push_back(x[k]);
      r.duty[k].push_back(cmd.duty);
      r.utilde[k].push_back(cmd.u_applied);
      r.e2[k].push_back(e2);
    }

    // Classical RK4 over the hold interval.
    const double h = Ts / opt.substeps;
    for (int sub = 0; sub < opt.substeps; ++sub) {
      const double ts = t + sub * h;
      derivative(ts, x, s.load, k1);
      for (std::size_t i = 0; i <= m; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      derivative(ts + 0.5 * h, tmp, s.load, k2);
      for (std::size_t i = 0; i <= m; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      derivative(ts + 0.5 * h, tmp, s.load, k3);
      for (std::size_t i = 0; i <= m; ++i) tmp[i] = x[i] + h * k3[i];
      derivative(ts + h, tmp, s.load, k4);
      for (std::size_t i = 0; i <= m; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    const bool finite = std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v) && std::abs(v) < 1e9; });
    if (!finite)
      throw SimulationDiverged(n, "simulation diverged after sample " + std::to_string(n) + " (t = " + std::to_string(t) + " s)");
  }
  return r;
}

ClosedMaps single_converter_maps(const TransferFunction& Gv, const TransferFunction& Gc,
                                 const design::OuterControllers& K) {
  const auto f = design::sensitivity_family(Gv, Gc, K);
  return {f.T1, -(Gv * f.S1)};
}

ClosedMaps transfer_functions_of_network(const NetworkConfig& cfg, std::span<const double> gammas) {
  cfg.validate();
  const std::size_t m = cfg.m();
  const auto g = uniform_or(gammas, m);
  const TransferFunction Gv = design::bus_plant(cfg.busC);
  const TransferFunction Gc = design::shaped_plant(cfg.inner);

  // sum_k iL_k = A e1 + B i_load with iL_k = Gc S2_k (Kv_k e1 + Kr_k g_k i_load).
  std::optional<TransferFunction> A;
  std::optional<TransferFunction> B;
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = cfg.controllers_for(k);
    const TransferFunction path = Gc * lti::sensitivity(Gc * K.Kr);
    const TransferFunction a = path * K.Kv;
    const TransferFunction b = g[k] * (path * K.Kr);
    A = A ? *A + a : a;
    B = B ? *B + b : b;
  }
  const TransferFunction loop = Gv * *A;
  return {lti::feedback(loop), Gv * (*B - TransferFunction::gain(1.0)) * lti::sensitivity(loop)};
}

std::pair<Complex, Complex> network_frequency_response(const NetworkConfig& cfg, double omega,
                                                       std::span<const double> gammas) {
  cfg.validate();
  const std::size_t m = cfg.m();
  const auto g = uniform_or(gammas, m);
  const Complex s(0.0, omega);
  Complex a(0.0, 0.0);
  Complex b(0.0, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& conv = cfg.converters[k];
    const auto K = cfg.controllers_for(k);
    const Complex kc = design::design_inner(conv.inner_design_L(), cfg.inner)(s);
    const Complex plant = 1.0 / (s * conv.plant.L);
    const Complex inner = kc * plant / (1.0 + kc * plant);
    const Complex kr = K.Kr(s);
    const Complex scale = inner / (1.0 + inner * kr) * (conv.plant.topology == converter::Topology::boost ? conv.plant.Dprime : 1.0);
    a += scale * K.Kv(s);
    b += scale * kr * g[k];
  }
  const Complex bus = s * cfg.busC;
  return {a / (bus + a), (b - 1.0) / (bus + a)};
}

}  // namespace dclink::network
