#include "dclink/commands.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "dclink/errors.hpp"

#ifndef DCLINK_VERSION
#define DCLINK_VERSION "unknown"
#endif

namespace dclink::cli {

namespace fs = std::filesystem;
using lti::Complex;
using lti::FrequencyGrid;
using lti::Matrix;
using lti::StateSpace;
using lti::TransferFunction;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
}

// End of segment k: next start, or the simulated horizon for the last one.
double segment_end(const network::Schedule& s, std::size_t k, const network::SimResult& sim) {
  if (k + 1 < s.segments.size()) return s.segments[k + 1].t_start;
  return sim.t.back() + sim.Ts;
}

std::string meta_text(const scenario::Document& doc, const scenario::Scenario& sc, const network::NetworkConfig& cfg) {
  std::ostringstream os;
  os << "dclink_version = " << DCLINK_VERSION << '\n';
  os << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
#ifdef __VERSION__
  os << "compiler = " << __VERSION__ << '\n';
#endif
  os << "scenario = " << doc.source << '\n';
  os << "seed = " << sc.seed << '\n';
  os << "uncertainty = " << num(sc.uncertainty) << '\n';
  os << "mode = " << network::to_string(cfg.mode) << '\n';
  os << "busC_effective = " << num(cfg.busC) << '\n';
  for (std::size_t k = 0; k < cfg.m(); ++k) {
    const auto& c = cfg.converters[k];
    os << "converter." << k + 1 << ".L_effective = " << num(c.plant.L) << '\n';
    os << "converter." << k + 1 << ".L_design = " << num(c.inner_design_L()) << '\n';
  }
  for (std::size_t k = 0; k < sc.schedule.segments.size(); ++k) {
    const auto& s = sc.schedule.segments[k];
    if (cfg.mode == network::Mode::decentralized) os << "segment." << k + 1 << ".i_refs = " << join(s.i_refs) << '\n';
  }
  os << "\n# resolved scenario\n" << doc.to_text();
  return os.str();
}

// Shared error mapping for commands that load and simulate a scenario.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const network::SimulationDiverged& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const SingularError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DomainError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

scenario::Document load_doc(const fs::path& path, const Overrides& o) {
  auto doc = scenario::read_document(path);
  apply(o, doc);
  return doc;
}

struct RunOutput {
  scenario::Scenario sc;
  network::NetworkConfig cfg;
  network::SimResult sim;
  RunSummary summary;
};

RunOutput execute(const scenario::Document& doc) {
  RunOutput r{scenario::build_scenario(doc), {}, {}, {}};
  r.cfg = scenario::realize(r.sc);
  const auto engine = network::build_network(r.cfg);
  r.sim = engine.simulate(r.sc.schedule, r.sc.sim);
  r.summary = summarize(r.sc, r.sim);
  return r;
}

void write_run(const fs::path& dir, const scenario::Document& doc, const RunOutput& r) {
  fs::create_directories(dir);
  write_file(dir / "timeseries.csv", format_timeseries(r.sim));
  write_file(dir / "summary.txt", format_summary(r.summary, doc.source));
  write_file(dir / "meta.txt", meta_text(doc, r.sc, r.cfg));
}

// ---------------------------------------------------------------- verify

struct CheckRow {
  std::string name;
  double value;
  std::string criterion;
  bool pass;
};

StateSpace random_stable(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Matrix A = Matrix::NullaryExpr(n, n, [&] { return g(rng); });
  const double shift = Eigen::EigenSolver<Matrix>(A).eigenvalues().real().maxCoeff() + u(rng);
  A -= shift * Matrix::Identity(n, n);
  Matrix B = Matrix::NullaryExpr(n, 1, [&] { return g(rng); });
  Matrix C = Matrix::NullaryExpr(1, n, [&] { return g(rng); });
  Matrix D = Matrix::NullaryExpr(1, 1, [&] { return 0.5 * g(rng); });
  return {A, B, C, D};
}

double max_relative_gap(const TransferFunction& a, const TransferFunction& b, const FrequencyGrid& grid) {
  double worst = 0.0;
  for (double w : grid) {
    const Complex x = a.freq_response(w);
    worst = std::max(worst, std::abs(b.freq_response(w) - x) / std::abs(x));
  }
  return worst;
}

network::NetworkConfig sharing_network() {
  network::NetworkConfig cfg;
  cfg.converters = {{converter::ConverterParams::buck(1.2e-3, 480.0)},
                    {converter::ConverterParams::buck(1.6e-3, 460.0)},
                    {converter::ConverterParams::buck(1.9e-3, 480.0)}};
  cfg.inner = design::reference_inner_design();
  cfg.busC = 500e-6;
  cfg.outer = design::canonical_outer();
  return cfg;
}

analysis::SharingSignals sharing_signals(const FrequencyGrid& grid, std::span<const double> gammas, double mismatch) {
  analysis::SharingSignals s;
  s.i_ref.assign(gammas.size(), {});
  for (double w : grid) {
    const double phase = std::log10(w);
    const Complex vref = std::polar(240.0, phase);
    const Complex iload = std::polar(20.0, 0.7 * phase + 0.3);
    s.v_ref.push_back(vref);
    s.i_load.push_back(iload);
    for (std::size_t k = 0; k < gammas.size(); ++k)
      s.i_ref[k].push_back(gammas[k] * iload * (1.0 + mismatch * static_cast<double>(k + 1)));
  }
  return s;
}

}  // namespace

void apply(const Overrides& o, scenario::Document& doc) {
  for (const auto& [k, v] : o.keys) doc.set(k, v);
  if (o.seed) doc.set("sim.seed", std::to_string(*o.seed));
  if (o.Ts) doc.set("sim.Ts", num(*o.Ts));
  if (o.duration) doc.set("sim.duration", num(*o.duration));
}

RunSummary summarize(const scenario::Scenario& sc, const network::SimResult& sim) {
  RunSummary out;
  const auto& segs = sc.schedule.segments;
  const double horizon = sim.t.back() + sim.Ts;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    if (segs[k].t_start >= horizon) break;
    const double t0 = segs[k].t_start;
    const double t1 = std::min(segment_end(sc.schedule, k, sim), horizon);
    SegmentSummary seg;
    seg.window = analysis::steady_state(sim, t1 - 0.2 * (t1 - t0), t1);
    const auto& load = segs[k].load;
    if (load.kind == network::LoadSpec::Kind::current && load.ripple_amp > 0.0) {
      const auto first = static_cast<std::size_t>(std::lower_bound(sim.t.begin(), sim.t.end(), seg.window.t_start) -
                                                  sim.t.begin());
      const std::size_t n = seg.window.samples;
      std::vector<double> total(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < sim.m(); ++c) total[i] += sim.iL[c][first + i];
      try {
        seg.ripple_iL_total = analysis::ripple_amplitude(total, sim.Ts, load.ripple_hz);
        seg.ripple_iload = analysis::ripple_amplitude(std::span(sim.iload).subspan(first, n), sim.Ts, load.ripple_hz);
        seg.ripple_Vdc = analysis::ripple_amplitude(std::span(sim.Vdc).subspan(first, n), sim.Ts, load.ripple_hz);
        seg.ripple_hz = load.ripple_hz;
      } catch (const DomainError&) {
        // Window shorter than one ripple period: no ripple metric.
      }
    }
    out.segments.push_back(std::move(seg));
  }
  const std::size_t active = sc.schedule.segment_index(sim.t.back());
  out.v_ref_final = segs[active].v_ref;
  out.tracking = analysis::tracking_metrics(sim, out.v_ref_final);
  out.saturation_events = sim.saturation.size();
  out.negative_current_samples = sim.negative_current_samples;
  return out;
}

std::string format_timeseries(const network::SimResult& sim) {
  std::string s = "t,Vdc,iload";
  for (std::size_t k = 0; k < sim.m(); ++k) s += ",iL_" + std::to_string(k + 1);
  for (std::size_t k = 0; k < sim.m(); ++k) s += ",duty_" + std::to_string(k + 1);
  s += ",e1\n";
  s.reserve(s.size() + sim.size() * (3 + 2 * sim.m() + 1) * 24);
  for (std::size_t i = 0; i < sim.size(); ++i) {
    s += num(sim.t[i]);
    s += ',' + num(sim.Vdc[i]);
    s += ',' + num(sim.iload[i]);
    for (std::size_t k = 0; k < sim.m(); ++k) s += ',' + num(sim.iL[k][i]);
    for (std::size_t k = 0; k < sim.m(); ++k) s += ',' + num(sim.duty[k][i]);
    s += ',' + num(sim.e1[i]);
    s += '\n';
  }
  return s;
}

std::string format_summary(const RunSummary& s, const std::string& scenario_name) {
  std::ostringstream os;
  os << "# dclink run summary\n";
  os << "scenario = " << scenario_name << '\n';
  os << "segments = " << s.segments.size() << '\n';
  for (std::size_t k = 0; k < s.segments.size(); ++k) {
    const auto& w = s.segments[k].window;
    const std::string p = "segment." + std::to_string(k + 1) + ".";
    auto means = [](const std::vector<analysis::SignalStats>& v) {
      std::vector<double> out;
      for (const auto& x : v) out.push_back(x.mean);
      return out;
    };
    auto p2p = [](const std::vector<analysis::SignalStats>& v) {
      std::vector<double> out;
      for (const auto& x : v) out.push_back(x.peak_to_peak);
      return out;
    };
    os << p << "window = " << num(w.t_start) << ' ' << num(w.t_end) << '\n';
    os << p << "samples = " << w.samples << '\n';
    os << p << "Vdc_mean = " << num(w.Vdc.mean) << '\n';
    os << p << "Vdc_p2p = " << num(w.Vdc.peak_to_peak) << '\n';
    os << p << "iload_mean = " << num(w.iload.mean) << '\n';
    os << p << "e1_mean = " << num(w.e1.mean) << '\n';
    os << p << "iL_mean = " << join(means(w.iL)) << '\n';
    os << p << "iL_p2p = " << join(p2p(w.iL)) << '\n';
    os << p << "duty_mean = " << join(means(w.duty)) << '\n';
    os << p << "ratio = " << join(w.ratios) << '\n';
    if (const auto& seg = s.segments[k]; seg.ripple_hz) {
      os << p << "ripple_hz = " << num(*seg.ripple_hz) << '\n';
      os << p << "ripple_iL_total = " << num(seg.ripple_iL_total) << '\n';
      os << p << "ripple_iload = " << num(seg.ripple_iload) << '\n';
      os << p << "ripple_Vdc = " << num(seg.ripple_Vdc) << '\n';
    }
  }
  os << "tracking.v_ref_final = " << num(s.v_ref_final) << '\n';
  os << "tracking.overshoot_pct = " << num(s.tracking.overshoot_pct) << '\n';
  os << "tracking.settling_time_2pct = "
     << (s.tracking.settling_time_2pct ? num(*s.tracking.settling_time_2pct) : std::string("not-reached")) << '\n';
  os << "tracking.ss_error_pct = " << num(s.tracking.ss_error_pct) << '\n';
  os << "saturation_events = " << s.saturation_events << '\n';
  os << "negative_current_samples = " << s.negative_current_samples << '\n';
  return os.str();
}

fs::path default_out_dir(const fs::path& scenario_path) {
  const char* root = std::getenv("DCLINK_OUT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("dclink-out");
  return base / scenario_path.stem();
}

int run(const fs::path& scenario_path, const fs::path& out_dir, const Overrides& o, std::ostream& out,
        std::ostream& err) {
  return guarded(err, [&] {
    const auto doc = load_doc(scenario_path, o);
    const auto r = execute(doc);
    write_run(out_dir, doc, r);
    out << "wrote " << (out_dir / "timeseries.csv").string() << " (" << r.sim.size() << " samples)\n";
    for (std::size_t k = 0; k < r.summary.segments.size(); ++k) {
      const auto& w = r.summary.segments[k].window;
      out << "segment " << k + 1 << ": Vdc " << std::fixed << std::setprecision(3) << w.Vdc.mean << " V, iL";
      for (const auto& s : w.iL) out << ' ' << s.mean;
      out << " A\n" << std::defaultfloat;
    }
    if (r.summary.saturation_events) out << "warning: " << r.summary.saturation_events << " saturated duty samples\n";
    return static_cast<int>(kOk);
  });
}

int verify(const VerifyOptions& opt, std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<CheckRow> rows;
  auto add = [&rows](std::string name, double value, std::string criterion, bool pass) {
    rows.push_back({std::move(name), value, std::move(criterion), pass});
  };
  auto guard = [&add](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(name + " (" + e.what() + ")", std::nan(""), "no exception", false);
    }
  };
  std::mt19937_64 rng(opt.seed);
  const FrequencyGrid grid = FrequencyGrid::standard();
  const auto ref = design::reference_inner_design();

  guard("inner-loop identity", [&] {
    const int draws = opt.full ? 50 : 10;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failures = 0;
    for (int i = 0; i <= draws; ++i) {
      design::InnerDesign d = ref;
      double L = 1.2e-3;
      if (i > 0) {
        L = 1e-4 * std::pow(100.0, u(rng));
        d.zeta1 = 0.05 + 1.95 * u(rng);
        d.zeta2 = d.zeta1 * (1.1 + 4.0 * u(rng));
        d.omega_tilde = d.omega0 * (1.1 + 19.0 * u(rng));
      }
      const TransferFunction kc = design::design_inner(L, d);
      const TransferFunction loop = kc * TransferFunction(lti::Polynomial{1.0}, lti::Polynomial({L, 0.0}));
      if (!lti::coefficients_match(lti::feedback(loop), design::shaped_plant(d), 1e-9)) ++failures;
    }
    add("inner-loop identity (" + std::to_string(draws + 1) + " designs)", failures, "0 mismatches", failures == 0);
  });

  guard("notch magnitude", [&] {
    const double g = std::abs(design::shaped_plant(ref).freq_response(design::kRippleOmega));
    add("|Gc(j 2pi 120)|", g, "0.4900 +/- 1e-4", std::abs(g - 0.49) <= 1e-4);
  });

  guard("equivalence", [&] {
    const auto single = network::single_converter_maps(design::bus_plant(500e-6), design::shaped_plant(ref),
                                                       design::canonical_outer());
    double worst = 0.0;
    double weakest_detection = std::numeric_limits<double>::infinity();
    for (std::size_t m : {2u, 3u, 5u}) {
      network::NetworkConfig cfg = sharing_network();
      cfg.converters.assign(m, cfg.converters.front());
      std::vector<design::OuterControllers> per;
      for (std::size_t k = 0; k < m; ++k) per.push_back(cfg.controllers_for(k));
      cfg.per_converter = std::move(per);
      network::NetworkConfig faulty = cfg;
      faulty.per_converter[0].Kv = 1.01 * faulty.per_converter[0].Kv;
      const auto& used = opt.inject_fault ? faulty : cfg;
      worst = std::max(worst, analysis::equivalence_residual(single, network::transfer_functions_of_network(used), grid));
      weakest_detection = std::min(
          weakest_detection, analysis::equivalence_residual(single, network::transfer_functions_of_network(faulty), grid));
    }
    add("equivalence residual m=2,3,5", worst, "< 1e-8", worst < 1e-8);
    add("1% Kv_1 fault detection", weakest_detection, "> 1e-3", weakest_detection > 1e-3);
  });

  guard("sharing bound", [&] {
    const auto family = design::sensitivity_family(design::bus_plant(500e-6), design::shaped_plant(ref),
                                                   design::canonical_outer());
    const std::vector<double> gammas = {0.5, 0.2, 0.3};
    for (double mismatch : {0.0, 0.05}) {
      const auto rep = analysis::sharing_bound_check(family, sharing_signals(grid, gammas, mismatch), 3, grid);
      std::size_t violations = 0;
      for (const auto& p : rep.points) violations += p.premise_ok && !p.satisfied;
      add(std::string("sharing bound, ") + (mismatch == 0.0 ? "delta = 0" : "delta > 0") + " (" +
              std::to_string(rep.premise_failures()) + " premise gaps)",
          static_cast<double>(violations), "0 violations", rep.passes());
    }
  });

  guard("norm oracle", [&] {
    const int count = opt.full ? 20 : 5;
    const FrequencyGrid dense = FrequencyGrid::logspace(1e-4, 1e4, 20000);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
      const StateSpace sys = random_stable(2 + i % 7, rng);
      const double h = lti::hinf_norm(sys);
      const double g = lti::hinf_norm_grid_oracle(sys, dense);
      worst = std::max(worst, std::abs(h - g) / g);
    }
    add("hinf vs grid, " + std::to_string(count) + " random systems", worst, "< 1e-3", worst < 1e-3);
    const auto wcl = design::weighted_closed_loop(
        design::GeneralizedPlant(design::bus_plant(500e-6), design::shaped_plant(ref), design::canonical_weights()),
        design::canonical_outer());
    const double h = lti::hinf_norm(wcl);
    const double g = lti::hinf_norm_grid_oracle(wcl, FrequencyGrid::logspace(1e-5, 1e7, 20000));
    add("hinf weighted closed loop", h, "oracle within 0.1%", std::abs(h - g) / g < 1e-3);
  });

  guard("lyapunov", [&] {
    double worst = 0.0;
    for (int i = 0; i < (opt.full ? 20 : 5); ++i) {
      const StateSpace sys = random_stable(2 + i % 7, rng);
      const Matrix Q = sys.B * sys.B.transpose();
      const Matrix P = lti::lyap_solve(sys.A, Q);
      worst = std::max(worst, (sys.A * P + P * sys.A.transpose() + Q).norm());
    }
    add("lyapunov residual", worst, "< 1e-10", worst < 1e-10);
  });

  guard("truncation", [&] {
    double worst_margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < (opt.full ? 20 : 5); ++i) {
      const int n = 3 + i % 6;
      const StateSpace sys = random_stable(n, rng);
      const auto red = lti::balanced_truncation(sys, n / 2);
      double tail = 0.0;
      for (std::size_t j = static_cast<std::size_t>(n / 2); j < red.hankel.size(); ++j) tail += red.hankel[j];
      const double err = lti::hinf_norm(lti::difference(sys, red.sys), 1e-10);
      worst_margin = std::max(worst_margin, err - (2.0 * tail + 1e-8));
    }
    add("truncation error - bound", worst_margin, "<= 0", worst_margin <= 0.0);
  });

  guard("round trip", [&] {
    const auto K = design::canonical_outer();
    double worst = 0.0;
    for (const TransferFunction* g : {&K.Kv, &K.Kr}) worst = std::max(worst, max_relative_gap(*g, lti::ss_to_tf(lti::tf_to_ss(*g)), grid));
    add("tf -> ss -> tf controllers", worst, "< 1e-9", worst < 1e-9);
  });

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  bool all = true;
  out << std::left << std::setw(52) << "check" << std::setw(16) << "value" << std::setw(22) << "criterion"
      << "result\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(52) << r.name << std::setw(16) << std::setprecision(6) << r.value << std::setw(22)
        << r.criterion << (r.pass ? "PASS" : "FAIL") << '\n';
    all = all && r.pass;
  }
  out << (opt.full ? "full" : "quick") << " verification " << (all ? "passed" : "FAILED") << " in " << std::fixed
      << std::setprecision(2) << seconds << " s\n"
      << std::defaultfloat;
  return all ? kOk : kVerifyFailed;
}

int sweep(const fs::path& scenario_path, const std::string& param, const std::vector<std::string>& values,
          const fs::path& out_dir, const Overrides& o, std::ostream& out, std::ostream& err) {
  if (values.empty()) {
    err << "config error: sweep needs at least one value for " << param << '\n';
    return kConfigError;
  }
  return guarded(err, [&] {
    // Validate the key against the schema once before running anything.
    {
      auto doc = load_doc(scenario_path, o);
      doc.set(param, values.front());
      scenario::build_scenario(doc);
    }
    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "index,param,value,status,Vdc_mean,overshoot_pct,settling_time_2pct,ss_error_pct,ripple_iL_total,"
           "saturation_events\n";
    int worst = kOk;
    for (std::size_t i = 0; i < values.size(); ++i) {
      char tag[16];
      std::snprintf(tag, sizeof tag, "run_%03zu", i + 1);
      const fs::path dir = out_dir / tag;
      std::ostringstream sub_err;
      RunOutput r;
      const int code = guarded(sub_err, [&] {
        auto doc = load_doc(scenario_path, o);
        doc.set(param, values[i]);
        r = execute(doc);
        write_run(dir, doc, r);
        return static_cast<int>(kOk);
      });
      csv << i + 1 << ',' << param << ',' << values[i] << ',';
      if (code != kOk) {
        err << tag << ": " << sub_err.str();
        csv << "error" << code << ",,,,,,\n";
        worst = std::max(worst, code);
        continue;
      }
      const auto& last = r.summary.segments.back();
      csv << "ok," << num(last.window.Vdc.mean) << ',' << num(r.summary.tracking.overshoot_pct) << ','
          << (r.summary.tracking.settling_time_2pct ? num(*r.summary.tracking.settling_time_2pct) : "not-reached")
          << ',' << num(r.summary.tracking.ss_error_pct) << ','
          << (last.ripple_hz ? num(last.ripple_iL_total) : std::string()) << ',' << r.summary.saturation_events
          << '\n';
      out << tag << ": " << param << " = " << values[i] << ", Vdc " << num(last.window.Vdc.mean) << " V\n";
    }
    write_file(out_dir / "sweep.csv", csv.str());
    return worst;
  });
}

namespace {

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Render bode.csv and ratio.csv written by `dclink freq`."""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
with open(here / "bode.csv") as f:
    rows = list(csv.DictReader(f))
w = [float(r["omega"]) for r in rows]
names = [c[: -len("_mag_db")] for c in rows[0] if c.endswith("_mag_db")]

fig, (mag, ph) = plt.subplots(2, 1, sharex=True, figsize=(8, 7))
for n in names:
    mag.semilogx(w, [float(r[n + "_mag_db"]) for r in rows], label=n)
    ph.semilogx(w, [float(r[n + "_phase_deg"]) for r in rows], label=n)
mag.set_ylabel("magnitude [dB]")
ph.set_ylabel("phase [deg]")
ph.set_xlabel("omega [rad/s]")
mag.legend(ncol=4, fontsize="small")
mag.grid(True, which="both", alpha=0.3)
ph.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig(here / "bode.png", dpi=150)

with open(here / "ratio.csv") as f:
    rows = list(csv.DictReader(f))
fig, ax = plt.subplots(figsize=(8, 3.5))
ax.semilogx([float(r["omega"]) for r in rows], [float(r["ratio_mag"]) for r in rows])
ax.axhline(float(rows[0]["alpha"]), linestyle="--", color="k")
ax.set_xlabel("omega [rad/s]")
ax.set_ylabel("|Kr / Kv|")
ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig(here / "ratio.png", dpi=150)
)";

}  // namespace

int freq(const fs::path& scenario_path, const fs::path& out_dir, const Overrides& o, std::ostream& out,
         std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = scenario::build_scenario(load_doc(scenario_path, o));
    const auto& net = sc.network;
    const TransferFunction Gc = design::shaped_plant(net.inner);
    const auto family = design::sensitivity_family(design::bus_plant(net.busC), Gc, net.outer);
    const FrequencyGrid grid = FrequencyGrid::standard();

    const std::vector<std::pair<std::string, const TransferFunction*>> curves = {
        {"Kv", &net.outer.Kv}, {"Kr", &net.outer.Kr}, {"Gc", &Gc},         {"S1", &family.S1},
        {"T1", &family.T1},    {"S2", &family.S2},    {"T2", &family.T2},  {"H", &family.H}};
    std::ostringstream bode;
    bode << "omega";
    for (const auto& [n, g] : curves) bode << ',' << n << "_mag_db," << n << "_phase_deg";
    bode << '\n';
    std::vector<double> last_phase(curves.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = grid.omegas()[i];
      bode << num(w);
      for (std::size_t c = 0; c < curves.size(); ++c) {
        const Complex v = curves[c].second->freq_response(w);
        double ph = std::arg(v) * 180.0 / std::numbers::pi;
        if (i > 0) ph -= 360.0 * std::round((ph - last_phase[c]) / 360.0);  // unwrap along the grid
        last_phase[c] = ph;
        bode << ',' << num(20.0 * std::log10(std::abs(v))) << ',' << num(ph);
      }
      bode << '\n';
    }

    const auto ratio = design::controller_ratio_analysis(net.outer, grid);
    std::ostringstream rcsv;
    rcsv << "omega,ratio_mag,ratio_phase_deg,alpha,alpha_signed,flatness\n";
    for (double w : grid) {
      const Complex r = net.outer.Kr.freq_response(w) / net.outer.Kv.freq_response(w);
      rcsv << num(w) << ',' << num(std::abs(r)) << ',' << num(std::arg(r) * 180.0 / std::numbers::pi) << ','
           << num(ratio.alpha) << ',' << num(ratio.alpha_signed) << ',' << num(ratio.flatness) << '\n';
    }

    fs::create_directories(out_dir);
    write_file(out_dir / "bode.csv", bode.str());
    write_file(out_dir / "ratio.csv", rcsv.str());
    write_file(out_dir / "plot_bode.py", kPlotScript);
    out << "wrote " << (out_dir / "bode.csv").string() << " (" << grid.size() << " frequencies)\n";
    out << "|Gc(j 2pi 120)| = " << std::setprecision(6)
        << 20.0 * std::log10(std::abs(Gc.freq_response(design::kRippleOmega))) << " dB\n";
    out << "Kr/Kv: alpha " << ratio.alpha << ", signed " << ratio.alpha_signed << ", flatness " << ratio.flatness
        << '\n' << std::defaultfloat;
    return static_cast<int>(kOk);
  });
}

}  // namespace dclink::cli
