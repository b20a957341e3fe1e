#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dclink/analysis.hpp"
#include "dclink/errors.hpp"

using namespace dclink;
using namespace dclink::analysis;
using lti::TransferFunction;

namespace {

network::SimResult synthetic(std::size_t n, double Ts, auto&& v, auto&& i1, auto&& i2) {
  network::SimResult r;
  r.Ts = Ts;
  r.iL.resize(2);
  r.duty.resize(2);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * Ts;
    r.t.push_back(t);
    r.Vdc.push_back(v(t));
    r.iload.push_back(i1(t) + i2(t));
    r.e1.push_back(0.0);
    r.iL[0].push_back(i1(t));
    r.iL[1].push_back(i2(t));
    r.duty[0].push_back(0.5);
    r.duty[1].push_back(0.5);
  }
  return r;
}

std::vector<double> sampled(std::size_t n, double Ts, auto&& f) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = f(static_cast<double>(k) * Ts);
  return out;
}

design::SensitivityFamily canonical_family() {
  return design::sensitivity_family(design::bus_plant(500e-6), design::shaped_plant(design::reference_inner_design()),
                                    design::canonical_outer());
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("ripple amplitude of a pure tone") {
    const double Ts = 2e-5;
    const auto x = sampled(4167, Ts, [](double t) { return 0.4 * std::sin(2.0 * std::numbers::pi * 120.0 * t); });
    CHECK(ripple_amplitude(x, Ts, 120.0) == doctest::Approx(0.4).epsilon(1e-6));
  }

  TEST_CASE("ripple amplitude is linear and ignores dc") {
    const double Ts = 2e-5;
    auto tone = [](double a, double dc) {
      return [a, dc](double t) { return dc + a * std::cos(2.0 * std::numbers::pi * 120.0 * t + 0.3); };
    };
    const double a1 = ripple_amplitude(sampled(6000, Ts, tone(1.0, 0.0)), Ts, 120.0);
    CHECK(ripple_amplitude(sampled(6000, Ts, tone(3.0, 0.0)), Ts, 120.0) == doctest::Approx(3.0 * a1).epsilon(1e-9));
    CHECK(ripple_amplitude(sampled(6000, Ts, tone(1.0, 50.0)), Ts, 120.0) == doctest::Approx(a1).epsilon(1e-9));
    CHECK(ripple_amplitude(sampled(6000, Ts, tone(0.0, 7.0)), Ts, 120.0) < 1e-9);
    CHECK_THROWS_AS(ripple_amplitude(sampled(100, Ts, tone(1.0, 0.0)), Ts, 120.0), DomainError);
  }

  TEST_CASE("steady state of constant signals") {
    const auto r = synthetic(1000, 1e-3, [](double) { return 240.0; }, [](double) { return 6.0; }, [](double) { return 2.0; });
    const auto s = steady_state(r, 0.5, 1.0);
    CHECK(s.samples == 500);
    CHECK(s.Vdc.mean == 240.0);
    CHECK(s.Vdc.peak_to_peak == 0.0);
    CHECK(s.ratios[0] == doctest::Approx(0.75));
    CHECK(s.ratios[0] + s.ratios[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(steady_state(r, 0.5, 2.0), DomainError);
    CHECK_THROWS_AS(steady_state(r, 0.6, 0.5), DomainError);
  }

  TEST_CASE("tracking metrics") {
    auto first_order = [](double t) { return 240.0 * (1.0 - std::exp(-t / 0.01)); };
    auto zero = [](double) { return 0.0; };
    const auto r = synthetic(20000, 1e-5, first_order, zero, zero);
    auto m = tracking_metrics(r, 240.0);
    CHECK(m.overshoot_pct < 1e-5);
    REQUIRE(m.settling_time_2pct.has_value());
    CHECK(*m.settling_time_2pct == doctest::Approx(0.01 * std::log(50.0)).epsilon(1e-3));
    CHECK(m.ss_error_pct < 1e-5);

    // Settled from the start with a steady offset below the reference.
    auto offset = [](double) { return 239.0; };
    const auto flat = tracking_metrics(synthetic(1000, 1e-3, offset, zero, zero), 240.0);
    CHECK(flat.overshoot_pct == 0.0);
    REQUIRE(flat.settling_time_2pct.has_value());
    CHECK(*flat.settling_time_2pct == 0.0);
    CHECK(flat.ss_error_pct == doctest::Approx(100.0 / 240.0));

    auto ramp = [](double t) { return 120.0 * t; };
    const auto never = tracking_metrics(synthetic(1000, 1e-3, ramp, zero, zero), 240.0);
    CHECK_FALSE(never.settling_time_2pct.has_value());

    auto ringing = [](double t) { return 240.0 * (1.0 - std::exp(-t / 0.01) * std::cos(300.0 * t)); };
    CHECK(tracking_metrics(synthetic(10000, 1e-5, ringing, zero, zero), 240.0).overshoot_pct > 0.0);
  }

  TEST_CASE("equivalence residual") {
    const auto grid = lti::FrequencyGrid::standard();
    const auto K = design::canonical_outer();
    const auto Gv = design::bus_plant(500e-6);
    const auto Gc = design::shaped_plant(design::reference_inner_design());
    const auto single = network::single_converter_maps(Gv, Gc, K);
    CHECK(equivalence_residual(single, single, grid) == 0.0);
    const auto tweaked = network::single_converter_maps(Gv, Gc, {1.1 * K.Kv, K.Kr});
    CHECK(equivalence_residual(single, tweaked, grid) > 1e-3);
  }

  TEST_CASE("sharing bound holds with matched references") {
    const auto grid = lti::FrequencyGrid::standard();
    SharingSignals s;
    const std::vector<double> gammas = {0.5, 0.2, 0.3};
    s.i_ref.resize(3);
    for (double w : grid) {
      s.v_ref.push_back(std::polar(240.0, 0.1 * w));
      s.i_load.push_back(std::polar(20.0, -0.2 * w));
      for (std::size_t k = 0; k < 3; ++k) s.i_ref[k].push_back(gammas[k] * s.i_load.back());
    }
    const auto rep = sharing_bound_check(canonical_family(), s, 3, grid);
    CHECK(rep.passes());
    for (const auto& p : rep.points) {
      CHECK(p.delta < 1e-12);
      CHECK(p.epsilon == std::max(p.epsilon_H, p.epsilon_S2));
    }
    // Low frequency: H and S2 vanish, so the error does too.
    CHECK(rep.points.front().lhs[0] < 1e-2);
  }

  TEST_CASE("ideal synthetic family reduces the bound to the mismatch term") {
    design::SensitivityFamily ideal{TransferFunction::gain(0.0), TransferFunction::gain(0.0), TransferFunction::gain(0.0),
                                    TransferFunction::gain(1.0), TransferFunction::gain(0.0)};
    const lti::FrequencyGrid grid({1.0, 10.0});
    SharingSignals s{{240.0, 240.0}, {20.0, 20.0}, {{9.0, 9.0}, {9.0, 9.0}}};
    const auto rep = sharing_bound_check(ideal, s, 2, grid);
    for (const auto& p : rep.points) {
      CHECK(p.delta == doctest::Approx(2.0));
      CHECK(p.rhs[0] == doctest::Approx(1.0));
      CHECK(p.lhs[0] == 0.0);
      CHECK(p.satisfied);
    }
    CHECK_THROWS_AS(sharing_bound_check(ideal, s, 3, grid), DomainError);
  }
}
