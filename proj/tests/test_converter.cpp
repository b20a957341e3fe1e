#include <doctest.h>

#include <array>

#include "dclink/converter.hpp"
#include "dclink/errors.hpp"

using namespace dclink;
using namespace dclink::converter;

TEST_SUITE("converter") {
  TEST_CASE("buck duty reconstruction") {
    const auto p = ConverterParams::buck(1.2e-3, 480.0);
    const auto d = duty_from_control(p, 0.0, 240.0);
    CHECK(d.duty == doctest::Approx(0.5));
    CHECK_FALSE(d.saturated);
    CHECK(d.u_applied == 0.0);

    const auto hi = duty_from_control(p, 400.0, 240.0);
    CHECK(hi.saturated);
    CHECK(hi.duty == 1.0);
    CHECK(hi.raw_duty == doctest::Approx(640.0 / 480.0));
    CHECK(hi.u_applied == doctest::Approx(240.0));

    const auto lo = duty_from_control(p, -300.0, 240.0);
    CHECK(lo.duty == 0.0);
    CHECK(lo.u_applied == doctest::Approx(-240.0));
  }

  TEST_CASE("boost duty reconstruction") {
    const auto p = ConverterParams::boost(1e-3, 120.0, 240.0);
    CHECK(p.Dprime == doctest::Approx(0.5));
    const auto d = duty_from_control(p, 0.0, 240.0);
    CHECK(d.duty == doctest::Approx(0.5));
    CHECK_THROWS_AS(duty_from_control(p, 0.0, 0.0), DomainError);
  }

  TEST_CASE("averaged derivatives") {
    const auto p = ConverterParams::buck(2e-3, 480.0);
    CHECK(inductor_derivative(p, 4.0) == doctest::Approx(2000.0));
    const std::array<BusFeed, 2> feeds = {BusFeed{Topology::buck, 1.0, 12.0}, BusFeed{Topology::boost, 0.5, 10.0}};
    CHECK(bus_derivative({240.0, 1e-3}, feeds, 15.0) == doctest::Approx(2000.0));
  }

  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(ConverterParams::buck(1e-3, 480.0).validate(240.0));
    CHECK_THROWS_AS(ConverterParams::buck(1e-3, 200.0).validate(240.0), DomainError);
    CHECK_THROWS_AS(ConverterParams::buck(0.0, 480.0).validate(240.0), DomainError);
    CHECK_THROWS_AS(ConverterParams::boost(1e-3, 300.0, 240.0).validate(240.0), DomainError);
    CHECK(topology_from_string("boost") == Topology::boost);
    CHECK_THROWS_AS(topology_from_string("flyback"), DomainError);
  }

  TEST_CASE("perturbation is bounded and reproducible") {
    const auto p = ConverterParams::buck(1e-3, 480.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto q = perturb_params(p, 0.2, seed);
      CHECK(q.L >= 0.8e-3);
      CHECK(q.L <= 1.2e-3);
      CHECK(q.Vg == p.Vg);
      CHECK(perturb_params(p, 0.2, seed).L == q.L);
    }
    CHECK(perturb_value(5.0, 0.0, 3) == 5.0);
    CHECK_THROWS_AS(perturb_value(5.0, 1.0, 3), DomainError);
  }
}
