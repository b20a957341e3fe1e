#include <doctest.h>

#include <filesystem>

#include "dclink/errors.hpp"
#include "dclink/scenario.hpp"

using namespace dclink;
using namespace dclink::scenario;

namespace {

const char* kMinimal = R"(
[network]
busC = 500e-6
converters = 2

[converter.1]
L = 1.2e-3
Vg = 480

[converter.2]
topology = buck
L = 1.6e-3   # second unit
Vg = 460

[segment.1]
t_start = 0
V_ref = 240
R = 12
gammas = 0.5, 0.5

[sim]
duration = 0.1
)";

std::string error_of(const std::string& text) {
  try {
    build_scenario(parse_document(text, "test.cfg"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("minimal scenario with defaults") {
    const auto sc = build_scenario(parse_document(kMinimal));
    CHECK(sc.network.m() == 2);
    CHECK(sc.network.converters[1].plant.L == 1.6e-3);
    CHECK(sc.network.mode == network::Mode::centralized);
    CHECK(sc.network.inner.zeta1 == 1.2);
    CHECK(sc.sim.Ts == 2e-5);
    CHECK(sc.sim.substeps == 4);
    CHECK(sc.seed == 1);
    CHECK(sc.schedule.segments[0].gammas == std::vector<double>{0.5, 0.5});
  }

  TEST_CASE("diagnostics carry file, line, section and key") {
    CHECK(error_of(replace(kMinimal, "gammas = 0.5, 0.5", "gammas = 0.5, 0.6")) ==
          "test.cfg:19 [segment.1] gammas: sharing ratios must sum to 1");
    CHECK(error_of(replace(kMinimal, "Vg = 460", "Vg = 460\ncolour = red")) == "test.cfg:14 [converter.2] colour: unknown key");
    CHECK(error_of(replace(kMinimal, "R = 12", "R = twelve")) == "test.cfg:18 [segment.1] R: expected a number, got 'twelve'");
    CHECK(error_of(replace(kMinimal, "[sim]", "[simulation]")).find("unknown section") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "converters = 2", "converters = 3")).find("[network] converters") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "L = 1.2e-3", "L = -1")).find("[converter.1] L") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "R = 12", "R = 12\ni_load = 20")).find("exactly one of R or i_load") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "duration = 0.1", "")).find("[sim] duration: required key is missing") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "[mode]\ntype = decentralized\n").find("[mode]") != std::string::npos);
  }

  TEST_CASE("syntax errors") {
    CHECK_THROWS_AS(parse_document("busC = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_document("[network\n"), ConfigError);
    CHECK_THROWS_AS(parse_document("[network]\nbusC 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_document("[network]\nbusC = 1\nbusC = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_document("[a]\n[a]\n"), ConfigError);
  }

  TEST_CASE("overrides replace values and are echoed") {
    auto doc = parse_document(kMinimal);
    doc.set("network.busC", "600e-6");
    doc.set("inner.zeta1", "0.9");
    const auto sc = build_scenario(doc);
    CHECK(sc.network.busC == 600e-6);
    CHECK(sc.network.inner.zeta1 == 0.9);
    CHECK(doc.to_text().find("busC = 600e-6") != std::string::npos);
    CHECK(build_scenario(parse_document(doc.to_text())).network.busC == 600e-6);
    CHECK_THROWS_AS(doc.set("nodot", "1"), ConfigError);
  }

  TEST_CASE("decentralized mode with droop filter") {
    const std::string text = replace(replace(kMinimal, "gammas = 0.5, 0.5", "i_refs = 8, 8"), "[sim]",
                                     "[mode]\ntype = decentralized\ndroop_num = 376.99\ndroop_den = 1 314.16\n\n[sim]");
    const auto sc = build_scenario(parse_document(text));
    REQUIRE(sc.network.droop.has_value());
    CHECK(sc.network.droop->dc_gain() == doctest::Approx(376.99 / 314.16));
  }

  TEST_CASE("uncertainty perturbs the plant but not the design") {
    auto doc = parse_document(kMinimal);
    doc.set("sim.uncertainty", "0.2");
    doc.set("sim.seed", "7");
    const auto sc = build_scenario(doc);
    const auto cfg = realize(sc);
    CHECK(cfg.busC != sc.network.busC);
    CHECK(std::abs(cfg.busC / sc.network.busC - 1.0) <= 0.2);
    CHECK(cfg.converters[0].design_L == 1.2e-3);
    CHECK(cfg.converters[0].plant.L != cfg.converters[0].design_L);
    CHECK(realize(sc).converters[1].plant.L == cfg.converters[1].plant.L);
  }

  TEST_CASE("shipped scenarios validate") {
    for (const char* name : {"sharing3.cfg", "robustness.cfg", "droop.cfg", "droop_centralized.cfg"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_scenario(std::filesystem::path(DCLINK_SCENARIO_DIR) / name));
    }
  }
}
