#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dclink/analysis.hpp"
#include "dclink/scenario.hpp"

namespace dclink::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kNumericalError = 3 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> Ts;
  std::optional<double> duration;
  std::vector<std::pair<std::string, std::string>> keys;  // dotted key -> value
};

/// Applies command-line overrides to a raw scenario document.
void apply(const Overrides& o, scenario::Document& doc);

struct SegmentSummary {
  analysis::SteadyStateReport window;
  std::optional<double> ripple_hz;  // set for current loads with ripple
  double ripple_iL_total = 0.0;
  double ripple_iload = 0.0;
  double ripple_Vdc = 0.0;
};

struct RunSummary {
  std::vector<SegmentSummary> segments;
  analysis::TrackingMetrics tracking;
  double v_ref_final = 0.0;
  std::size_t saturation_events = 0;
  std::size_t negative_current_samples = 0;
};

/// Steady-state windows cover the final 20% of each schedule segment.
RunSummary summarize(const scenario::Scenario& sc, const network::SimResult& sim);

std::string format_timeseries(const network::SimResult& sim);
std::string format_summary(const RunSummary& s, const std::string& scenario_name);

/// Directory used when --out is absent: $DCLINK_OUT/<stem> or dclink-out/<stem>.
std::filesystem::path default_out_dir(const std::filesystem::path& scenario_path);

int run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir, const Overrides& o,
        std::ostream& out, std::ostream& err);

struct VerifyOptions {
  bool full = false;
  bool inject_fault = false;
  std::uint64_t seed = 2024;
};

int verify(const VerifyOptions& opt, std::ostream& out);

int sweep(const std::filesystem::path& scenario_path, const std::string& param, const std::vector<std::string>& values,
          const std::filesystem::path& out_dir, const Overrides& o, std::ostream& out, std::ostream& err);

int freq(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir, const Overrides& o,
         std::ostream& out, std::ostream& err);

}  // namespace dclink::cli
