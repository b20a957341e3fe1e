#include "dclink/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dclink/converter.hpp"
#include "dclink/errors.hpp"

namespace dclink::scenario {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// "segment.3" -> ("segment", 3); plain names give index 0.
std::pair<std::string, int> split_indexed(const std::string& section) {
  const auto dot = section.find('.');
  if (dot == std::string::npos) return {section, 0};
  const std::string tail = section.substr(dot + 1);
  int idx = 0;
  const auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), idx);
  if (ec != std::errc() || p != tail.data() + tail.size() || idx < 1) return {section, -1};
  return {section.substr(0, dot), idx};
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"network", {"busC", "converters"}},
      {"converter", {"topology", "L", "Vg", "design_L", "Dprime"}},
      {"inner", {"omega0", "zeta1", "zeta2", "omega_tilde"}},
      {"controllers", {"type", "Kv_num", "Kv_den", "Kr_num", "Kr_den"}},
      {"mode", {"type", "droop_num", "droop_den"}},
      {"segment", {"t_start", "V_ref", "R", "i_load", "ripple_amp", "ripple_hz", "gammas", "i_refs"}},
      {"sim", {"duration", "Ts", "substeps", "seed", "uncertainty", "init"}},
  };
  return s;
}

bool indexed(const std::string& base) { return base == "converter" || base == "segment"; }

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  std::string where(const std::string& section, const std::string& key = {}) const {
    std::ostringstream os;
    os << doc_.source;
    const int line = line_of(section, key);
    if (line > 0) os << ':' << line;
    os << " [" << section << ']';
    if (!key.empty()) os << ' ' << key;
    return os.str();
  }

  // Maps a dotted field path from the network layer back to its source.
  std::string locate(const std::string& path) const {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return where(path);
    const std::string section = path.substr(0, dot);
    const std::string key = path.substr(dot + 1);
    if (has(section, key)) return where(section, key);
    if (section == "controllers" || section == "mode") return where(section, key + "_num");
    return where(section, key);
  }

  bool has_section(const std::string& section) const { return doc_.sections.count(section) > 0; }

  bool has(const std::string& section, const std::string& key) const {
    const auto it = doc_.sections.find(section);
    return it != doc_.sections.end() && it->second.count(key) > 0;
  }

  const std::string& text(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError(where(section, key), "required key is missing");
    return doc_.sections.at(section).at(key).value;
  }

  double number(const std::string& section, const std::string& key) const {
    return parse_number(text(section, key), section, key);
  }

  double number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  std::vector<double> list(const std::string& section, const std::string& key) const {
    std::string s = text(section, key);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<double> out;
    for (std::string tok; is >> tok;) out.push_back(parse_number(tok, section, key));
    if (out.empty()) throw ConfigError(where(section, key), "expected a list of numbers");
    return out;
  }

  std::uint64_t unsigned_integer(const std::string& section, const std::string& key) const {
    const std::string s{trim(text(section, key))};
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError(where(section, key), "expected a non-negative integer, got '" + s + "'");
    return v;
  }

 private:
  int line_of(const std::string& section, const std::string& key) const {
    const auto it = doc_.sections.find(section);
    if (it == doc_.sections.end()) return 0;
    if (!key.empty()) {
      const auto kt = it->second.find(key);
      if (kt != it->second.end()) return kt->second.line;
    }
    int first = 0;
    for (const auto& [k, e] : it->second)
      if (e.line > 0 && (first == 0 || e.line < first)) first = e.line;
    return first;
  }

  double parse_number(const std::string& raw, const std::string& section, const std::string& key) const {
    const std::string s{trim(raw)};
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(where(section, key), "expected a number, got '" + s + "'");
    return v;
  }

  const Document& doc_;
};

std::size_t count_indexed(const Document& doc, const Reader& rd, const std::string& base) {
  std::size_t n = 0;
  for (const auto& name : doc.order)
    if (split_indexed(name).first == base) ++n;
  for (std::size_t k = 1; k <= n; ++k)
    if (!rd.has_section(base + "." + std::to_string(k)))
      throw ConfigError(doc.source + " [" + base + "." + std::to_string(k) + "]",
                        base + " sections must be numbered 1.." + std::to_string(n));
  return n;
}

lti::TransferFunction tf_from(const Reader& rd, const std::string& section, const std::string& prefix) {
  const auto num = rd.list(section, prefix + "_num");
  const auto den = rd.list(section, prefix + "_den");
  if (std::all_of(den.begin(), den.end(), [](double c) { return c == 0.0; }))
    throw ConfigError(rd.where(section, prefix + "_den"), "denominator must be nonzero");
  return {lti::Polynomial(num), lti::Polynomial(den)};
}

void check_keys(const Document& doc, const Reader& rd) {
  for (const auto& [section, entries] : doc.sections) {
    const auto [base, idx] = split_indexed(section);
    const auto it = schema().find(base);
    if (it == schema().end() || idx < 0 || (idx > 0) != indexed(base))
      throw ConfigError(rd.where(section), "unknown section");
    for (const auto& [key, entry] : entries)
      if (!it->second.count(key)) throw ConfigError(rd.where(section, key), "unknown key");
  }
}

}  // namespace

void Document::set(std::string_view dotted, std::string value) {
  const auto dot = dotted.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == dotted.size())
    throw ConfigError(std::string(dotted), "override key must look like section.key");
  const std::string section(dotted.substr(0, dot));
  const std::string key(dotted.substr(dot + 1));
  if (!sections.count(section)) order.push_back(section);
  auto& e = sections[section][key];
  e.value = std::move(value);
  e.line = 0;
}

std::string Document::to_text() const {
  std::ostringstream os;
  for (const auto& name : order) {
    os << '[' << name << "]\n";
    for (const auto& [key, e] : sections.at(name)) os << key << " = " << e.value << '\n';
    os << '\n';
  }
  return os.str();
}

Document parse_document(std::string_view text, std::string source) {
  Document doc;
  doc.source = std::move(source);
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = doc.source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at, "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) throw ConfigError(at, "empty section name");
      if (doc.sections.count(current)) throw ConfigError(at, "duplicate section [" + current + "]");
      doc.order.push_back(current);
      doc.sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at, "expected 'key = value'");
    if (current.empty()) throw ConfigError(at, "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(at, "empty key");
    auto& entries = doc.sections[current];
    if (entries.count(key)) throw ConfigError(at + " [" + current + "] " + key, "duplicate key");
    entries[key] = {value, line_no};
  }
  return doc;
}

Document read_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), path.filename().string());
}

Scenario build_scenario(const Document& doc) {
  const Reader rd(doc);
  check_keys(doc, rd);

  Scenario sc;
  auto& net = sc.network;

  const std::size_t segments = count_indexed(doc, rd, "segment");
  if (segments == 0) throw ConfigError(doc.source + " [segment.1]", "at least one segment is required");
  for (std::size_t k = 1; k <= segments; ++k) {
    const std::string sec = "segment." + std::to_string(k);
    network::Segment seg;
    seg.t_start = rd.number(sec, "t_start");
    seg.v_ref = rd.number(sec, "V_ref");
    const bool resistive = rd.has(sec, "R");
    if (resistive == rd.has(sec, "i_load"))
      throw ConfigError(rd.where(sec), "exactly one of R or i_load is required");
    if (resistive) {
      if (rd.has(sec, "ripple_amp") || rd.has(sec, "ripple_hz"))
        throw ConfigError(rd.where(sec, "ripple_amp"), "ripple applies to current loads only");
      seg.load = network::LoadSpec::resistor(rd.number(sec, "R"));
    } else {
      seg.load = network::LoadSpec::current(rd.number(sec, "i_load"), rd.number_or(sec, "ripple_amp", 0.0),
                                            rd.number_or(sec, "ripple_hz", 0.0));
    }
    if (rd.has(sec, "gammas")) seg.gammas = rd.list(sec, "gammas");
    if (rd.has(sec, "i_refs")) seg.i_refs = rd.list(sec, "i_refs");
    sc.schedule.segments.push_back(std::move(seg));
  }
  const double v_ref0 = sc.schedule.segments.front().v_ref;

  net.busC = rd.number("network", "busC");
  const double declared = rd.number("network", "converters");
  const std::size_t m = count_indexed(doc, rd, "converter");
  if (declared != static_cast<double>(m) || m == 0)
    throw ConfigError(rd.where("network", "converters"),
                      "declares " + rd.text("network", "converters") + " converters but " + std::to_string(m) +
                          " [converter.N] sections are present");
  for (std::size_t k = 1; k <= m; ++k) {
    const std::string sec = "converter." + std::to_string(k);
    network::ConverterSpec spec;
    const std::string topo = rd.has(sec, "topology") ? rd.text(sec, "topology") : "buck";
    try {
      spec.plant.topology = converter::topology_from_string(topo);
    } catch (const DomainError& e) {
      throw ConfigError(rd.where(sec, "topology"), e.what());
    }
    spec.plant.L = rd.number(sec, "L");
    spec.plant.Vg = rd.number(sec, "Vg");
    if (spec.plant.topology == converter::Topology::boost)
      spec.plant.Dprime = rd.has(sec, "Dprime") ? rd.number(sec, "Dprime") : spec.plant.Vg / v_ref0;
    else if (rd.has(sec, "Dprime"))
      throw ConfigError(rd.where(sec, "Dprime"), "Dprime applies to boost converters only");
    spec.design_L = rd.number_or(sec, "design_L", 0.0);
    net.converters.push_back(spec);
  }

  net.inner = design::reference_inner_design();
  net.inner.omega0 = rd.number_or("inner", "omega0", net.inner.omega0);
  net.inner.zeta1 = rd.number_or("inner", "zeta1", net.inner.zeta1);
  net.inner.zeta2 = rd.number_or("inner", "zeta2", net.inner.zeta2);
  net.inner.omega_tilde = rd.number_or("inner", "omega_tilde", net.inner.omega_tilde);

  const std::string ctype = rd.has("controllers", "type") ? rd.text("controllers", "type") : "canonical";
  if (ctype == "canonical") {
    for (const char* key : {"Kv_num", "Kv_den", "Kr_num", "Kr_den"})
      if (rd.has("controllers", key)) throw ConfigError(rd.where("controllers", key), "canonical controllers take no coefficients");
    net.outer = design::canonical_outer();
  } else if (ctype == "custom") {
    net.outer = {tf_from(rd, "controllers", "Kv"), tf_from(rd, "controllers", "Kr")};
  } else {
    throw ConfigError(rd.where("controllers", "type"), "expected 'canonical' or 'custom', got '" + ctype + "'");
  }

  const std::string mtype = rd.has("mode", "type") ? rd.text("mode", "type") : "centralized";
  try {
    net.mode = network::mode_from_string(mtype);
  } catch (const DomainError& e) {
    throw ConfigError(rd.where("mode", "type"), e.what());
  }
  if (rd.has("mode", "droop_num") || rd.has("mode", "droop_den")) {
    if (net.mode != network::Mode::decentralized)
      throw ConfigError(rd.where("mode", "droop_num"), "droop filter applies to decentralized mode only");
    net.droop = tf_from(rd, "mode", "droop");
  }

  sc.sim.duration = rd.number("sim", "duration");
  sc.sim.Ts = rd.number_or("sim", "Ts", sc.sim.Ts);
  if (rd.has("sim", "substeps")) sc.sim.substeps = static_cast<int>(rd.unsigned_integer("sim", "substeps"));
  if (rd.has("sim", "seed")) sc.seed = rd.unsigned_integer("sim", "seed");
  sc.uncertainty = rd.number_or("sim", "uncertainty", 0.0);
  if (!(sc.uncertainty >= 0.0 && sc.uncertainty < 1.0))
    throw ConfigError(rd.where("sim", "uncertainty"), "uncertainty fraction must lie in [0, 1)");
  if (rd.has("sim", "init")) {
    const std::string init = rd.text("sim", "init");
    if (init == "equilibrium")
      sc.sim.init = network::InitMode::equilibrium;
    else if (init == "cold")
      sc.sim.init = network::InitMode::cold;
    else
      throw ConfigError(rd.where("sim", "init"), "expected 'equilibrium' or 'cold', got '" + init + "'");
  }
  if (!(sc.sim.Ts > 0.0)) throw ConfigError(rd.where("sim", "Ts"), "sample period must be positive");
  if (sc.sim.substeps < 1) throw ConfigError(rd.where("sim", "substeps"), "substeps must be at least 1");
  if (!(sc.sim.duration >= sc.sim.Ts * (1.0 - 1e-9)))
    throw ConfigError(rd.where("sim", "duration"), "duration must cover at least one sample");

  try {
    net.validate();
    sc.schedule.validate(m, net.mode);
    for (std::size_t k = 0; k < m; ++k) {
      try {
        net.converters[k].plant.validate(v_ref0);
      } catch (const DomainError& e) {
        throw ConfigError("converter." + std::to_string(k + 1) + ".Vg", e.what());
      }
    }
  } catch (const ConfigError& e) {
    const std::string full = e.what();
    const std::string msg = full.substr(std::min(full.size(), e.where().size() + 2));
    throw ConfigError(rd.locate(e.where()), msg);
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) { return build_scenario(read_document(path)); }

network::NetworkConfig realize(const Scenario& s) {
  network::NetworkConfig cfg = s.network;
  if (s.uncertainty == 0.0) return cfg;
  // Independent streams per perturbed quantity, all derived from one seed.
  constexpr std::uint64_t kStride = 0x9E3779B97F4A7C15ULL;
  cfg.busC = converter::perturb_value(s.network.busC, s.uncertainty, s.seed);
  for (std::size_t k = 0; k < cfg.m(); ++k) {
    auto& c = cfg.converters[k];
    if (c.design_L == 0.0) c.design_L = c.plant.L;
    c.plant = converter::perturb_params(c.plant, s.uncertainty, s.seed + kStride * (k + 1));
  }
  return cfg;
}

}  // namespace dclink::scenario
