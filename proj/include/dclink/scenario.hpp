#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dclink/network.hpp"

namespace dclink::scenario {

/// One `key = value` entry with its source line (0 for overrides).
struct Entry {
  std::string value;
  int line = 0;
};

/// Raw scenario text: sections in file order, keys validated later.
struct Document {
  std::string source;  // file name used in diagnostics
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, Entry>> sections;

  /// Sets `section.key` (the key is the text after the last dot).
  void set(std::string_view dotted, std::string value);
  std::string to_text() const;
};

Document parse_document(std::string_view text, std::string source = "<scenario>");
Document read_document(const std::filesystem::path& path);

struct Scenario {
  network::NetworkConfig network;  // nominal parameters
  network::Schedule schedule;
  network::SimOptions sim;
  std::uint64_t seed = 1;
  double uncertainty = 0.0;  // uniform +/- fraction on plant L_k and busC
};

/// Schema check and conversion; throws ConfigError with "file:line [section] key".
Scenario build_scenario(const Document& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Network actually simulated: nominal design, perturbed plant.
network::NetworkConfig realize(const Scenario& s);

}  // namespace dclink::scenario
