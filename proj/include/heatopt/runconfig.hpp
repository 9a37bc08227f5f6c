#pragma once

#include <map>
#include <set>
#include <string>

#include "heatopt/types.hpp"

namespace heatopt {

// Flat view of a `key = value` config file. Keys inside a `[section]` are
// stored as "section.key". `#` starts a comment; blank lines are skipped.
struct RawConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  // typed getters; a malformed value raises ConfigError naming the key
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_long(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::string& path);

// Raises ConfigError naming the first key that is not recognized.
void reject_unknown_keys(const RawConfig& cfg, const std::set<std::string>& known);

}  // namespace heatopt
