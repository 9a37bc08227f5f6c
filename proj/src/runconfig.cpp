#include "heatopt/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace heatopt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

RawConfig parse_config_text(const std::string& text) {
  RawConfig cfg;
  std::istringstream stream(text);
  std::string line, section;
  long line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no),
                          "unterminated section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(line_no), "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no),
                        "expected `key = value`, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no), "empty key before '='");
    cfg.values[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

RawConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError("config file not found: " + path);
  std::ostringstream buffer;
  buffer << f.rdbuf();
  return parse_config_text(buffer.str());
}

std::string RawConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

long RawConfig::get_long(const std::string& key, long fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const std::string& s = it->second;
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(key, "expected an integer for '" + key + "', got '" + s + "'");
  return v;
}

double RawConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const std::string& s = it->second;
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number for '" + key + "', got '" + s + "'");
  }
}

bool RawConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const std::string v = lower(it->second);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected a boolean for '" + key + "', got '" + it->second + "'");
}

void reject_unknown_keys(const RawConfig& cfg, const std::set<std::string>& known) {
  for (const auto& [key, value] : cfg.values)
    if (known.count(key) == 0) throw ConfigError(key, "unknown config key '" + key + "'");
}

}  // namespace heatopt
