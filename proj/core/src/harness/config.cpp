#include "recon/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace recon::harness {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto it = values_.find(section + "." + key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = get(section, key, "");
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + section + "." + key + ": '" + v + "'");
  }
}

int64_t Config::get_int(const std::string& section, const std::string& key,
                        int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = get(section, key, "");
  try {
    size_t used = 0;
    long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + section + "." + key + ": '" + v + "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = lower(get(section, key, ""));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for " + section + "." + key + ": '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  std::istringstream in(get(section, key, ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("config: bad list entry for " + section + "." + key + ": '" +
                        item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("config: empty list for " + section + "." + key);
  return out;
}

std::vector<std::string> Config::get_strings(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<std::string> out;
  std::istringstream in(get(section, key, ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  values_[section + "." + key] = value;
}

}  // namespace recon::harness
