#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace recon::harness {

/// Raised for malformed config files or out-of-range values; the CLI maps
/// it to the config-error exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat INI-style key/value sections:
///   [section]
///   key = value   # comment
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma-separated doubles.
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Flattened section.key = value view, for metadata echoes.
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  /// Overlay one value (CLI overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace recon::harness
