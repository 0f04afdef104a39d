#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace recon::harness {

/// CSV output with deterministic number formatting (re-running a spec with
/// the same seed must produce byte-identical files).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);

  static std::string fmt(double v);
  static std::string fmt(uint64_t v) { return std::to_string(v); }
  static std::string fmt(int64_t v) { return std::to_string(v); }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::string buffer_;
  size_t columns_;
  void flush_line(const std::vector<std::string>& cells);
};

/// Sidecar metadata: "<csv path>.meta.json" holding the config echo, seeds
/// and code-set hashes next to every produced CSV.
void write_metadata_sidecar(const std::string& csv_path,
                            const std::map<std::string, std::string>& spec_echo,
                            uint64_t seed,
                            const std::vector<std::pair<std::string, uint64_t>>& code_hashes);

}  // namespace recon::harness
