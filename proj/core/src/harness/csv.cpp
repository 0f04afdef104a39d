#include "recon/harness/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace recon::harness {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw std::runtime_error("CsvWriter: cannot open " + path_);
  flush_line(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::invalid_argument("CsvWriter: column count mismatch in " + path_);
  flush_line(cells);
}

void CsvWriter::flush_line(const std::vector<std::string>& cells) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("CsvWriter: cannot append to " + path_);
  for (size_t i = 0; i < cells.size(); ++i) {
    out << cells[i];
    out << (i + 1 < cells.size() ? ',' : '\n');
  }
}

std::string CsvWriter::fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_metadata_sidecar(
    const std::string& csv_path, const std::map<std::string, std::string>& spec_echo,
    uint64_t seed, const std::vector<std::pair<std::string, uint64_t>>& code_hashes) {
  nlohmann::json j;
  j["csv"] = csv_path;
  j["seed"] = seed;
  j["spec"] = spec_echo;
  nlohmann::json codes = nlohmann::json::array();
  for (const auto& [name, hash] : code_hashes) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    codes.push_back({{"code", name}, {"fnv1a64", buf}});
  }
  j["code_hashes"] = codes;
  std::ofstream out(csv_path + ".meta.json", std::ios::trunc);
  if (!out) throw std::runtime_error("metadata: cannot write sidecar for " + csv_path);
  out << j.dump(2) << '\n';
}

}  // namespace recon::harness
