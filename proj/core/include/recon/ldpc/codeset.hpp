#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recon/ldpc/matrix.hpp"
#include "recon/ldpc/peg.hpp"

namespace recon::ldpc {

/// Raised for missing/corrupt manifests and cached code files; the CLI
/// maps it to its data-error exit code.
struct CodeDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One entry of a code-set manifest: either a degree distribution to feed
/// PEG, or a pre-existing alist to import (industry codes).
struct CodeSpec {
  double rate = 0.0;  // base rate 1 - m/N
  DegreeDistribution distribution;  // used when import_alist is empty
  std::string import_alist;         // optional absolute/relative path
};

struct CodeSetManifest {
  std::string name;
  uint32_t frame_size = 0;
  double d_fraction = 0.1;  // modulated positions as a fraction of N
  uint64_t seed = 1;
  uint32_t peg_bfs_levels = 2;
  std::vector<CodeSpec> codes;
  /// Optional selection table: q upper bounds (ascending) -> code index.
  std::vector<std::pair<double, uint32_t>> selection;
};

CodeSetManifest load_codeset_manifest(const std::string& path);

/// One rate-adaptation-ready code of a set.
struct BlindCode {
  std::shared_ptr<const ParityCheckMatrix> matrix;
  std::vector<uint32_t> modulated;  // the d reserved columns, sorted
  double base_rate = 0.0;           // 1 - m/N
  double design_q = 0.0;            // QBER this code is matched to
  uint64_t hash = 0;
};

class CodeSet {
 public:
  uint32_t frame_size() const noexcept { return frame_size_; }
  uint32_t d() const noexcept { return d_; }
  size_t size() const noexcept { return codes_.size(); }
  const BlindCode& code(size_t i) const { return codes_.at(i); }

  /// Base-code choice for an estimated QBER: the manifest selection table
  /// when present, otherwise the lowest-leakage code whose design still
  /// covers q_hat at the given target efficiency.
  size_t select(double q_hat, double f_design) const;

  friend CodeSet build_codeset(const CodeSetManifest&, const std::string&, bool);

 private:
  uint32_t frame_size_ = 0;
  uint32_t d_ = 0;
  std::vector<BlindCode> codes_;  // sorted by rate descending
  std::vector<std::pair<double, uint32_t>> selection_;
};

/// Loads the set, generating and caching missing alists under cache_dir
/// (PEG codes only; imports must exist). With generate=false a missing
/// cache entry raises CodeDataError instead.
CodeSet build_codeset(const CodeSetManifest& manifest, const std::string& cache_dir,
                      bool generate = true);

/// Inverse of binary_entropy on [0, 1/2], by bisection.
double entropy_inverse(double h);

}  // namespace recon::ldpc
