#include "recon/ldpc/codeset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "recon/ldpc/alist.hpp"
#include "recon/metrics.hpp"
#include "recon/rng.hpp"

namespace recon::ldpc {

namespace fs = std::filesystem;
using nlohmann::json;

double entropy_inverse(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw std::domain_error("entropy_inverse: h outside [0,1]");
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    (binary_entropy(mid) < h ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

CodeSetManifest load_codeset_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CodeDataError("codeset: cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CodeDataError("codeset: bad JSON in " + path + ": " + e.what());
  }
  try {
    CodeSetManifest mf;
    mf.name = j.at("name").get<std::string>();
    mf.frame_size = j.at("frame_size").get<uint32_t>();
    mf.d_fraction = j.value("d_fraction", 0.1);
    mf.seed = j.value("seed", uint64_t{1});
    mf.peg_bfs_levels = j.value("peg_bfs_levels", uint32_t{2});
    for (const auto& jc : j.at("codes")) {
      CodeSpec spec;
      spec.rate = jc.at("rate").get<double>();
      if (jc.contains("alist")) {
        spec.import_alist = jc.at("alist").get<std::string>();
      } else {
        for (const auto& pair : jc.at("lambda_node"))
          spec.distribution.node_fractions.emplace_back(pair.at(0).get<uint32_t>(),
                                                        pair.at(1).get<double>());
        if (!spec.distribution.valid())
          throw CodeDataError("codeset: invalid distribution in " + path);
      }
      mf.codes.push_back(std::move(spec));
    }
    if (j.contains("selection"))
      for (const auto& row : j.at("selection"))
        mf.selection.emplace_back(row.at(0).get<double>(), row.at(1).get<uint32_t>());
    if (mf.codes.empty() || mf.frame_size == 0 || mf.d_fraction <= 0.0 ||
        mf.d_fraction >= 1.0)
      throw CodeDataError("codeset: manifest out of range: " + path);
    return mf;
  } catch (const json::exception& e) {
    throw CodeDataError("codeset: missing field in " + path + ": " + e.what());
  }
}

namespace {

std::string cache_name(const CodeSetManifest& mf, size_t idx) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_n%u_r%04d_s%llu.alist", mf.name.c_str(),
                mf.frame_size, static_cast<int>(std::lround(mf.codes[idx].rate * 1000)),
                static_cast<unsigned long long>(mf.seed));
  return buf;
}

}  // namespace

CodeSet build_codeset(const CodeSetManifest& mf, const std::string& cache_dir,
                      bool generate) {
  CodeSet set;
  set.frame_size_ = mf.frame_size;
  set.d_ = static_cast<uint32_t>(std::lround(mf.d_fraction * mf.frame_size));
  set.selection_ = mf.selection;
  if (set.d_ == 0 || set.d_ >= mf.frame_size)
    throw CodeDataError("codeset: d out of range for " + mf.name);

  fs::path cache(cache_dir);
  std::error_code ec;
  fs::create_directories(cache, ec);

  for (size_t i = 0; i < mf.codes.size(); ++i) {
    const CodeSpec& spec = mf.codes[i];
    if (!(spec.rate > 0.0 && spec.rate < 1.0))
      throw CodeDataError("codeset: rate outside (0,1) in " + mf.name);
    std::shared_ptr<const ParityCheckMatrix> H;
    if (!spec.import_alist.empty()) {
      try {
        H = std::make_shared<ParityCheckMatrix>(load_alist(spec.import_alist));
      } catch (const std::exception& e) {
        throw CodeDataError(std::string("codeset: import failed: ") + e.what());
      }
      if (H->cols() != mf.frame_size)
        throw CodeDataError("codeset: imported frame size mismatch in " + mf.name);
    } else {
      fs::path file = cache / cache_name(mf, i);
      if (fs::exists(file)) {
        H = std::make_shared<ParityCheckMatrix>(load_alist(file.string()));
      } else {
        if (!generate)
          throw CodeDataError("codeset: missing cached code " + file.string());
        uint32_t m = static_cast<uint32_t>(
            std::lround((1.0 - spec.rate) * mf.frame_size));
        PegOptions opts;
        opts.bfs_levels = mf.peg_bfs_levels;
        ParityCheckMatrix built = peg_construct(
            mf.frame_size, spec.distribution, m, mf.seed + i, opts);
        save_alist(built, file.string());
        H = std::make_shared<ParityCheckMatrix>(std::move(built));
      }
    }

    BlindCode code;
    code.matrix = H;
    code.base_rate = H->rate();
    code.hash = H->content_hash();

    // Modulated positions: uniform over columns of degree >= 3, keyed by
    // the set seed and the code index. Degree-2 chains recover too slowly
    // from puncturing to be worth reserving.
    std::vector<uint32_t> eligible;
    for (uint32_t c = 0; c < H->cols(); ++c)
      if (H->col_degree(c) >= 3) eligible.push_back(c);
    if (eligible.size() < set.d_)
      throw CodeDataError("codeset: not enough degree>=3 columns in " + mf.name);
    Rng rng = Rng(mf.seed).derive(0xD0D, i);
    rng.shuffle(std::span<uint32_t>(eligible));
    code.modulated.assign(eligible.begin(), eligible.begin() + set.d_);
    std::sort(code.modulated.begin(), code.modulated.end());

    uint32_t n_key = mf.frame_size - set.d_;
    double initial_leak_rate =
        (static_cast<double>(H->rows()) - set.d_) / static_cast<double>(n_key);
    code.design_q = entropy_inverse(std::clamp(initial_leak_rate, 0.0, 1.0));
    set.codes_.push_back(std::move(code));
  }

  std::sort(set.codes_.begin(), set.codes_.end(),
            [](const BlindCode& a, const BlindCode& b) { return a.base_rate > b.base_rate; });
  for (size_t i = 1; i < set.codes_.size(); ++i)
    if (set.codes_[i].base_rate == set.codes_[i - 1].base_rate)
      throw CodeDataError("codeset: duplicate rates in " + mf.name);
  return set;
}

size_t CodeSet::select(double q_hat, double f_design) const {
  if (codes_.empty()) throw CodeDataError("codeset: empty");
  if (!selection_.empty()) {
    for (const auto& [q_max, idx] : selection_)
      if (q_hat <= q_max) return std::min<size_t>(idx, codes_.size() - 1);
    return selection_.back().second;
  }
  // Highest-rate code whose fully punctured leak still covers q_hat at the
  // design efficiency; codes_ is sorted by rate descending.
  uint32_t n_key = frame_size_ - d_;
  double need = f_design * binary_entropy(std::clamp(q_hat, 0.0, 0.5)) * n_key;
  for (size_t i = 0; i < codes_.size(); ++i) {
    double leak = static_cast<double>(codes_[i].matrix->rows()) - d_;
    if (leak >= need) return i;
  }
  return codes_.size() - 1;  // weakest code
}

}  // namespace recon::ldpc
