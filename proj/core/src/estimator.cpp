#include "recon/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recon {

QberTrajectory simulate_drift(const DriftProcessParams& params, size_t chunks,
                              uint64_t seed) {
  if (!params.valid()) throw std::invalid_argument("simulate_drift: bad params");
  QberTrajectory traj;
  traj.chunk_bits = params.chunk_bits;
  traj.q.reserve(chunks);
  traj.errors.reserve(chunks);

  Rng walk = Rng(seed).derive(0xD21F7);
  Rng noise = Rng(seed).derive(0xB17E);
  double q = params.q_start;
  for (size_t i = 0; i < chunks; ++i) {
    traj.q.push_back(q);
    // Binomial draw as a sum of Bernoullis: exact and platform-stable.
    uint32_t errs = 0;
    for (uint32_t b = 0; b < params.chunk_bits; ++b)
      if (noise.bernoulli(q)) ++errs;
    traj.errors.push_back(errs);

    q += params.mean_reversion * (params.q_mean - q) + params.step_sigma * walk.normal();
    q = std::clamp(q, params.q_min, params.q_max);
  }
  return traj;
}

bool EstimatorStudyConfig::valid() const noexcept {
  if (block_size_grid.empty() || parallelism.empty()) return false;
  for (size_t b : block_size_grid)
    if (b == 0) return false;
  for (uint32_t p : parallelism)
    if (p != 1 && p != 2 && p != 4) return false;
  return true;
}

std::vector<EstimatorRow> qber_estimator_study(const QberTrajectory& trajectory,
                                               const EstimatorStudyConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("qber_estimator_study: bad config");
  if (trajectory.chunk_bits == 0 || trajectory.q.empty())
    throw std::invalid_argument("qber_estimator_study: empty trajectory");

  std::vector<EstimatorRow> rows;
  for (size_t block_bits : cfg.block_size_grid) {
    size_t chunks_per_block = std::max<size_t>(1, block_bits / trajectory.chunk_bits);
    size_t block_bits_eff = chunks_per_block * trajectory.chunk_bits;
    size_t nblocks = trajectory.q.size() / chunks_per_block;

    std::vector<double> q_hat(nblocks);
    for (size_t i = 0; i < nblocks; ++i) {
      uint64_t errs = 0;
      for (size_t c = 0; c < chunks_per_block; ++c)
        errs += trajectory.errors[i * chunks_per_block + c];
      q_hat[i] = static_cast<double>(errs) / static_cast<double>(block_bits_eff);
    }

    for (uint32_t lag : cfg.parallelism) {
      if (nblocks <= lag)
        throw std::invalid_argument(
            "qber_estimator_study: trajectory too short for block size");
      double abs_sum = 0, sq_sum = 0;
      size_t count = nblocks - lag;
      for (size_t i = 0; i < count; ++i) {
        double err = q_hat[i] - q_hat[i + lag];
        abs_sum += std::fabs(err);
        sq_sum += err * err;
      }
      EstimatorRow row;
      row.block_size = block_bits_eff;
      row.parallelism = lag;
      row.mae = abs_sum / static_cast<double>(count);
      row.rmse = std::sqrt(sq_sum / static_cast<double>(count));
      row.samples = count;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace recon
