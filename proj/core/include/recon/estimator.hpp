#pragma once

#include <cstdint>
#include <vector>

#include "recon/rng.hpp"

namespace recon {

/// Bounded mean-reverting random walk over the QBER, sampled in chunks of
/// chunk_bits channel uses. Stands in for the live device's slow thermal
/// drift in the estimator and continuous-run studies.
struct DriftProcessParams {
  double q_start = 0.03;
  double q_mean = 0.03;
  double step_sigma = 7e-5;      // random-walk step per chunk
  double mean_reversion = 1e-3;  // pull toward q_mean per chunk
  double q_min = 0.005;
  double q_max = 0.11;
  uint32_t chunk_bits = 1024;

  bool valid() const noexcept {
    return chunk_bits > 0 && q_min >= 0.0 && q_min < q_max && q_max < 0.5 &&
           step_sigma >= 0.0 && mean_reversion >= 0.0 && q_start >= q_min &&
           q_start <= q_max;
  }
};

struct QberTrajectory {
  uint32_t chunk_bits = 0;
  std::vector<double> q;          // true channel parameter per chunk
  std::vector<uint32_t> errors;   // realized error count per chunk

  size_t total_bits() const noexcept { return q.size() * size_t{chunk_bits}; }
};

QberTrajectory simulate_drift(const DriftProcessParams& params, size_t chunks,
                              uint64_t seed);

struct EstimatorStudyConfig {
  std::vector<size_t> block_size_grid;  // bits; rounded down to chunk multiples
  std::vector<uint32_t> parallelism;    // subset of {1, 2, 4}

  bool valid() const noexcept;
};

struct EstimatorRow {
  size_t block_size = 0;
  uint32_t parallelism = 1;
  double mae = 0.0;
  double rmse = 0.0;
  size_t samples = 0;
};

/// Previous-frame QBER estimation study: the realized QBER of block i
/// predicts block i+lag (lag = parallelism). MAE/RMSE of the prediction
/// error, per block size and lag. Throws when the trajectory is too short
/// for the largest block size.
std::vector<EstimatorRow> qber_estimator_study(const QberTrajectory& trajectory,
                                               const EstimatorStudyConfig& cfg);

}  // namespace recon
