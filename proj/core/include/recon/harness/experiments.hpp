#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recon/blind.hpp"
#include "recon/cascade.hpp"
#include "recon/estimator.hpp"
#include "recon/harness/config.hpp"
#include "recon/ldpc/codeset.hpp"
#include "recon/postproc.hpp"
#include "recon/report.hpp"
#include "recon/session.hpp"

namespace recon::harness {

/// Fully resolved experiment parameters (config file plus CLI overrides).
struct ExperimentSpec {
  std::vector<double> qber_grid = {0.02, 0.04, 0.06};
  uint32_t frames = 100;
  uint64_t seed = 1;
  uint32_t cascade_frame_size = 1u << 16;
  std::vector<std::string> protocols = {"cascade"};

  CascadeConfig cascade;
  blind::BlindConfig blind_cfg;
  double blind_f_design = 1.1;
  LatencyModel latency;

  std::vector<std::string> code_manifests;
  std::string code_cache_dir = "codes";

  // mismatch sweep
  std::vector<double> q_true_grid = {0.02, 0.04, 0.06};
  std::vector<double> q_hat_grid;  // empty = derived around each q_true

  // latency bench
  std::vector<double> latency_grid_s = {0.0, 0.001, 0.005};
  std::vector<double> latency_qber_grid = {0.02};
  double reference_bits_per_second = 80e3;

  // cluster sweep
  std::vector<double> cluster_fer_grid = {1e-4, 1e-3, 1e-2, 0.05};
  std::vector<double> cluster_q_grid = {0.01, 0.02, 0.04, 0.06, 0.08, 0.10};
  uint32_t cluster_frame_bits = 1944;
  uint64_t full_frame_bits = 1u << 21;
  double cluster_f = 1.1;
  VerificationParams verification;
  bool cluster_amortize_tag = true;

  // estimator study
  DriftProcessParams drift;
  std::vector<double> estimator_block_sizes;  // bits
  std::vector<double> estimator_parallelism = {1, 2, 4};
  uint64_t estimator_chunks = 100000;

  // continuous run
  uint32_t continuous_frames = 64;
  uint32_t continuous_cluster_k = 8;
  uint32_t continuous_parallelism = 1;

  std::string out_dir = ".";
  std::map<std::string, std::string> spec_echo;
};

ExperimentSpec spec_from_config(const Config& cfg);

/// One grid point of a protocol sweep, aggregated from per-frame reports.
struct SweepSummary {
  double q = 0.0;
  double q_hat = 0.0;
  std::string protocol;
  uint32_t frame_size = 0;
  uint32_t frames = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
  double fer = 0.0;
  double mean_f_fer = 0.0;
  double mean_messages = 0.0;
  double mean_rounds = 0.0;
  double mean_leak = 0.0;
  double mean_attempts = 0.0;
  double mean_wall_seconds = 0.0;
};

SweepSummary summarize(const std::vector<ReconciliationReport>& reports, double q,
                       double q_hat, const std::string& protocol, uint32_t frame_size);

/// Reconcile one frame end to end (frame synthesis, channel, protocol) with
/// all randomness derived from (seed, grid_index, frame_index).
ReconciliationReport run_cascade_frame(const ExperimentSpec& spec, double qms,
                                       double q_hat, uint64_t grid_index,
                                       uint64_t frame_index,
                                       const LatencyModel& latency);
ReconciliationReport run_blind_frame(const ExperimentSpec& spec,
                                     const ldpc::CodeSet& code_set, double q,
                                     double q_hat, uint64_t grid_index,
                                     uint64_t frame_index, const LatencyModel& latency);

/// Efficiency vs QBER for every configured protocol; writes per-frame and
/// summary CSVs and returns the summaries.
std::vector<SweepSummary> run_efficiency_sweep(const ExperimentSpec& spec);

/// Messages per frame / per corrected bit (same runs, message columns).
std::vector<SweepSummary> run_message_count(const ExperimentSpec& spec);

/// q_hat deviation sweep at fixed true QBER values.
std::vector<SweepSummary> run_mismatch_sweep(const ExperimentSpec& spec);

struct LatencyBenchRow {
  double latency_s = 0.0;
  double q = 0.0;
  double mean_rounds = 0.0;
  double mean_messages = 0.0;
  double throughput_model = 0.0;  // reference compute rate + rounds * latency
  double throughput_wall = 0.0;   // measured wall time + rounds * latency
};
std::vector<LatencyBenchRow> run_latency_bench(const ExperimentSpec& spec);

struct ClusterSweepRow {
  double q = 0.0;
  double fer = 0.0;
  bool repeats = false;
  uint32_t k_star = 0;
  double f_eff_star = 0.0;
};
std::vector<ClusterSweepRow> run_cluster_sweep(const ExperimentSpec& spec);

std::vector<EstimatorRow> run_estimator_study(const ExperimentSpec& spec);

struct ContinuousRow {
  uint64_t frame = 0;
  std::string protocol;
  double q_true = 0.0;
  double q_hat = 0.0;
  bool success = false;
  bool repeated = false;
  double f = 0.0;
  double leak_ir = 0.0;
  double leak_ev = 0.0;
  uint64_t messages = 0;
};
std::vector<ContinuousRow> run_continuous(const ExperimentSpec& spec);

/// Builds (or refreshes) the cached code sets for the configured manifests;
/// optionally Monte-Carlo calibrates a best-f_FER selection table and
/// writes it into the cached resolved manifest.
void generate_codesets(const ExperimentSpec& spec, bool build_selection_table,
                       uint32_t table_frames = 4);

}  // namespace recon::harness
