#include "recon/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include <json.hpp>

#include "recon/channel.hpp"
#include "recon/harness/csv.hpp"
#include "recon/metrics.hpp"

namespace recon::harness {

namespace fs = std::filesystem;

namespace {

void parallel_tasks(size_t count, const std::function<void(size_t)>& fn) {
  if (count == 0) return;
  unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                     static_cast<unsigned>(count)));
  if (workers == 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (size_t i; (i = next.fetch_add(1)) < count;) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string out_path(const ExperimentSpec& spec, const std::string& name) {
  fs::create_directories(spec.out_dir);
  return (fs::path(spec.out_dir) / name).string();
}

// Wall-clock timings stay out of these rows: every CSV must be
// byte-identical across reruns of the same (spec, seed).
void write_frame_rows(CsvWriter& csv, double q, double q_hat, const std::string& protocol,
                      uint32_t frame_size, const std::vector<ReconciliationReport>& reports) {
  for (size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv.row({CsvWriter::fmt(q), CsvWriter::fmt(q_hat), protocol,
             std::to_string(frame_size), std::to_string(i),
             std::to_string(r.success ? 1 : 0), std::to_string(r.residual_errors),
             CsvWriter::fmt(r.q_true), CsvWriter::fmt(r.leak_ir), CsvWriter::fmt(r.leak_ev),
             CsvWriter::fmt(r.messages), CsvWriter::fmt(r.rounds), CsvWriter::fmt(r.f),
             CsvWriter::fmt(r.f_fer), std::to_string(r.attempts),
             CsvWriter::fmt(r.simulated_seconds)});
  }
}

const std::vector<std::string> kFrameHeader = {
    "q", "q_hat", "protocol", "frame_size", "frame", "success", "residual_errors",
    "q_true", "leak_ir", "leak_ev", "messages", "rounds", "f", "f_fer", "attempts",
    "simulated_seconds"};

struct ProtocolEntry {
  std::string name;          // "cascade" or "blind"
  const ldpc::CodeSet* set;  // null for cascade
  uint32_t frame_size;
};

std::vector<ldpc::CodeSet> load_code_sets(const ExperimentSpec& spec) {
  std::vector<ldpc::CodeSet> sets;
  for (const auto& path : spec.code_manifests) {
    auto mf = ldpc::load_codeset_manifest(path);
    sets.push_back(ldpc::build_codeset(mf, spec.code_cache_dir, true));
  }
  return sets;
}

std::vector<ProtocolEntry> protocol_entries(const ExperimentSpec& spec,
                                            const std::vector<ldpc::CodeSet>& sets) {
  std::vector<ProtocolEntry> entries;
  for (const auto& proto : spec.protocols) {
    if (proto == "cascade") {
      entries.push_back({"cascade", nullptr, spec.cascade_frame_size});
    } else if (proto == "blind") {
      if (sets.empty())
        throw ConfigError("config: blind protocol requires codes.manifests");
      for (const auto& set : sets)
        entries.push_back({"blind", &set, set.frame_size() - set.d()});
    } else {
      throw ConfigError("config: unknown protocol '" + proto + "'");
    }
  }
  if (entries.empty()) throw ConfigError("config: no protocols configured");
  return entries;
}

std::vector<std::pair<std::string, uint64_t>> hash_list(
    const std::vector<ldpc::CodeSet>& sets) {
  std::vector<std::pair<std::string, uint64_t>> hashes;
  for (const auto& set : sets)
    for (size_t i = 0; i < set.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "N%u_R%.4f", set.frame_size(),
                    set.code(i).base_rate);
      hashes.emplace_back(name, set.code(i).hash);
    }
  return hashes;
}

}  // namespace

ExperimentSpec spec_from_config(const Config& cfg) {
  ExperimentSpec s;
  s.qber_grid = cfg.get_doubles("experiment", "qber_grid", s.qber_grid);
  s.frames = static_cast<uint32_t>(cfg.get_int("experiment", "frames", s.frames));
  s.seed = static_cast<uint64_t>(cfg.get_int("experiment", "seed", 1));
  s.cascade_frame_size = static_cast<uint32_t>(
      cfg.get_int("experiment", "frame_size", s.cascade_frame_size));
  s.protocols = cfg.get_strings("experiment", "protocols", s.protocols);

  s.cascade.iterations =
      static_cast<uint32_t>(cfg.get_int("cascade", "iterations", s.cascade.iterations));
  s.cascade.k1_constant = cfg.get_double("cascade", "k1_constant", s.cascade.k1_constant);
  s.cascade.group_constant =
      cfg.get_double("cascade", "group_constant", s.cascade.group_constant);
  s.cascade.growth_factor =
      cfg.get_double("cascade", "growth_factor", s.cascade.growth_factor);
  s.cascade.late_block_cap = static_cast<uint32_t>(
      cfg.get_int("cascade", "late_block_cap", s.cascade.late_block_cap));
  s.cascade.max_wave_searches = static_cast<uint32_t>(
      cfg.get_int("cascade", "max_wave_searches", s.cascade.max_wave_searches));
  s.cascade.confidence_split =
      cfg.get_bool("cascade", "confidence_split", s.cascade.confidence_split);
  s.cascade.count_alice_to_bob_only =
      cfg.get_bool("cascade", "count_alice_to_bob_only", false);
  if (!s.cascade.valid()) throw ConfigError("config: invalid [cascade] section");

  s.blind_cfg.alpha = cfg.get_double("blind", "alpha", s.blind_cfg.alpha);
  s.blind_cfg.f_design = cfg.get_double("blind", "f_design", s.blind_cfg.f_design);
  s.blind_cfg.f_max = cfg.get_double("blind", "f_max", s.blind_cfg.f_max);
  s.blind_cfg.decoder_iterations = static_cast<uint32_t>(
      cfg.get_int("blind", "decoder_iterations", s.blind_cfg.decoder_iterations));
  s.blind_cfg.v_uses_adapted_rate =
      cfg.get_bool("blind", "v_uses_adapted_rate", s.blind_cfg.v_uses_adapted_rate);
  if (!s.blind_cfg.valid()) throw ConfigError("config: invalid [blind] section");
  s.blind_f_design = s.blind_cfg.f_design;

  s.latency.one_way_latency = cfg.get_double("session", "latency_ms", 0.0) / 1000.0;
  s.latency.bandwidth_bps = cfg.get_double("session", "bandwidth_bps", 0.0);
  if (!s.latency.valid()) throw ConfigError("config: invalid [session] section");

  s.code_manifests = cfg.get_strings("codes", "manifests", {});
  s.code_cache_dir = cfg.get("codes", "cache_dir", s.code_cache_dir);

  s.q_true_grid = cfg.get_doubles("mismatch", "q_true_grid", s.q_true_grid);
  s.q_hat_grid = cfg.get_doubles("mismatch", "q_hat_grid", {});

  {
    auto ms = cfg.get_doubles("latency", "grid_ms", {0.0, 1.0, 5.0});
    s.latency_grid_s.clear();
    for (double v : ms) s.latency_grid_s.push_back(v / 1000.0);
  }
  s.latency_qber_grid = cfg.get_doubles("latency", "qber_grid", s.latency_qber_grid);
  s.reference_bits_per_second =
      cfg.get_double("latency", "reference_bits_per_second", s.reference_bits_per_second);

  s.cluster_fer_grid = cfg.get_doubles("cluster", "fer_grid", s.cluster_fer_grid);
  s.cluster_q_grid = cfg.get_doubles("cluster", "q_grid", s.cluster_q_grid);
  s.cluster_frame_bits = static_cast<uint32_t>(
      cfg.get_int("cluster", "frame_bits", s.cluster_frame_bits));
  s.full_frame_bits =
      static_cast<uint64_t>(cfg.get_int("cluster", "full_frame_bits", s.full_frame_bits));
  s.cluster_f = cfg.get_double("cluster", "f", s.cluster_f);
  s.verification.tag_bits =
      static_cast<uint32_t>(cfg.get_int("verify", "tag_bits", s.verification.tag_bits));
  s.verification.p_collision =
      cfg.get_double("verify", "p_collision", s.verification.p_collision);
  s.cluster_amortize_tag = cfg.get_bool("cluster", "amortize_tag", true);
  if (!s.verification.valid()) throw ConfigError("config: invalid [verify] section");

  s.drift.q_start = cfg.get_double("estimator", "q_start", s.drift.q_start);
  s.drift.q_mean = cfg.get_double("estimator", "q_mean", s.drift.q_mean);
  s.drift.step_sigma = cfg.get_double("estimator", "step_sigma", s.drift.step_sigma);
  s.drift.mean_reversion =
      cfg.get_double("estimator", "mean_reversion", s.drift.mean_reversion);
  s.drift.q_min = cfg.get_double("estimator", "q_min", s.drift.q_min);
  s.drift.q_max = cfg.get_double("estimator", "q_max", s.drift.q_max);
  s.drift.chunk_bits =
      static_cast<uint32_t>(cfg.get_int("estimator", "chunk_bits", s.drift.chunk_bits));
  if (!s.drift.valid()) throw ConfigError("config: invalid [estimator] drift process");
  s.estimator_block_sizes = cfg.get_doubles("estimator", "block_sizes", {});
  s.estimator_parallelism =
      cfg.get_doubles("estimator", "parallelism", s.estimator_parallelism);
  s.estimator_chunks =
      static_cast<uint64_t>(cfg.get_int("estimator", "chunks", s.estimator_chunks));

  s.continuous_frames = static_cast<uint32_t>(
      cfg.get_int("continuous", "frames", s.continuous_frames));
  s.continuous_cluster_k = static_cast<uint32_t>(
      cfg.get_int("continuous", "cluster_k", s.continuous_cluster_k));
  s.continuous_parallelism = static_cast<uint32_t>(
      cfg.get_int("continuous", "parallelism", s.continuous_parallelism));

  if (s.frames < 1) throw ConfigError("config: frames must be >= 1");
  if (s.qber_grid.empty()) throw ConfigError("config: empty qber grid");
  for (double q : s.qber_grid)
    if (!(q > 0.0 && q < 0.5)) throw ConfigError("config: qber outside (0, 0.5)");

  s.spec_echo = cfg.entries();
  return s;
}

SweepSummary summarize(const std::vector<ReconciliationReport>& reports, double q,
                       double q_hat, const std::string& protocol, uint32_t frame_size) {
  SweepSummary out;
  out.q = q;
  out.q_hat = q_hat;
  out.protocol = protocol;
  out.frame_size = frame_size;
  out.frames = static_cast<uint32_t>(reports.size());
  if (reports.empty()) return out;
  double fsum = 0, f2sum = 0, fails = 0;
  for (const auto& r : reports) {
    fsum += r.f;
    f2sum += r.f * r.f;
    fails += r.success ? 0.0 : 1.0;
    out.mean_f_fer += r.f_fer;
    out.mean_messages += static_cast<double>(r.messages);
    out.mean_rounds += static_cast<double>(r.rounds);
    out.mean_leak += r.leak_ir;
    out.mean_attempts += r.attempts;
    out.mean_wall_seconds += r.wall_seconds;
  }
  double n = static_cast<double>(reports.size());
  out.mean_f = fsum / n;
  out.std_f = std::sqrt(std::max(0.0, f2sum / n - out.mean_f * out.mean_f));
  out.fer = fails / n;
  out.mean_f_fer /= n;
  out.mean_messages /= n;
  out.mean_rounds /= n;
  out.mean_leak /= n;
  out.mean_attempts /= n;
  out.mean_wall_seconds /= n;
  return out;
}

ReconciliationReport run_cascade_frame(const ExperimentSpec& spec, double q,
                                       double q_hat, uint64_t grid_index,
                                       uint64_t frame_index,
                                       const LatencyModel& latency) {
  Rng base = Rng(spec.seed).derive(grid_index, frame_index);
  uint64_t sub = base.next_u64();
  Rng frame_rng = Rng(spec.seed).derive(0xFA3E, grid_index).derive(frame_index);
  BitFrame x = BitFrame::random(spec.cascade_frame_size, frame_rng, frame_index);
  BitFrame y = transmit_bsc(x, {q, sub});
  CascadeConfig cfg = spec.cascade;
  cfg.seed = sub ^ 0xCA5CADEull;
  Session session(latency);
  return cascade_reconcile(session.alice(), session.bob(), x, y, q_hat, cfg);
}

ReconciliationReport run_blind_frame(const ExperimentSpec& spec,
                                     const ldpc::CodeSet& code_set, double q,
                                     double q_hat, uint64_t grid_index,
                                     uint64_t frame_index, const LatencyModel& latency) {
  Rng base = Rng(spec.seed).derive(grid_index ^ 0xB11D, frame_index);
  uint64_t sub = base.next_u64();
  uint32_t n = code_set.frame_size() - code_set.d();
  Rng frame_rng = Rng(spec.seed).derive(0xB11DF, grid_index).derive(frame_index);
  BitFrame x = BitFrame::random(n, frame_rng, frame_index);
  BitFrame y = transmit_bsc(x, {q, sub});
  blind::BlindConfig cfg = spec.blind_cfg;
  cfg.seed = sub ^ 0xB11Dull;
  Session session(latency);
  return blind::blind_reconcile(session.alice(), session.bob(), x, y, q_hat, code_set,
                                cfg);
}

namespace {

/// Shared collector for the efficiency/message sweeps: one task per
/// (q grid point, protocol entry).
std::vector<std::pair<SweepSummary, std::vector<ReconciliationReport>>> collect_sweep(
    const ExperimentSpec& spec, const std::vector<ProtocolEntry>& entries) {
  struct Task {
    size_t q_index;
    size_t entry;
  };
  std::vector<Task> tasks;
  for (size_t e = 0; e < entries.size(); ++e)
    for (size_t qi = 0; qi < spec.qber_grid.size(); ++qi) tasks.push_back({qi, e});

  std::vector<std::pair<SweepSummary, std::vector<ReconciliationReport>>> results(
      tasks.size());
  parallel_tasks(tasks.size(), [&](size_t t) {
    const Task& task = tasks[t];
    const ProtocolEntry& entry = entries[task.entry];
    double q = spec.qber_grid[task.q_index];
    uint64_t grid_index = task.q_index * 64 + task.entry;
    std::vector<ReconciliationReport> reports;
    reports.reserve(spec.frames);
    for (uint32_t i = 0; i < spec.frames; ++i) {
      reports.push_back(
          entry.set == nullptr
              ? run_cascade_frame(spec, q, q, grid_index, i, spec.latency)
              : run_blind_frame(spec, *entry.set, q, q, grid_index, i, spec.latency));
    }
    results[t] = {summarize(reports, q, q, entry.name, entry.frame_size),
                  std::move(reports)};
  });
  return results;
}

}  // namespace

std::vector<SweepSummary> run_efficiency_sweep(const ExperimentSpec& spec) {
  auto sets = load_code_sets(spec);
  auto entries = protocol_entries(spec, sets);
  auto results = collect_sweep(spec, entries);

  CsvWriter frames_csv(out_path(spec, "efficiency_frames.csv"), kFrameHeader);
  CsvWriter summary_csv(out_path(spec, "efficiency_summary.csv"),
                        {"q", "protocol", "frame_size", "frames", "mean_f", "std_f",
                         "fer", "mean_f_fer", "mean_messages", "mean_leak_ir"});
  std::vector<SweepSummary> summaries;
  for (auto& [summary, reports] : results) {
    write_frame_rows(frames_csv, summary.q, summary.q_hat, summary.protocol,
                     summary.frame_size, reports);
    summary_csv.row({CsvWriter::fmt(summary.q), summary.protocol,
                     std::to_string(summary.frame_size), std::to_string(summary.frames),
                     CsvWriter::fmt(summary.mean_f), CsvWriter::fmt(summary.std_f),
                     CsvWriter::fmt(summary.fer), CsvWriter::fmt(summary.mean_f_fer),
                     CsvWriter::fmt(summary.mean_messages),
                     CsvWriter::fmt(summary.mean_leak)});
    summaries.push_back(summary);
  }
  write_metadata_sidecar(summary_csv.path(), spec.spec_echo, spec.seed, hash_list(sets));
  return summaries;
}

std::vector<SweepSummary> run_message_count(const ExperimentSpec& spec) {
  auto sets = load_code_sets(spec);
  auto entries = protocol_entries(spec, sets);
  auto results = collect_sweep(spec, entries);

  CsvWriter csv(out_path(spec, "message_count.csv"),
                {"q", "protocol", "frame_size", "frames", "messages_per_frame",
                 "messages_per_corrected_bit", "rounds_per_frame"});
  std::vector<SweepSummary> summaries;
  for (auto& [summary, reports] : results) {
    csv.row({CsvWriter::fmt(summary.q), summary.protocol,
             std::to_string(summary.frame_size), std::to_string(summary.frames),
             CsvWriter::fmt(summary.mean_messages),
             CsvWriter::fmt(summary.mean_messages / summary.frame_size),
             CsvWriter::fmt(summary.mean_rounds)});
    summaries.push_back(summary);
  }
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, hash_list(sets));
  return summaries;
}

std::vector<SweepSummary> run_mismatch_sweep(const ExperimentSpec& spec) {
  auto sets = load_code_sets(spec);
  auto entries = protocol_entries(spec, sets);

  struct Task {
    double q_true;
    double q_hat;
    size_t entry;
    size_t index;
  };
  std::vector<Task> tasks;
  size_t counter = 0;
  for (size_t e = 0; e < entries.size(); ++e) {
    for (double q_true : spec.q_true_grid) {
      std::vector<double> hats = spec.q_hat_grid;
      if (hats.empty()) {
        for (double off : {-0.03, -0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02, 0.03}) {
          double v = q_true + off;
          if (v > 0.004 && v < 0.49) hats.push_back(v);
        }
      }
      for (double q_hat : hats) tasks.push_back({q_true, q_hat, e, counter++});
    }
  }

  std::vector<SweepSummary> summaries(tasks.size());
  parallel_tasks(tasks.size(), [&](size_t t) {
    const Task& task = tasks[t];
    const ProtocolEntry& entry = entries[task.entry];
    std::vector<ReconciliationReport> reports;
    reports.reserve(spec.frames);
    for (uint32_t i = 0; i < spec.frames; ++i) {
      // Seed by the true-q level only: the same frames and noise are reused
      // across the q_hat axis, isolating the estimate's effect.
      uint64_t grid_index = 1000 + task.entry * 131 +
                            static_cast<uint64_t>(std::lround(task.q_true * 10000));
      reports.push_back(entry.set == nullptr
                            ? run_cascade_frame(spec, task.q_true, task.q_hat,
                                                grid_index, i, spec.latency)
                            : run_blind_frame(spec, *entry.set, task.q_true, task.q_hat,
                                              grid_index, i, spec.latency));
    }
    summaries[t] = summarize(reports, task.q_true, task.q_hat, entry.name,
                             entry.frame_size);
  });

  CsvWriter csv(out_path(spec, "mismatch.csv"),
                {"q_true", "q_hat", "protocol", "frame_size", "frames", "mean_f",
                 "mean_messages", "fer", "mean_attempts"});
  for (const auto& s : summaries)
    csv.row({CsvWriter::fmt(s.q), CsvWriter::fmt(s.q_hat), s.protocol,
             std::to_string(s.frame_size), std::to_string(s.frames),
             CsvWriter::fmt(s.mean_f), CsvWriter::fmt(s.mean_messages),
             CsvWriter::fmt(s.fer), CsvWriter::fmt(s.mean_attempts)});
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, hash_list(sets));
  return summaries;
}

std::vector<LatencyBenchRow> run_latency_bench(const ExperimentSpec& spec) {
  // The protocol transcript does not depend on the latency model (only the
  // simulated clock does), so one run per q reused across the latency grid
  // IS the serial model evaluated exactly.
  std::vector<SweepSummary> per_q(spec.latency_qber_grid.size());
  parallel_tasks(per_q.size(), [&](size_t qi) {
    double q = spec.latency_qber_grid[qi];
    std::vector<ReconciliationReport> reports;
    for (uint32_t i = 0; i < spec.frames; ++i)
      reports.push_back(run_cascade_frame(spec, q, q, 7000 + qi, i, LatencyModel{}));
    per_q[qi] = summarize(reports, q, q, "cascade", spec.cascade_frame_size);
  });

  std::vector<LatencyBenchRow> rows;
  for (size_t qi = 0; qi < per_q.size(); ++qi) {
    const auto& s = per_q[qi];
    double compute_ref =
        static_cast<double>(spec.cascade_frame_size) / spec.reference_bits_per_second;
    for (double lat : spec.latency_grid_s) {
      LatencyBenchRow row;
      row.latency_s = lat;
      row.q = s.q;
      row.mean_rounds = s.mean_rounds;
      row.mean_messages = s.mean_messages;
      ReconciliationReport model;
      model.n = spec.cascade_frame_size;
      model.rounds = static_cast<uint64_t>(std::llround(s.mean_rounds));
      row.throughput_model = throughput(model, {lat, 0.0}, compute_ref);
      row.throughput_wall = throughput(model, {lat, 0.0}, s.mean_wall_seconds);
      rows.push_back(row);
    }
  }

  CsvWriter csv(out_path(spec, "latency_bench.csv"),
                {"latency_s", "q", "mean_rounds", "mean_messages", "throughput_model",
                 "throughput_wall"});
  for (const auto& r : rows)
    csv.row({CsvWriter::fmt(r.latency_s), CsvWriter::fmt(r.q),
             CsvWriter::fmt(r.mean_rounds), CsvWriter::fmt(r.mean_messages),
             CsvWriter::fmt(r.throughput_model), CsvWriter::fmt(r.throughput_wall)});
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, {});
  return rows;
}

std::vector<ClusterSweepRow> run_cluster_sweep(const ExperimentSpec& spec) {
  uint32_t k_max = static_cast<uint32_t>(
      std::max<uint64_t>(1, spec.full_frame_bits / spec.cluster_frame_bits));
  std::vector<ClusterSweepRow> rows;
  for (double q : spec.cluster_q_grid) {
    for (double fer : spec.cluster_fer_grid) {
      for (bool repeats : {false, true}) {
        auto opt = optimize_cluster(spec.cluster_f, fer, spec.cluster_frame_bits, q,
                                    spec.verification, repeats, k_max,
                                    spec.cluster_amortize_tag);
        rows.push_back({q, fer, repeats, opt.k, opt.f_eff});
      }
    }
  }
  CsvWriter csv(out_path(spec, "cluster_sweep.csv"),
                {"q", "fer", "repeats", "k_star", "f_eff_star", "k_max", "frame_bits"});
  for (const auto& r : rows)
    csv.row({CsvWriter::fmt(r.q), CsvWriter::fmt(r.fer), std::to_string(r.repeats ? 1 : 0),
             std::to_string(r.k_star), CsvWriter::fmt(r.f_eff_star),
             std::to_string(k_max), std::to_string(spec.cluster_frame_bits)});
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, {});
  return rows;
}

std::vector<EstimatorRow> run_estimator_study(const ExperimentSpec& spec) {
  QberTrajectory traj = simulate_drift(spec.drift, spec.estimator_chunks, spec.seed);
  EstimatorStudyConfig cfg;
  if (spec.estimator_block_sizes.empty()) {
    for (uint32_t p = 12; p <= 19; ++p)
      cfg.block_size_grid.push_back(size_t{1} << p);
  } else {
    for (double b : spec.estimator_block_sizes)
      cfg.block_size_grid.push_back(static_cast<size_t>(b));
  }
  for (double p : spec.estimator_parallelism)
    cfg.parallelism.push_back(static_cast<uint32_t>(p));
  auto rows = qber_estimator_study(traj, cfg);

  CsvWriter csv(out_path(spec, "estimator_study.csv"),
                {"block_size", "parallelism", "mae", "rmse", "samples"});
  for (const auto& r : rows)
    csv.row({std::to_string(r.block_size), std::to_string(r.parallelism),
             CsvWriter::fmt(r.mae), CsvWriter::fmt(r.rmse), std::to_string(r.samples)});
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, {});
  return rows;
}

std::vector<ContinuousRow> run_continuous(const ExperimentSpec& spec) {
  auto sets = load_code_sets(spec);
  auto entries = protocol_entries(spec, sets);

  std::vector<std::vector<ContinuousRow>> per_entry(entries.size());
  parallel_tasks(entries.size(), [&](size_t e) {
    const ProtocolEntry& entry = entries[e];
    uint32_t n = entry.frame_size;
    Rng walk = Rng(spec.seed).derive(0xD21F7, e);
    double q = spec.drift.q_start;
    double q_hat = spec.drift.q_start;
    std::deque<double> pending;  // realized QBERs waiting to become estimates

    std::vector<BitFrame> alice_cluster, bob_cluster;
    std::vector<size_t> cluster_rows;
    std::vector<ContinuousRow>& rows = per_entry[e];

    auto reconcile_once = [&](const BitFrame& x, const BitFrame& y, double qh,
                              uint64_t frame_idx, BitFrame* corrected) {
      Session session(spec.latency);
      if (entry.set == nullptr) {
        CascadeConfig ccfg = spec.cascade;
        ccfg.seed = Rng(spec.seed).derive(0xC0417, frame_idx).next_u64();
        return cascade_reconcile(session.alice(), session.bob(), x, y, qh, ccfg,
                                 corrected);
      }
      blind::BlindConfig bcfg = spec.blind_cfg;
      bcfg.seed = Rng(spec.seed).derive(0xB0417, frame_idx).next_u64();
      return blind::blind_reconcile(session.alice(), session.bob(), x, y, qh,
                                    *entry.set, bcfg, corrected);
    };

    for (uint32_t fidx = 0; fidx < spec.continuous_frames; ++fidx) {
      Rng frame_rng = Rng(spec.seed).derive(0xC017, e).derive(fidx);
      BitFrame x = BitFrame::random(n, frame_rng, fidx);
      BitFrame y = transmit_bsc(x, {q, frame_rng.next_u64()});

      double qh = std::clamp(q_hat, 0.002, 0.45);
      BitFrame corrected;
      auto rep = reconcile_once(x, y, qh, fidx, &corrected);

      ContinuousRow row;
      row.frame = fidx;
      row.protocol = entry.name;
      row.q_true = rep.q_true;
      row.q_hat = qh;
      row.success = rep.success;
      row.f = rep.f;
      row.leak_ir = rep.leak_ir;
      row.messages = rep.messages;
      rows.push_back(row);

      alice_cluster.push_back(x);
      bob_cluster.push_back(corrected);
      cluster_rows.push_back(rows.size() - 1);

      // Estimator chain: realized QBER of this frame becomes the estimate
      // `parallelism` frames later.
      pending.push_back(std::max(rep.q_true, 0.001));
      if (pending.size() >= spec.continuous_parallelism) {
        q_hat = pending.front();
        pending.pop_front();
      }

      if (alice_cluster.size() == spec.continuous_cluster_k ||
          fidx + 1 == spec.continuous_frames) {
        Session vs(spec.latency);
        auto ver = verify_cluster(vs.alice(), vs.bob(), alice_cluster, bob_cluster,
                                  spec.verification, spec.seed ^ (0xEE00 + fidx));
        double leak_ev_share = ver.leak_ev / static_cast<double>(alice_cluster.size());
        for (size_t ri : cluster_rows) rows[ri].leak_ev += leak_ev_share;
        if (!ver.pass) {
          // one repeat request: re-correct every frame of the cluster
          for (size_t ci = 0; ci < alice_cluster.size(); ++ci) {
            size_t ri = cluster_rows[ci];
            BitFrame fixed;
            auto rep2 = reconcile_once(alice_cluster[ci], bob_cluster[ci],
                                       std::clamp(q_hat, 0.002, 0.45),
                                       0x8000000ull + fidx * 64 + ci, &fixed);
            bob_cluster[ci] = fixed;
            rows[ri].repeated = true;
            rows[ri].leak_ir += rep2.leak_ir;
            rows[ri].messages += rep2.messages;
            rows[ri].f += rep2.f;
            rows[ri].success = hamming_distance(alice_cluster[ci], fixed) == 0;
          }
          Session vs2(spec.latency);
          auto ver2 = verify_cluster(vs2.alice(), vs2.bob(), alice_cluster, bob_cluster,
                                     spec.verification, spec.seed ^ (0xEE77 + fidx));
          double share2 = ver2.leak_ev / static_cast<double>(alice_cluster.size());
          for (size_t ri : cluster_rows) rows[ri].leak_ev += share2;
        }
        alice_cluster.clear();
        bob_cluster.clear();
        cluster_rows.clear();
      }

      q += spec.drift.mean_reversion * (spec.drift.q_mean - q) +
           spec.drift.step_sigma * std::sqrt(static_cast<double>(n) / spec.drift.chunk_bits) *
               walk.normal();
      q = std::clamp(q, spec.drift.q_min, spec.drift.q_max);
    }
  });

  std::vector<ContinuousRow> all;
  for (auto& rows : per_entry)
    for (auto& r : rows) all.push_back(std::move(r));

  CsvWriter csv(out_path(spec, "continuous.csv"),
                {"frame", "protocol", "q_true", "q_hat", "success", "repeated", "f",
                 "leak_ir", "leak_ev", "messages"});
  for (const auto& r : all)
    csv.row({std::to_string(r.frame), r.protocol, CsvWriter::fmt(r.q_true),
             CsvWriter::fmt(r.q_hat), std::to_string(r.success ? 1 : 0),
             std::to_string(r.repeated ? 1 : 0), CsvWriter::fmt(r.f),
             CsvWriter::fmt(r.leak_ir), CsvWriter::fmt(r.leak_ev),
             CsvWriter::fmt(r.messages)});
  write_metadata_sidecar(csv.path(), spec.spec_echo, spec.seed, hash_list(sets));
  return all;
}

void generate_codesets(const ExperimentSpec& spec, bool build_selection_table,
                       uint32_t table_frames) {
  if (spec.code_manifests.empty())
    throw ConfigError("config: gen-code requires codes.manifests");
  for (const auto& path : spec.code_manifests) {
    auto mf = ldpc::load_codeset_manifest(path);
    auto set = ldpc::build_codeset(mf, spec.code_cache_dir, true);

    nlohmann::json resolved;
    resolved["name"] = mf.name + "-resolved";
    resolved["frame_size"] = mf.frame_size;
    resolved["d_fraction"] = mf.d_fraction;
    resolved["seed"] = mf.seed;
    nlohmann::json codes = nlohmann::json::array();
    for (size_t i = 0; i < set.size(); ++i) {
      char hash[20];
      std::snprintf(hash, sizeof hash, "%016llx",
                    static_cast<unsigned long long>(set.code(i).hash));
      // cache file names follow build_codeset's layout
      codes.push_back({{"rate", set.code(i).base_rate},
                       {"design_q", set.code(i).design_q},
                       {"fnv1a64", hash}});
    }
    resolved["codes"] = codes;

    if (build_selection_table) {
      nlohmann::json table = nlohmann::json::array();
      ExperimentSpec probe = spec;
      for (double q = 0.01; q <= 0.111; q += 0.01) {
        double best = 1e18;
        size_t best_idx = 0;
        for (size_t ci = 0; ci < set.size(); ++ci) {
          std::vector<ReconciliationReport> reports;
          probe.blind_cfg.force_code_index = static_cast<int32_t>(ci);
          for (uint32_t i = 0; i < table_frames; ++i)
            reports.push_back(run_blind_frame(probe, set, q, q, 0xABCD + ci, i, {}));
          auto s = summarize(reports, q, q, "blind", set.frame_size() - set.d());
          if (s.mean_f_fer < best) {
            best = s.mean_f_fer;
            best_idx = ci;
          }
        }
        table.push_back({q, best_idx});
      }
      resolved["selection"] = table;
    }

    fs::path out = fs::path(spec.code_cache_dir) /
                   (mf.name + "_resolved.json");
    std::ofstream outfile(out);
    if (!outfile) throw ldpc::CodeDataError("gen-code: cannot write " + out.string());
    outfile << resolved.dump(2) << '\n';
  }
}

}  // namespace recon::harness
