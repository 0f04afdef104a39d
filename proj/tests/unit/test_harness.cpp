#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "recon/harness/config.hpp"
#include "recon/harness/csv.hpp"
#include "recon/harness/experiments.hpp"

using namespace recon;
using namespace recon::harness;

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string temp_dir(const char* name) {
  auto p = fs::temp_directory_path() / name;
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("config parsing") {
  auto cfg = Config::parse(
      "[experiment]\n"
      "qber_grid = 0.02, 0.04\n"
      "frames = 12   # comment\n"
      "; full-line comment\n"
      "[cascade]\n"
      "k1_constant = 1.5\n"
      "confidence_split = false\n");
  CHECK(cfg.get_doubles("experiment", "qber_grid", {}) ==
        std::vector<double>{0.02, 0.04});
  CHECK(cfg.get_int("experiment", "frames", 0) == 12);
  CHECK(cfg.get_double("cascade", "k1_constant", 0) == 1.5);
  CHECK(cfg.get_bool("cascade", "confidence_split", true) == false);
  CHECK(cfg.get("missing", "key", "fallback") == "fallback");

  CHECK_THROWS_AS(Config::parse("[experiment\nframes=1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[a]\nx = notanumber\n").get_double("a", "x", 0),
                  ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/recon.ini"), ConfigError);
}

TEST_CASE("spec_from_config validation") {
  auto good = Config::parse("[experiment]\nframes = 3\n");
  auto spec = spec_from_config(good);
  CHECK(spec.frames == 3);
  CHECK(spec.cascade.valid());

  CHECK_THROWS_AS(spec_from_config(Config::parse("[experiment]\nframes = 0\n")),
                  ConfigError);
  CHECK_THROWS_AS(spec_from_config(Config::parse("[experiment]\nqber_grid = 0.7\n")),
                  ConfigError);
  CHECK_THROWS_AS(spec_from_config(Config::parse("[cascade]\niterations = 1\n")),
                  ConfigError);
}

TEST_CASE("csv formatting is deterministic") {
  std::string dir = temp_dir("recon_csv_test");
  std::string path = dir + "/out.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.row({CsvWriter::fmt(0.1), CsvWriter::fmt(uint64_t{7})});
    CHECK_THROWS_AS(w.row({"only-one"}), std::invalid_argument);
  }
  CHECK(slurp(path) == "a,b\n0.1,7\n");
  write_metadata_sidecar(path, {{"experiment.frames", "3"}}, 42, {{"code", 0x1234}});
  CHECK(fs::exists(path + ".meta.json"));
}

TEST_CASE("efficiency sweep: byte-identical outputs for one seed") {
  ExperimentSpec spec;
  spec.qber_grid = {0.03};
  spec.frames = 4;
  spec.seed = 5;
  spec.cascade_frame_size = 2048;
  spec.protocols = {"cascade"};

  std::string dir1 = temp_dir("recon_sweep1");
  std::string dir2 = temp_dir("recon_sweep2");
  spec.out_dir = dir1;
  auto sum1 = run_efficiency_sweep(spec);
  spec.out_dir = dir2;
  auto sum2 = run_efficiency_sweep(spec);

  REQUIRE(sum1.size() == 1);
  CHECK(sum1[0].frames == 4);
  CHECK(sum1[0].mean_f == sum2[0].mean_f);
  CHECK(slurp(dir1 + "/efficiency_frames.csv") == slurp(dir2 + "/efficiency_frames.csv"));
  CHECK(slurp(dir1 + "/efficiency_summary.csv") ==
        slurp(dir2 + "/efficiency_summary.csv"));

  // summary aggregates recompute from the per-frame rows
  std::string frames_csv = slurp(dir1 + "/efficiency_frames.csv");
  size_t lines = std::count(frames_csv.begin(), frames_csv.end(), '\n');
  CHECK(lines == 1 + 4);  // header + one row per frame
}

TEST_CASE("message-count op agrees with the efficiency sweep") {
  ExperimentSpec spec;
  spec.qber_grid = {0.03};
  spec.frames = 3;
  spec.seed = 9;
  spec.cascade_frame_size = 2048;
  spec.protocols = {"cascade"};
  spec.out_dir = temp_dir("recon_msgcount");

  auto eff = run_efficiency_sweep(spec);
  auto msg = run_message_count(spec);
  REQUIRE(eff.size() == msg.size());
  CHECK(eff[0].mean_messages == msg[0].mean_messages);
}

TEST_CASE("latency bench rows follow the serial model") {
  ExperimentSpec spec;
  spec.frames = 3;
  spec.seed = 4;
  spec.cascade_frame_size = 2048;
  spec.latency_qber_grid = {0.03};
  spec.latency_grid_s = {0.0, 0.001, 0.005};
  spec.reference_bits_per_second = 80e3;
  spec.out_dir = temp_dir("recon_latbench");

  auto rows = run_latency_bench(spec);
  REQUIRE(rows.size() == 3);
  double c = spec.cascade_frame_size / spec.reference_bits_per_second;
  for (const auto& r : rows) {
    double expect = spec.cascade_frame_size /
                    (c + std::llround(r.mean_rounds) * r.latency_s);
    CHECK(r.throughput_model == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(rows[0].throughput_model > rows[1].throughput_model);
  CHECK(rows[1].throughput_model > rows[2].throughput_model);
}

TEST_CASE("cluster sweep rows carry true arg-mins") {
  ExperimentSpec spec;
  spec.cluster_q_grid = {0.02, 0.06};
  spec.cluster_fer_grid = {0.0, 0.01};
  spec.cluster_frame_bits = 1944;
  spec.full_frame_bits = 1944 * 64;
  spec.out_dir = temp_dir("recon_cluster");

  auto rows = run_cluster_sweep(spec);
  CHECK(rows.size() == 2 * 2 * 2);
  for (const auto& r : rows) {
    if (r.fer == 0.0) CHECK(r.k_star == 64);
    auto direct = optimize_cluster(spec.cluster_f, r.fer, 1944, r.q, spec.verification,
                                   r.repeats, 64, true);
    CHECK(direct.k == r.k_star);
    CHECK(direct.f_eff == doctest::Approx(r.f_eff_star).epsilon(1e-12));
  }
}

TEST_CASE("continuous run smoke: estimator tracks and EV books tags") {
  ExperimentSpec spec;
  spec.seed = 31;
  spec.cascade_frame_size = 2048;
  spec.protocols = {"cascade"};
  spec.continuous_frames = 12;
  spec.continuous_cluster_k = 4;
  spec.continuous_parallelism = 1;
  spec.drift.q_start = spec.drift.q_mean = 0.03;
  spec.drift.step_sigma = 0.0;
  spec.drift.mean_reversion = 0.0;
  spec.out_dir = temp_dir("recon_continuous");

  auto rows = run_continuous(spec);
  REQUIRE(rows.size() == 12);
  double tag_total = 0;
  size_t repeated_clusters = 0;
  for (const auto& r : rows) {
    CHECK(r.protocol == "cascade");
    tag_total += r.leak_ev;
    if (r.frame % 4 == 0 && r.repeated) ++repeated_clusters;
    if (r.frame >= 1) {
      // zero drift: previous-frame estimate stays within binomial noise
      CHECK(std::fabs(r.q_hat - 0.03) < 5 * std::sqrt(0.03 * 0.97 / 2048));
    }
  }
  // three clusters of 4, one 50-bit tag each, plus one re-verification per
  // cluster whose first verification caught a frame error
  CHECK(tag_total == doctest::Approx(50.0 * (3 + repeated_clusters)));
}
