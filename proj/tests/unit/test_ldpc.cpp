#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "recon/channel.hpp"
#include "recon/ldpc/alist.hpp"
#include "recon/ldpc/codeset.hpp"
#include "recon/ldpc/decoder.hpp"
#include "recon/ldpc/matrix.hpp"
#include "recon/ldpc/peg.hpp"
#include "recon/metrics.hpp"

using namespace recon;
using namespace recon::ldpc;

namespace {

ParityCheckMatrix toy_matrix() {
  // 3x6, the small textbook example
  return ParityCheckMatrix(3, 6,
                           {{0, 0}, {0, 1}, {0, 3}, {1, 1}, {1, 2}, {1, 4},
                            {2, 0}, {2, 2}, {2, 5}});
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("matrix invariants") {
  auto H = toy_matrix();
  CHECK(H.rows() == 3);
  CHECK(H.cols() == 6);
  CHECK(H.rate() == doctest::Approx(0.5));
  CHECK(H.edge_count() == 9);

  // duplicate edge
  CHECK_THROWS_AS(ParityCheckMatrix(2, 4, {{0, 0}, {0, 0}, {1, 1}, {1, 2}, {0, 3}}),
                  std::invalid_argument);
  // zero-degree column
  CHECK_THROWS_AS(ParityCheckMatrix(2, 4, {{0, 0}, {1, 1}, {0, 2}}),
                  std::invalid_argument);
  // rate outside (0,1)
  CHECK_THROWS_AS(ParityCheckMatrix(4, 4, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}),
                  std::invalid_argument);
}

TEST_CASE("syndrome basics and linearity") {
  auto H = toy_matrix();
  BitFrame zero(6);
  CHECK(H.syndrome(zero).popcount() == 0);

  // single 1 at column c -> indicator of column support
  for (uint32_t c = 0; c < 6; ++c) {
    BitFrame e(6);
    e.set(c, true);
    BitFrame s = H.syndrome(e);
    for (uint32_t r = 0; r < 3; ++r) {
      bool in_support = false;
      for (uint32_t cc : H.row_neighbors(r)) in_support |= cc == c;
      CHECK(s.get(r) == in_support);
    }
  }

  // syndrome(x) ^ syndrome(y) == syndrome(x ^ y)
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    BitFrame x = BitFrame::random(6, rng);
    BitFrame y = BitFrame::random(6, rng);
    BitFrame sx = H.syndrome(x);
    sx.xor_with(H.syndrome(y));
    BitFrame xy = x;
    xy.xor_with(y);
    CHECK(sx == H.syndrome(xy));
  }

  BitFrame wrong(5);
  CHECK_THROWS_AS(H.syndrome(wrong), std::invalid_argument);
}

TEST_CASE("alist round trip") {
  auto H = toy_matrix();
  std::string path = temp_path("recon_toy.alist");
  save_alist(H, path);
  auto loaded = load_alist(path);
  CHECK(loaded.rows() == H.rows());
  CHECK(loaded.cols() == H.cols());
  CHECK(loaded.content_hash() == H.content_hash());

  // save(load(file)) is byte-stable on canonical files
  std::string path2 = temp_path("recon_toy2.alist");
  save_alist(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("alist rejects malformed input") {
  std::string path = temp_path("recon_bad.alist");
  {
    std::ofstream out(path);
    out << "6 3\n2 3\n";  // truncated
  }
  CHECK_THROWS(load_alist(path));
  {
    std::ofstream out(path);
    // header says 2x4 with an out-of-range row index
    out << "4 2\n1 2\n1 1 1 1\n2 2\n9\n1\n2\n2\n1 3\n2 4\n";
  }
  CHECK_THROWS(load_alist(path));
  CHECK_THROWS(load_alist(temp_path("recon_missing.alist")));
}

TEST_CASE("alist header arithmetic: 1944-column rate 5/6") {
  DegreeDistribution dist;
  dist.node_fractions = {{3, 1.0}};
  auto H = peg_construct(1944, dist, 324, 7);
  CHECK(H.cols() == 1944);
  CHECK(H.rows() == 324);
  CHECK(H.rate() == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
  std::string path = temp_path("recon_1944.alist");
  save_alist(H, path);
  auto loaded = load_alist(path);
  CHECK(loaded.cols() == 1944);
  CHECK(loaded.rows() == 324);
}

TEST_CASE("peg: regular degree-3, N=16 m=8") {
  DegreeDistribution dist;
  dist.node_fractions = {{3, 1.0}};
  auto H = peg_construct(16, dist, 8, 5);
  for (uint32_t c = 0; c < 16; ++c) CHECK(H.col_degree(c) == 3);

  // determinism
  auto H2 = peg_construct(16, dist, 8, 5);
  CHECK(H.content_hash() == H2.content_hash());
  auto H3 = peg_construct(16, dist, 8, 6);
  CHECK(H.content_hash() != H3.content_hash());
}

TEST_CASE("peg: N=4000 rate 0.85 reaches girth >= 6") {
  DegreeDistribution dist;
  dist.node_fractions = {{2, 0.12}, {3, 0.70}, {8, 0.18}};
  auto H = peg_construct(4000, dist, 600, 11);
  CHECK(H.girth() >= 6);

  // realized degree histogram matches the request within rounding
  size_t d2 = 0, d3 = 0, d8 = 0;
  for (uint32_t c = 0; c < 4000; ++c) {
    uint32_t d = H.col_degree(c);
    if (d == 2) ++d2;
    if (d == 3) ++d3;
    if (d == 8) ++d8;
  }
  CHECK(d2 + d3 + d8 == 4000);
  CHECK(std::abs(static_cast<long>(d2) - 480) <= 1);
  CHECK(std::abs(static_cast<long>(d3) - 2800) <= 1);
  CHECK(std::abs(static_cast<long>(d8) - 720) <= 1);
}

TEST_CASE("peg rejects infeasible requests") {
  DegreeDistribution dist;
  dist.node_fractions = {{9, 1.0}};
  CHECK_THROWS_AS(peg_construct(16, dist, 8, 1), std::invalid_argument);
  DegreeDistribution bad;
  bad.node_fractions = {{3, 0.5}};
  CHECK_THROWS_AS(peg_construct(16, bad, 8, 1), std::invalid_argument);
}

TEST_CASE("girth detects 4-cycles") {
  // two checks sharing two columns
  ParityCheckMatrix H(2, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 2}, {1, 3}});
  CHECK(H.girth() == 4);
}

TEST_CASE("decoder: noiseless saturated input converges immediately") {
  DegreeDistribution dist;
  dist.node_fractions = {{3, 1.0}};
  auto H = peg_construct(256, dist, 64, 3);
  Rng rng(9);
  BitFrame x = BitFrame::random(256, rng);
  std::vector<double> llr(256);
  for (size_t i = 0; i < 256; ++i) llr[i] = x.get(i) ? -kLlrSaturation : kLlrSaturation;
  auto res = spa_decode(H, llr, H.syndrome(x), 50);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.hard == x);
}

TEST_CASE("decoder: zero llr carries no information") {
  DegreeDistribution dist;
  dist.node_fractions = {{3, 1.0}};
  auto H = peg_construct(128, dist, 32, 3);
  BitFrame target(32);
  target.set(0, true);
  target.set(7, true);
  std::vector<double> llr(128, 0.0);
  auto res = spa_decode(H, llr, target, 20);
  CHECK_FALSE(res.converged);
  for (double p : res.posteriors) CHECK(std::fabs(p) < 1e-12);
}

TEST_CASE("decoder: convergence implies exact syndrome match") {
  DegreeDistribution dist;
  dist.node_fractions = {{2, 0.25}, {3, 0.55}, {8, 0.20}};
  auto H = peg_construct(1024, dist, 256, 21);
  Rng rng(31);
  int converged = 0;
  for (uint64_t t = 0; t < 20; ++t) {
    BitFrame x = BitFrame::random(1024, rng, t);
    BitFrame y = transmit_bsc(x, {0.02, 100 + t});
    double mag = bsc_llr_magnitude(0.02);
    std::vector<double> llr(1024);
    for (size_t i = 0; i < 1024; ++i) llr[i] = y.get(i) ? -mag : mag;
    auto res = spa_decode(H, llr, H.syndrome(x), 50);
    if (res.converged) {
      ++converged;
      CHECK(H.syndrome(res.hard) == H.syndrome(x));
    }
  }
  CHECK(converged >= 15);
}

TEST_CASE("entropy inverse") {
  // the inverse flattens near H = 1, so precision is absolute-ish there
  for (double q : {0.005, 0.02, 0.06, 0.2, 0.5}) {
    CHECK(entropy_inverse(binary_entropy(q)) == doctest::Approx(q).epsilon(1e-6));
  }
  CHECK_THROWS_AS(entropy_inverse(1.5), std::domain_error);
}

TEST_CASE("codeset manifest loading and selection rule") {
  std::string manifest_path = temp_path("recon_codeset.json");
  {
    std::ofstream out(manifest_path);
    out << R"({
      "name": "unit-test-set",
      "frame_size": 1024,
      "d_fraction": 0.0625,
      "seed": 99,
      "codes": [
        {"rate": 0.5, "lambda_node": [[3, 1.0]]},
        {"rate": 0.75, "lambda_node": [[3, 1.0]]}
      ]
    })";
  }
  auto mf = load_codeset_manifest(manifest_path);
  CHECK(mf.frame_size == 1024);
  CHECK(mf.codes.size() == 2);

  std::string cache = temp_path("recon_codes_cache");
  auto set = build_codeset(mf, cache, true);
  CHECK(set.frame_size() == 1024);
  CHECK(set.d() == 64);
  CHECK(set.size() == 2);
  CHECK(set.code(0).base_rate > set.code(1).base_rate);  // sorted descending
  for (size_t i = 0; i < set.size(); ++i) {
    CHECK(set.code(i).modulated.size() == 64);
    for (uint32_t pos : set.code(i).modulated)
      CHECK(set.code(i).matrix->col_degree(pos) >= 3);
  }

  // low q -> high-rate code (index 0), high q -> low-rate code
  CHECK(set.select(0.005, 1.1) == 0);
  CHECK(set.select(0.10, 1.1) == 1);

  // rebuild hits the cache and yields identical hashes
  auto set2 = build_codeset(mf, cache, false);
  CHECK(set2.code(0).hash == set.code(0).hash);
  CHECK(set2.code(1).hash == set.code(1).hash);

  CHECK_THROWS_AS(build_codeset(mf, temp_path("recon_empty_cache"), false),
                  CodeDataError);
  CHECK_THROWS_AS(load_codeset_manifest(temp_path("recon_nope.json")), CodeDataError);
}
