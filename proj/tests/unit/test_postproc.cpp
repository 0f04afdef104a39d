#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recon/estimator.hpp"
#include "recon/gf2.hpp"
#include "recon/metrics.hpp"
#include "recon/postproc.hpp"
#include "recon/rng.hpp"
#include "recon/session.hpp"

using namespace recon;

TEST_CASE("fer_cluster") {
  CHECK(fer_cluster(0.0, 5) == 0.0);
  CHECK(fer_cluster(1.0, 3) == 1.0);
  CHECK(fer_cluster(0.01, 10) == doctest::Approx(0.0956179).epsilon(1e-5));
  CHECK_THROWS_AS(fer_cluster(-0.1, 1), std::domain_error);
  CHECK_THROWS_AS(fer_cluster(0.5, 0), std::domain_error);
}

TEST_CASE("fer_cluster agrees with Monte Carlo within 3 sigma") {
  Rng rng(5);
  const double fer = 0.05;
  const uint32_t k = 12;
  const int trials = 20000;
  int bad = 0;
  for (int t = 0; t < trials; ++t) {
    bool any = false;
    for (uint32_t i = 0; i < k; ++i) any |= rng.bernoulli(fer);
    bad += any ? 1 : 0;
  }
  double expect = fer_cluster(fer, k);
  double sigma = std::sqrt(expect * (1 - expect) / trials);
  CHECK(std::fabs(static_cast<double>(bad) / trials - expect) < 3 * sigma);
}

TEST_CASE("effective efficiency limits") {
  VerificationParams tiny{1, 1e-300};
  // fer=0, k=1, t->0, Pc->0 reduces to f (t=1 bit at n=1e6 is ~1e-5)
  double val = effective_efficiency(1.1, 0.0, 1, 1u << 20, 0.02, tiny);
  CHECK(val == doctest::Approx(1.1).epsilon(1e-4));

  // k = 1 is the f_FER formula plus the verification terms
  const double f = 1.1, fer = 0.003, q = 0.02;
  const size_t n = 1u << 16;
  VerificationParams params;  // t=50, Pc=1e-10
  double h = binary_entropy(q);
  double manual = (1 - fer) * f + (fer + params.p_collision) / h + 50.0 / (n * h);
  CHECK(effective_efficiency(f, fer, 1, n, q, params) ==
        doctest::Approx(manual).epsilon(1e-12));

  // spec worked example: independent arithmetic route
  double ferc = 1 - std::pow(1 - 0.003, 8);
  double expect = (1 - ferc) * 1.1 + (ferc + 1e-10) / h + 50.0 / (8.0 * n * h);
  CHECK(effective_efficiency(1.1, 0.003, 8, n, q, params) ==
        doctest::Approx(expect).epsilon(1e-12));

  // literal (non-amortized) form is k-independent at fer = 0
  double a = effective_efficiency(1.1, 0.0, 1, n, q, params, false);
  double b = effective_efficiency(1.1, 0.0, 40, n, q, params, false);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));

  // repeat model reduces to the plain form at fer = 0
  CHECK(effective_efficiency_repeat(1.1, 0.0, 8, n, q, params) ==
        doctest::Approx(effective_efficiency(1.1, 0.0, 8, n, q, params)).epsilon(1e-12));
}

TEST_CASE("optimize_cluster: fer = 0 pushes k to the cap") {
  VerificationParams params;
  auto opt = optimize_cluster(1.05, 0.0, 1944, 0.03, params, false, 500);
  CHECK(opt.k == 500);

  // exhaustiveness: no grid point beats the reported minimum
  auto opt2 = optimize_cluster(1.05, 0.01, 1944, 0.03, params, false, 300);
  for (uint32_t k = 1; k <= 300; ++k) {
    CHECK(effective_efficiency(1.05, 0.01, k, 1944, 0.03, params) >=
          opt2.f_eff - 1e-15);
  }

  // higher fer never increases the optimal cluster size
  uint32_t last = UINT32_MAX;
  for (double fer : {1e-4, 1e-3, 1e-2, 0.05, 0.2}) {
    auto o = optimize_cluster(1.05, fer, 1944, 0.03, params, false, 500);
    CHECK(o.k <= last);
    last = o.k;
  }

  CHECK_THROWS_AS(optimize_cluster(1.05, 0.1, 1944, 0.03, params, false, 0),
                  std::invalid_argument);
}

TEST_CASE("optimize_cluster: repeats never hurt and enlarge clusters at low q") {
  VerificationParams params;
  for (double q : {0.01, 0.02, 0.06}) {
    for (double fer : {1e-3, 1e-2, 0.05}) {
      auto plain = optimize_cluster(1.1, fer, 1944, q, params, false, 1000);
      auto rep = optimize_cluster(1.1, fer, 1944, q, params, true, 1000);
      CHECK(rep.f_eff <= plain.f_eff + 1e-12);
      if (q <= 0.02) CHECK(rep.k >= plain.k);
    }
  }
}

TEST_CASE("gf2 field arithmetic") {
  for (unsigned t : {1u, 8u, 16u, 50u, 63u}) {
    GF2Field field(t);
    CHECK(gf2_poly_irreducible(field.modulus(), t));
    Rng rng(t);
    uint64_t a = rng.next_u64() & field.mask();
    uint64_t b = rng.next_u64() & field.mask();
    uint64_t c = rng.next_u64() & field.mask();
    CHECK(field.mul(a, b) == field.mul(b, a));
    CHECK(field.mul(a, field.add(b, c)) ==
          field.add(field.mul(a, b), field.mul(a, c)));
    CHECK(field.mul(a, 1) == a);
    CHECK(field.mul(a, 0) == 0);
  }
  CHECK(gf2_poly_irreducible(0b10011, 4));         // x^4+x+1
  CHECK_FALSE(gf2_poly_irreducible(0b10101, 4));   // x^4+x^2+1 = (x^2+x+1)^2
  CHECK_FALSE(gf2_poly_irreducible(0b10110, 4));   // even: divisible by x
  CHECK_THROWS_AS(GF2Field(0), std::invalid_argument);
  CHECK_THROWS_AS(GF2Field(64), std::invalid_argument);
}

TEST_CASE("verify_cluster basics") {
  Rng rng(3);
  std::vector<BitFrame> alice, bob;
  for (uint64_t i = 0; i < 4; ++i) {
    alice.push_back(BitFrame::random(512, rng, i));
    bob.push_back(alice.back());
  }
  VerificationParams params;
  Session s;
  auto res = verify_cluster(s.alice(), s.bob(), alice, bob, params, 42);
  CHECK(res.pass);
  CHECK(res.leak_ev == 50.0);
  CHECK(s.ledger().leaked_bits == 50);
  CHECK(s.ledger().messages == 2);  // tag + ack

  // one flipped bit fails
  bob[2].flip(100);
  Session s2;
  auto res2 = verify_cluster(s2.alice(), s2.bob(), alice, bob, params, 42);
  CHECK_FALSE(res2.pass);

  std::vector<BitFrame> empty;
  Session s3;
  CHECK_THROWS_AS(verify_cluster(s3.alice(), s3.bob(), empty, empty, params, 1),
                  std::invalid_argument);
}

TEST_CASE("verify_cluster single-bit detection at t=8 is ~1 - 2^-8") {
  // statistical check of the hash property at a small tag size
  VerificationParams params;
  params.tag_bits = 8;
  Rng rng(17);
  const int trials = 3000;
  int missed = 0;
  for (int t = 0; t < trials; ++t) {
    BitFrame a = BitFrame::random(256, rng, static_cast<uint64_t>(t));
    BitFrame b = a;
    b.flip(rng.uniform_below(256));
    GF2Field field(8);
    uint64_t alpha = Rng(9000 + t).derive(0x7A6).next_u64() & field.mask();
    std::vector<BitFrame> ca{a}, cb{b};
    if (cluster_tag(ca, field, alpha) == cluster_tag(cb, field, alpha)) ++missed;
  }
  // P(miss) = 2^-8; 3000 trials -> expect ~11.7, allow 5 sigma
  double expect = trials / 256.0;
  CHECK(missed <= expect + 5 * std::sqrt(expect));
}

TEST_CASE("drift trajectory and estimator study") {
  DriftProcessParams drift;
  drift.chunk_bits = 512;
  QberTrajectory traj = simulate_drift(drift, 4000, 11);
  REQUIRE(traj.q.size() == 4000);
  for (double q : traj.q) {
    CHECK(q >= drift.q_min);
    CHECK(q <= drift.q_max);
  }
  // determinism
  QberTrajectory traj2 = simulate_drift(drift, 4000, 11);
  CHECK(traj.errors == traj2.errors);

  EstimatorStudyConfig cfg;
  cfg.block_size_grid = {2048, 8192, 32768};
  cfg.parallelism = {1, 2, 4};
  auto rows = qber_estimator_study(traj, cfg);
  CHECK(rows.size() == 9);

  EstimatorStudyConfig bad;
  bad.block_size_grid = {1024};
  bad.parallelism = {3};
  CHECK_THROWS_AS(qber_estimator_study(traj, bad), std::invalid_argument);

  EstimatorStudyConfig toobig;
  toobig.block_size_grid = {512u * 4000u};
  toobig.parallelism = {1};
  CHECK_THROWS_AS(qber_estimator_study(traj, toobig), std::invalid_argument);
}

TEST_CASE("constant-q trajectory: MAE shrinks like 1/sqrt(block)") {
  DriftProcessParams drift;
  drift.step_sigma = 0.0;
  drift.mean_reversion = 0.0;
  drift.q_start = drift.q_mean = 0.02;
  drift.chunk_bits = 1024;
  QberTrajectory traj = simulate_drift(drift, 60000, 13);

  EstimatorStudyConfig cfg;
  cfg.block_size_grid = {4096, 65536};
  cfg.parallelism = {1};
  auto rows = qber_estimator_study(traj, cfg);
  REQUIRE(rows.size() == 2);

  // Binomial-variance oracle: MAE of the difference of two independent
  // block estimates is sqrt(2/pi) * sqrt(2 q (1-q) / B).
  for (const auto& row : rows) {
    double pred = std::sqrt(2.0 / M_PI) *
                  std::sqrt(2.0 * 0.02 * 0.98 / static_cast<double>(row.block_size));
    CHECK(row.mae == doctest::Approx(pred).epsilon(0.15));
  }
  CHECK(rows[0].mae > rows[1].mae);
}

TEST_CASE("drifting trajectory: lag hurts, interior block-size optimum") {
  DriftProcessParams drift;  // defaults tuned for a mid-grid optimum
  QberTrajectory traj = simulate_drift(drift, 120000, 7);
  EstimatorStudyConfig cfg;
  for (uint32_t p = 12; p <= 19; ++p) cfg.block_size_grid.push_back(size_t{1} << p);
  cfg.parallelism = {1, 2, 4};
  auto rows = qber_estimator_study(traj, cfg);

  double best_serial = 1e9;
  size_t best_block = 0;
  double first_mae = 0, last_mae = 0;
  for (const auto& r : rows) {
    if (r.parallelism != 1) continue;
    if (r.block_size == cfg.block_size_grid.front() * 1) first_mae = r.mae;
    if (r.block_size == (size_t{1} << 19)) last_mae = r.mae;
    if (r.mae < best_serial) {
      best_serial = r.mae;
      best_block = r.block_size;
    }
  }
  // interior minimum (strictly better than both ends)
  CHECK(best_serial < first_mae);
  CHECK(best_serial < last_mae);
  CHECK(best_block > cfg.block_size_grid.front());
  CHECK(best_block < (size_t{1} << 19));

  // at the optimal serial block size, more parallelism means worse MAE
  double mae1 = 0, mae2 = 0, mae4 = 0;
  for (const auto& r : rows) {
    if (r.block_size != best_block) continue;
    if (r.parallelism == 1) mae1 = r.mae;
    if (r.parallelism == 2) mae2 = r.mae;
    if (r.parallelism == 4) mae4 = r.mae;
  }
  CHECK(mae1 <= mae2 * 1.02);
  CHECK(mae2 <= mae4 * 1.02);
}
