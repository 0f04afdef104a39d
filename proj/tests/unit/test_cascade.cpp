#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "recon/cascade.hpp"
#include "recon/channel.hpp"
#include "recon/metrics.hpp"
#include "recon/session.hpp"
#include "recon/transport.hpp"

using namespace recon;

static CascadeConfig test_cfg(uint64_t seed = 1) {
  CascadeConfig cfg;
  cfg.seed = seed;
  return cfg;
}

TEST_CASE("pow2_round") {
  CHECK(pow2_round(50.0, 2, 1u << 30) == 64);   // round(log2 50) = 6
  CHECK(pow2_round(40.0, 2, 1u << 30) == 32);   // round(log2 40) = 5
  CHECK(pow2_round(64.0, 2, 1u << 30) == 64);
  CHECK(pow2_round(1.1, 2, 1u << 30) == 2);
  CHECK(pow2_round(1e12, 2, 4096) == 4096);
  CHECK(pow2_round(-3.0, 2, 64) == 2);
}

TEST_CASE("group posteriors: corrected blocks are cleaner than untouched") {
  for (double q : {0.01, 0.02, 0.05}) {
    uint32_t k1 = pow2_round(1.0 / q, 2, 1u << 20);
    auto post = cascade_group_posteriors(k1, q);
    CHECK(post.touched > 0.0);
    CHECK(post.untouched > 0.0);
    // After removing the found error, an odd block holds fewer expected
    // errors per bit than an even block hiding pairs.
    CHECK(post.touched < post.untouched);
    CHECK(post.untouched < q);
  }
}

TEST_CASE("error-free frame: announcements only, no searches") {
  Rng rng(5);
  const size_t n = 4096;
  BitFrame x = BitFrame::random(n, rng);
  Session s;
  auto rep = cascade_reconcile(s.alice(), s.bob(), x, x, 0.02, test_cfg());

  CHECK(rep.success);
  CHECK(rep.residual_errors == 0);
  CHECK(rep.q_true == 0.0);

  // k1 = pow2(1/0.02) = 64; no touched blocks so iteration 2 falls back to
  // one whole partition at 2*k1, later iterations grow by 8x capped at n/2.
  uint64_t k1 = 64, k2 = 128, k3 = 2048, k4 = 2048;
  uint64_t expect = n / k1 + (n / k2 - 1) + (n / k3 - 1) + (n / k4 - 1);
  CHECK(static_cast<uint64_t>(rep.leak_ir) == expect);
  // 4 OPEN request/reply pairs plus the final DONE
  CHECK(rep.messages == 9);
}

TEST_CASE("single planted error: found with log2(k) parities per level") {
  const size_t n = 32;
  Rng rng(6);
  BitFrame x = BitFrame::random(n, rng);
  BitFrame y = x;
  y.flip(13);

  // q_hat chosen so k1 = 32: one top block covering the frame.
  CascadeConfig cfg = test_cfg();
  Session s;
  auto rep = cascade_reconcile(s.alice(), s.bob(), x, y, 0.03, cfg);

  CHECK(rep.success);
  CHECK(rep.residual_errors == 0);
  // Iteration 1: 1 top parity + 5 search parities. Iterations 2..4 fall
  // back to whole partitions (k=16) announcing 2-1 parities each.
  CHECK(static_cast<uint64_t>(rep.leak_ir) == 1 + 5 + 3 * 1);
  // OPEN pairs (4*2) + search levels (5*2) + DONE
  CHECK(rep.messages == 8 + 10 + 1);
}

TEST_CASE("block of length 1 with mismatch is itself the error") {
  // Frame of 2 bits, k1 = 2, error in the second bit. After the first
  // iteration the search isolates it with exactly one disclosed parity.
  BitFrame x(2);
  x.set(0, true);
  BitFrame y = x;
  y.flip(1);
  CascadeConfig cfg = test_cfg();
  cfg.confidence_split = false;
  Session s;
  auto rep = cascade_reconcile(s.alice(), s.bob(), x, y, 0.4, cfg);
  CHECK(rep.success);
}

TEST_CASE("random frames reconcile and the ledger replays exactly") {
  Rng rng(7);
  int successes = 0;
  double f_sum = 0.0;
  for (uint64_t trial = 0; trial < 10; ++trial) {
    const size_t n = 2048;
    Rng frame_rng = rng.derive(trial);
    BitFrame x = BitFrame::random(n, frame_rng, trial);
    BitFrame y = transmit_bsc(x, {0.03, 1000 + trial});

    Session s;
    BitFrame corrected;
    auto rep = cascade_reconcile(s.alice(), s.bob(), x, y, 0.03, test_cfg(trial),
                                 &corrected);

    if (rep.success) {
      ++successes;
      CHECK(corrected == x);
    }
    CHECK(rep.residual_errors == hamming_distance(x, corrected));
    auto ledger = s.ledger();
    CHECK(replay_leaked_bits(s.transcript()) == ledger.leaked_bits);
    CHECK(static_cast<uint64_t>(rep.leak_ir) == ledger.leaked_bits);
    CHECK(rep.f > 0.0);
    f_sum += rep.f;
  }
  CHECK(successes >= 9);
  // per-frame f fluctuates at this length; the mean obeys the bound
  CHECK(f_sum / 10 > 1.0);
}

TEST_CASE("determinism: identical runs produce identical transcripts") {
  Rng rng(8);
  const size_t n = 4096;
  BitFrame x = BitFrame::random(n, rng);
  BitFrame y = transmit_bsc(x, {0.02, 77});

  auto run = [&](BitFrame* out) {
    Session s;
    auto rep = cascade_reconcile(s.alice(), s.bob(), x, y, 0.02, test_cfg(3), out);
    return std::make_tuple(rep.leak_ir, rep.messages, s.transcript());
  };
  BitFrame c1, c2;
  auto [leak1, msg1, t1] = run(&c1);
  auto [leak2, msg2, t2] = run(&c2);
  CHECK(leak1 == leak2);
  CHECK(msg1 == msg2);
  CHECK(c1 == c2);
  REQUIRE(t1.size() == t2.size());
  for (size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].kind == t2[i].kind);
    CHECK(t1[i].direction == t2[i].direction);
    CHECK(t1[i].payload_bits == t2[i].payload_bits);
  }
}

TEST_CASE("alice-to-bob-only leak accounting coincides here") {
  // Bob never discloses parities in this implementation, so the
  // conservative both-directions count equals the Alice->Bob bound.
  Rng rng(10);
  BitFrame x = BitFrame::random(2048, rng);
  BitFrame y = transmit_bsc(x, {0.03, 5});
  CascadeConfig cfg = test_cfg();
  cfg.count_alice_to_bob_only = true;
  Session s1;
  auto rep1 = cascade_reconcile(s1.alice(), s1.bob(), x, y, 0.03, cfg);
  cfg.count_alice_to_bob_only = false;
  Session s2;
  auto rep2 = cascade_reconcile(s2.alice(), s2.bob(), x, y, 0.03, cfg);
  CHECK(rep1.leak_ir == rep2.leak_ir);
}

TEST_CASE("wave batching cap trades messages, not leakage") {
  Rng rng(12);
  BitFrame x = BitFrame::random(8192, rng);
  BitFrame y = transmit_bsc(x, {0.04, 9});

  CascadeConfig wide = test_cfg(2);
  CascadeConfig narrow = test_cfg(2);
  narrow.max_wave_searches = 8;

  Session s1, s2;
  auto r1 = cascade_reconcile(s1.alice(), s1.bob(), x, y, 0.04, wide);
  auto r2 = cascade_reconcile(s2.alice(), s2.bob(), x, y, 0.04, narrow);
  CHECK(r2.messages > r1.messages);
  CHECK(r1.success);
  CHECK(r2.success);
}

TEST_CASE("cascade over TCP matches the in-memory ledger") {
  Rng rng(13);
  const size_t n = 2048;
  BitFrame x = BitFrame::random(n, rng);
  BitFrame y = transmit_bsc(x, {0.03, 21});
  CascadeConfig cfg = test_cfg(4);

  Session mem;
  auto mem_rep = cascade_reconcile(mem.alice(), mem.bob(), x, y, 0.03, cfg);

  TcpListener listener(0);
  std::unique_ptr<TcpEndpoint> alice_ep;
  std::thread accepter([&] { alice_ep = listener.accept(Direction::AliceToBob); });
  auto bob_ep = tcp_connect("127.0.0.1", listener.port(), Direction::BobToAlice);
  accepter.join();

  std::thread alice_thread([&] { cascade_alice_responder(*alice_ep, x, cfg); });
  BitFrame corrected = y;
  auto tcp_rep = cascade_bob_driver(*bob_ep, corrected, 0.03, cfg);
  alice_thread.join();

  CHECK(corrected == x);
  CHECK(tcp_rep.messages == mem_rep.messages);
  CHECK(tcp_rep.leak_ir == mem_rep.leak_ir);
  CHECK(tcp_rep.bytes_on_wire == mem_rep.bytes_on_wire);
  CHECK(tcp_rep.rounds == mem_rep.rounds);
}
