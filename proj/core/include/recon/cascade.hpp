#pragma once

#include <cstdint>

#include "recon/bitframe.hpp"
#include "recon/session.hpp"

namespace recon {

/// Tuning knobs for the efficient Cascade variant. All block sizes are
/// powers of two; iteration 1 blocks the frame in natural order, later
/// iterations permute first. Iteration 2 optionally splits the frame into
/// two groups by whether a bit sat in a block where an error was corrected
/// in iteration 1; each group gets a block size matched to its modelled
/// residual error rate.
struct CascadeConfig {
  uint32_t iterations = 4;

  /// k1 = round-to-power-of-two(k1_constant / q_hat).
  double k1_constant = 1.0;

  bool confidence_split = true;
  /// Per-group iteration-2 sizing: k_group = pow2(group_constant / q_group),
  /// with q_group the binomial posterior residual rate of the group.
  double group_constant = 1.4;

  /// k_i = pow2(k1 * growth_factor^(i-1)) for iterations >= 3, capped at
  /// min(n/2, late_block_cap).
  double growth_factor = 8.0;

  /// Upper bound on late-iteration block size. Costs a few announcement
  /// bits per iteration but keeps residual error pairs from riding the
  /// same block through every late iteration.
  uint32_t late_block_cap = 4096;

  /// Cap on concurrently batched binary searches; 0 = unbounded. Smaller
  /// batches mean more (but smaller) messages for the same leakage.
  uint32_t max_wave_searches = 128;

  /// Shared permutation seed; both parties derive identical partitions.
  uint64_t seed = 1;

  /// When set, leak_ir counts only Alice->Bob parities instead of every
  /// disclosed parity. Coincides with the default here because Bob answers
  /// with block selections, never with his own parities.
  bool count_alice_to_bob_only = false;

  bool valid() const noexcept {
    return iterations >= 2 && k1_constant > 0 && group_constant > 0 &&
           growth_factor >= 1.0 && late_block_cap >= 2;
  }
};

/// Round x to the nearest power of two (ties go up), clamped to [lo, hi].
uint32_t pow2_round(double x, uint32_t lo, uint32_t hi);

/// Residual error rates after iteration 1 under a Binomial(k1, q) model:
/// corrected blocks keep E[X-1 | X odd] errors, untouched blocks hide
/// E[X | X even]. Both parties evaluate this identically from q_hat.
struct GroupPosteriors {
  double touched;
  double untouched;
};
GroupPosteriors cascade_group_posteriors(uint32_t k1, double q_hat);

/// Run one Cascade reconciliation across a pair of endpoints. Alice's
/// responder is served on an internal thread; the caller's thread drives
/// Bob. The returned report carries oracle-checked residual errors (x is
/// available in simulation) with f computed against the realized QBER.
/// If corrected_out is non-null it receives Bob's final frame.
ReconciliationReport cascade_reconcile(Endpoint& alice_ep, Endpoint& bob_ep,
                                       const BitFrame& x, const BitFrame& y,
                                       double q_hat, const CascadeConfig& cfg,
                                       BitFrame* corrected_out = nullptr);

/// Bob's driver only, for running against a remote Alice (e.g. over TCP).
/// Residuals cannot be oracle-checked in this mode; the report's success
/// flag is left false and residual_errors is set to SIZE_MAX.
ReconciliationReport cascade_bob_driver(Endpoint& bob_ep, BitFrame& y, double q_hat,
                                        const CascadeConfig& cfg);

/// Alice's responder loop: answers parity queries until DONE.
void cascade_alice_responder(Endpoint& alice_ep, const BitFrame& x,
                             const CascadeConfig& cfg);

}  // namespace recon
