#pragma once

#include <cstdint>
#include <vector>

#include "recon/bitframe.hpp"
#include "recon/ldpc/codeset.hpp"
#include "recon/session.hpp"

namespace recon::blind {

struct BlindConfig {
  double alpha = 1.0;      // reveal-step size
  double f_design = 1.1;   // base-code selection target
  double f_max = 3.0;      // give up once leak_ir exceeds f_max * n * H(q_hat)
  uint32_t decoder_iterations = 50;
  /// When set, v is recomputed each round from the current adapted rate
  /// instead of the base rate.
  bool v_uses_adapted_rate = false;
  uint64_t seed = 1;  // keys Alice's filler bits for the modulated positions
  /// Calibration hook: bypass base-code selection (-1 = use the rule).
  int32_t force_code_index = -1;

  bool valid() const noexcept {
    return alpha > 0.0 && f_design >= 1.0 && f_max > 0.0 && decoder_iterations > 0;
  }
};

/// (N - m - s) / (N - p - s); throws on a non-positive denominator.
double adapted_rate(uint32_t frame_size, uint32_t syndrome_len, uint32_t punctured,
                    uint32_t shortened);

/// v = ceil(n * (0.028 - 0.02 R) * alpha); requires 0 < R < 1, alpha > 0.
uint64_t reveal_count(uint32_t n, double rate, double alpha);

/// Bookkeeping for the d reserved columns. p + s == d at all times.
struct RateAdaptationPlan {
  std::vector<uint32_t> positions;  // sorted modulated columns
  uint32_t punctured = 0;
  uint32_t shortened = 0;

  uint32_t d() const noexcept { return static_cast<uint32_t>(positions.size()); }
};

/// Session-level rate-adaptation state shared by the reports and tests.
struct BlindSessionState {
  size_t code_index = 0;
  double alpha = 1.0;
  uint64_t k_revealed = 0;
  uint32_t attempts = 0;
  RateAdaptationPlan plan;

  /// leak_IR = ceil(n (1 - R_adapted)) + k_revealed, which reduces to
  /// m - p + k_revealed when p + s = d and N = n + d.
  double leak_ir(uint32_t syndrome_len) const noexcept {
    return static_cast<double>(syndrome_len) - static_cast<double>(plan.punctured) +
           static_cast<double>(k_revealed);
  }
};

/// Picks count positions with the smallest |posterior|: punctured
/// modulated positions first, then unrevealed key positions (these become
/// k_revealed). Returns extended-frame indices, orderd by confidence.
std::vector<uint32_t> select_reveal_positions(
    const std::vector<double>& posteriors, const std::vector<uint8_t>& punctured_mask,
    const std::vector<uint8_t>& revealable_key_mask, uint64_t count);

/// Full Blind reconciliation across a pair of endpoints (Alice served on an
/// internal thread). Both parties derive the base code from q_hat and the
/// shared code set. Bob's recovered key is oracle-checked against x; the
/// corrected frame is written to corrected_out when non-null.
ReconciliationReport blind_reconcile(Endpoint& alice_ep, Endpoint& bob_ep,
                                     const BitFrame& x, const BitFrame& y, double q_hat,
                                     const ldpc::CodeSet& code_set, const BlindConfig& cfg,
                                     BitFrame* corrected_out = nullptr,
                                     BlindSessionState* state_out = nullptr);

/// Bob's driver alone (e.g. against a remote Alice over TCP). No oracle:
/// success reflects decoder convergence only.
ReconciliationReport blind_bob_driver(Endpoint& bob_ep, const BitFrame& y, double q_hat,
                                      const ldpc::CodeSet& code_set,
                                      const BlindConfig& cfg, BitFrame* recovered_out,
                                      BlindSessionState* state_out = nullptr);

/// Alice's responder: sends the syndrome, answers reveal requests until
/// the peer closes the conversation.
void blind_alice_responder(Endpoint& alice_ep, const BitFrame& x, double q_hat,
                           const ldpc::CodeSet& code_set, const BlindConfig& cfg);

}  // namespace recon::blind
