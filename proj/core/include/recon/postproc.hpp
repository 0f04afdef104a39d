#pragma once

#include <cstdint>
#include <span>

#include "recon/bitframe.hpp"
#include "recon/gf2.hpp"
#include "recon/session.hpp"

namespace recon {

struct VerificationParams {
  uint32_t tag_bits = 50;        // t
  double p_collision = 1e-10;

  bool valid() const noexcept {
    return tag_bits > 0 && tag_bits <= 63 && p_collision > 0.0 && p_collision < 1.0;
  }
};

/// 1 - (1 - fer)^k: probability a k-frame cluster contains a bad frame.
double fer_cluster(double fer, uint32_t k);

/// Effective efficiency combining reconciliation leakage, cluster failure,
/// the verification collision bound and the tag cost:
///
///   f_eff = (1 - FERc) f + (FERc + P_coll)/H(q) + t/(k n H(q))
///
/// The tag term is amortized over the k frames of the cluster by default;
/// amortize_tag=false uses the per-EC-frame form t/(n H(q)) instead (which
/// makes f_eff independent of k at FER = 0).
double effective_efficiency(double f, double fer, uint32_t k, size_t n, double q,
                            const VerificationParams& params, bool amortize_tag = true);

/// Same figure under a single repeat request per clustered frame: failed
/// EC frames are corrected a second time (residual failure fer^2), at the
/// cost of fer extra reconciliation leakage per frame and one extra tag
/// per re-verified cluster.
double effective_efficiency_repeat(double f, double fer, uint32_t k, size_t n, double q,
                                   const VerificationParams& params,
                                   bool amortize_tag = true);

struct ClusterOptimum {
  uint32_t k = 1;
  double f_eff = 0.0;
};

/// Exhaustive arg-min of f_eff over k in [1, k_max].
ClusterOptimum optimize_cluster(double f, double fer, size_t n, double q,
                                const VerificationParams& params, bool repeats_allowed,
                                uint32_t k_max, bool amortize_tag = true);

/// Polynomial-evaluation hash of a concatenated cluster over GF(2^t):
/// coefficients are consecutive t-bit chunks, evaluated by Horner with a
/// trailing multiply at the point alpha. Collision probability for
/// distinct clusters of L chunks is at most L / 2^t.
uint64_t cluster_tag(std::span<const BitFrame> frames, const GF2Field& field,
                     uint64_t alpha);

struct ClusterVerifyResult {
  bool pass = false;
  double leak_ev = 0.0;
};

/// Error-verification exchange: Alice sends her t-bit tag, Bob compares
/// and acks. The hash point is derived from event_seed (shared public
/// randomness). leak_ev counts the tag bits.
ClusterVerifyResult verify_cluster(Endpoint& alice_ep, Endpoint& bob_ep,
                                   std::span<const BitFrame> alice_frames,
                                   std::span<const BitFrame> bob_frames,
                                   const VerificationParams& params, uint64_t event_seed);

}  // namespace recon
