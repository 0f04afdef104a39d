#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recon/bitframe.hpp"
#include "recon/ldpc/matrix.hpp"

namespace recon::ldpc {

/// LLR sign convention used across the project: positive means bit 0 is
/// more likely, L = log(P(0)/P(1)). Punctured positions enter with 0.0,
/// shortened/revealed positions with +/- kLlrSaturation.
inline constexpr double kLlrSaturation = 25.0;

/// Channel LLR magnitude for a BSC at crossover probability q.
double bsc_llr_magnitude(double q);

struct DecodeResult {
  BitFrame hard;                   // hard decision, length N
  bool converged = false;          // syndrome(hard) == target within budget
  uint32_t iterations = 0;         // iterations actually run
  std::vector<double> posteriors;  // per-column posterior LLR
};

/// Syndrome-aware sum-product decoding: check nodes enforce the parity
/// given by target_syndrome. Check updates use the pairwise boxplus in
/// its numerically stable log form; edge messages are clamped to
/// +/- kLlrSaturation. Non-convergence is a reported state, not an error.
DecodeResult spa_decode(const ParityCheckMatrix& matrix, std::span<const double> llr_init,
                        const BitFrame& target_syndrome, uint32_t max_iterations = 50);

}  // namespace recon::ldpc
