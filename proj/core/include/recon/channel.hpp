#pragma once

#include <cstdint>

#include "recon/bitframe.hpp"

namespace recon {

/// Binary symmetric channel parameters. q is the crossover probability;
/// values at or above 0.5 are rejected (the protocols here only operate
/// on the low-error regime anyway).
struct ChannelParams {
  double q = 0.0;
  uint64_t seed = 0;

  bool valid() const noexcept { return q >= 0.0 && q < 0.5; }
};

/// Flip each bit of x independently with probability q. The noise stream
/// is keyed by (seed, frame_index), so retransmitting the same frame with
/// the same parameters reproduces the same output.
BitFrame transmit_bsc(const BitFrame& x, const ChannelParams& params);

}  // namespace recon
