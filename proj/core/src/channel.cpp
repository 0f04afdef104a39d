#include "recon/channel.hpp"

#include <stdexcept>

namespace recon {

BitFrame transmit_bsc(const BitFrame& x, const ChannelParams& params) {
  if (!params.valid())
    throw std::domain_error("transmit_bsc: q must lie in [0, 0.5)");
  BitFrame y = x;
  if (params.q == 0.0) return y;
  Rng rng = Rng(params.seed).derive(0xB5C, x.frame_index());
  for (size_t i = 0; i < x.size(); ++i)
    if (rng.bernoulli(params.q)) y.flip(i);
  return y;
}

}  // namespace recon
