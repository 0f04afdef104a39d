#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace recon {

/// Philox4x32-10 counter-based generator.
///
/// Chosen over std::mt19937 etc. because the output stream is fully defined
/// by (seed, stream, counter) and identical on every platform and compiler,
/// which makes whole experiment grids replayable bit-for-bit. All sampling
/// helpers below are hand-rolled for the same reason: the std <random>
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) noexcept;

  /// Independent generator for a labelled substream (same seed).
  /// Mixing is a fixed splitmix64 chain, so derive(a).derive(b) is stable.
  [[nodiscard]] Rng derive(uint64_t label) const noexcept;
  [[nodiscard]] Rng derive(uint64_t a, uint64_t b) const noexcept;

  uint32_t next_u32() noexcept;
  uint64_t next_u64() noexcept;

  /// Uniform in [0,1) with 53 random bits.
  double uniform_double() noexcept;

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  uint64_t uniform_below(uint64_t bound) noexcept;

  bool bernoulli(double p) noexcept { return uniform_double() < p; }

  /// Standard normal via Box-Muller (deterministic, no rejection).
  double normal() noexcept;

  /// Fisher-Yates shuffle with uniform_below; stable across platforms.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// k distinct values from [0, n), in selection order.
  std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k);

  /// Raw Philox4x32-10 block function (exposed for known-answer tests).
  static std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                            const std::array<uint32_t, 2>& key) noexcept;

  uint64_t seed() const noexcept { return seed_; }
  uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  std::array<uint32_t, 4> block_{};
  int block_pos_ = 4;  // empty
};

}  // namespace recon
