#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recon/rng.hpp"

namespace recon {

/// Fixed-length binary key material. Bits are packed into 64-bit words,
/// index order = bit order, least significant bit first within a word;
/// all operations are defined on logical indices.
class BitFrame {
 public:
  BitFrame() = default;
  explicit BitFrame(size_t length, uint64_t frame_index = 0);

  static BitFrame random(size_t length, Rng& rng, uint64_t frame_index = 0);

  size_t size() const noexcept { return length_; }
  uint64_t frame_index() const noexcept { return frame_index_; }
  void set_frame_index(uint64_t idx) noexcept { frame_index_ = idx; }

  bool get(size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(size_t i, bool v) noexcept {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  void flip(size_t i) noexcept { words_[i >> 6] ^= uint64_t{1} << (i & 63); }

  /// XOR of all bits.
  bool parity() const noexcept;

  /// XOR of bits in [lo, hi).
  bool parity_range(size_t lo, size_t hi) const noexcept;

  size_t popcount() const noexcept;

  void xor_with(const BitFrame& other);

  std::span<const uint64_t> words() const noexcept { return words_; }

  /// Packed little-endian bytes, length ceil(size/8); trailing bits zero.
  std::vector<uint8_t> to_bytes() const;
  static BitFrame from_bytes(std::span<const uint8_t> bytes, size_t length,
                             uint64_t frame_index = 0);

  bool operator==(const BitFrame& other) const noexcept {
    return length_ == other.length_ && words_ == other.words_;
  }

 private:
  std::vector<uint64_t> words_;
  size_t length_ = 0;
  uint64_t frame_index_ = 0;
};

/// Number of positions where a and b differ. Lengths must match.
size_t hamming_distance(const BitFrame& a, const BitFrame& b);

}  // namespace recon
