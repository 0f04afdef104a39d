#include "recon/bitframe.hpp"

#include <bit>
#include <stdexcept>

namespace recon {

BitFrame::BitFrame(size_t length, uint64_t frame_index)
    : words_((length + 63) / 64, 0), length_(length), frame_index_(frame_index) {
  if (length == 0) throw std::invalid_argument("BitFrame: length must be > 0");
}

BitFrame BitFrame::random(size_t length, Rng& rng, uint64_t frame_index) {
  BitFrame f(length, frame_index);
  for (auto& w : f.words_) w = rng.next_u64();
  size_t tail = length & 63;
  if (tail != 0) f.words_.back() &= (uint64_t{1} << tail) - 1;
  return f;
}

bool BitFrame::parity() const noexcept {
  uint64_t acc = 0;
  for (uint64_t w : words_) acc ^= w;
  return std::popcount(acc) & 1;
}

bool BitFrame::parity_range(size_t lo, size_t hi) const noexcept {
  if (lo >= hi) return false;
  size_t wlo = lo >> 6, whi = (hi - 1) >> 6;
  uint64_t first_mask = ~uint64_t{0} << (lo & 63);
  uint64_t last_mask = (hi & 63) ? ((uint64_t{1} << (hi & 63)) - 1) : ~uint64_t{0};
  if (wlo == whi) return std::popcount(words_[wlo] & first_mask & last_mask) & 1;
  uint64_t acc = words_[wlo] & first_mask;
  for (size_t w = wlo + 1; w < whi; ++w) acc ^= words_[w];
  int c = std::popcount(acc) + std::popcount(words_[whi] & last_mask);
  return c & 1;
}

size_t BitFrame::popcount() const noexcept {
  size_t c = 0;
  for (uint64_t w : words_) c += static_cast<size_t>(std::popcount(w));
  return c;
}

void BitFrame::xor_with(const BitFrame& other) {
  if (length_ != other.length_)
    throw std::invalid_argument("BitFrame::xor_with: length mismatch");
  for (size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
}

std::vector<uint8_t> BitFrame::to_bytes() const {
  std::vector<uint8_t> out((length_ + 7) / 8);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<uint8_t>(words_[i >> 3] >> ((i & 7) * 8));
  return out;
}

BitFrame BitFrame::from_bytes(std::span<const uint8_t> bytes, size_t length,
                              uint64_t frame_index) {
  if (bytes.size() < (length + 7) / 8)
    throw std::invalid_argument("BitFrame::from_bytes: not enough bytes");
  BitFrame f(length, frame_index);
  for (size_t i = 0; i < (length + 7) / 8; ++i)
    f.words_[i >> 3] |= static_cast<uint64_t>(bytes[i]) << ((i & 7) * 8);
  size_t tail = length & 63;
  if (tail != 0) f.words_.back() &= (uint64_t{1} << tail) - 1;
  return f;
}

size_t hamming_distance(const BitFrame& a, const BitFrame& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming_distance: length mismatch");
  size_t d = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (size_t i = 0; i < wa.size(); ++i)
    d += static_cast<size_t>(std::popcount(wa[i] ^ wb[i]));
  return d;
}

}  // namespace recon
