#include "recon/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace recon {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) noexcept {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

inline std::array<uint32_t, 4> round_once(const std::array<uint32_t, 4>& x,
                                          const std::array<uint32_t, 2>& k) noexcept {
  uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kPhiloxM0, x[0], hi0, lo0);
  mulhilo(kPhiloxM1, x[2], hi1, lo1);
  return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

inline uint64_t splitmix64(uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<uint32_t, 4> Rng::philox4x32(const std::array<uint32_t, 4>& counter,
                                        const std::array<uint32_t, 2>& key) noexcept {
  std::array<uint32_t, 4> x = counter;
  std::array<uint32_t, 2> k = key;
  x = round_once(x, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
    x = round_once(x, k);
  }
  return x;
}

Rng::Rng(uint64_t seed, uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

Rng Rng::derive(uint64_t label) const noexcept {
  return Rng(seed_, splitmix64(stream_ ^ splitmix64(label)));
}

Rng Rng::derive(uint64_t a, uint64_t b) const noexcept { return derive(a).derive(b); }

void Rng::refill() noexcept {
  std::array<uint32_t, 4> ctr = {
      static_cast<uint32_t>(counter_), static_cast<uint32_t>(counter_ >> 32),
      static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
  std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_),
                                 static_cast<uint32_t>(seed_ >> 32)};
  block_ = philox4x32(ctr, key);
  ++counter_;
  block_pos_ = 0;
}

uint32_t Rng::next_u32() noexcept {
  if (block_pos_ >= 4) refill();
  return block_[block_pos_++];
}

uint64_t Rng::next_u64() noexcept {
  uint64_t lo = next_u32();
  uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Rng::uniform_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_below(uint64_t bound) noexcept {
  // Bitmask rejection: unbiased and platform-stable.
  uint64_t mask = ~uint64_t{0};
  int bits = 64;
  while (bits > 1 && (bound - 1) >> (bits - 1) == 0) {
    --bits;
    mask >>= 1;
  }
  for (;;) {
    uint64_t v = next_u64() & mask;
    if (v < bound) return v;
  }
}

double Rng::normal() noexcept {
  double u1 = uniform_double();
  double u2 = uniform_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<uint32_t> Rng::sample_without_replacement(uint32_t n, uint32_t k) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
  std::vector<uint32_t> pool(n);
  for (uint32_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<uint32_t> out(k);
  for (uint32_t i = 0; i < k; ++i) {
    uint32_t j = i + static_cast<uint32_t>(uniform_below(n - i));
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

}  // namespace recon
