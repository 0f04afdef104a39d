#include "recon/gf2.hpp"

#include <array>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace recon {

namespace {

using u128 = unsigned __int128;

uint64_t pmulmod(uint64_t a, uint64_t b, uint64_t f, unsigned t) {
  u128 acc = 0;
  u128 aa = a;
  while (b) {
    if (b & 1) acc ^= aa;
    aa <<= 1;
    b >>= 1;
  }
  // inputs may carry the x^t term (e.g. the plain polynomial x at t = 1),
  // so reduce from the full possible product degree
  for (int bit = 127; bit >= static_cast<int>(t); --bit)
    if ((acc >> bit) & 1) acc ^= static_cast<u128>(f) << (bit - t);
  return static_cast<uint64_t>(acc);
}

int poly_degree(uint64_t p) {
  int d = -1;
  while (p) {
    ++d;
    p >>= 1;
  }
  return d;
}

uint64_t poly_gcd(uint64_t a, uint64_t b) {
  while (b != 0) {
    int db = poly_degree(b);
    while (a != 0 && poly_degree(a) >= db) a ^= b << (poly_degree(a) - db);
    std::swap(a, b);  // (b, a mod b)
  }
  return a;
}

std::array<uint64_t, 64> g_poly_cache{};
std::mutex g_poly_mutex;

}  // namespace

bool gf2_poly_irreducible(uint64_t poly, unsigned degree) {
  if (degree == 0 || !(poly & 1)) return false;  // x | poly otherwise
  if (degree == 1) return poly == 3;             // x + 1 (x itself has no constant term)
  // Ben-Or: x^(2^t) == x mod f, and gcd(x^(2^(t/p)) - x, f) = 1 for every
  // prime p dividing t.
  uint64_t pow = 2;  // the polynomial x
  for (unsigned i = 1; i <= degree; ++i) {
    pow = pmulmod(pow, pow, poly, degree);
    if (i < degree && degree % i == 0) {
      unsigned p = degree / i;
      bool p_prime = p >= 2;
      for (unsigned d = 2; d * d <= p && p_prime; ++d)
        if (p % d == 0) p_prime = false;
      if (p_prime && poly_gcd(pow ^ 2, poly) != 1) return false;
    }
  }
  return pow == 2;
}

GF2Field::GF2Field(unsigned degree) : t_(degree) {
  if (degree < 1 || degree > 63)
    throw std::invalid_argument("GF2Field: degree must lie in [1, 63]");
  std::lock_guard<std::mutex> lock(g_poly_mutex);
  if (g_poly_cache[degree] != 0) {
    poly_ = g_poly_cache[degree];
    return;
  }
  uint64_t base = uint64_t{1} << degree;
  for (uint64_t low = 1;; low += 2) {
    if (low >= base) throw std::logic_error("GF2Field: no irreducible found");
    if (gf2_poly_irreducible(base | low, degree)) {
      poly_ = base | low;
      break;
    }
  }
  g_poly_cache[degree] = poly_;
}

uint64_t GF2Field::mul(uint64_t a, uint64_t b) const noexcept {
  return pmulmod(a & mask(), b & mask(), poly_, t_);
}

}  // namespace recon
