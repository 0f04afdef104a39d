#pragma once

#include <cstdint>

namespace recon {

/// Arithmetic in GF(2^t) for 1 <= t <= 63, with the field fixed by the
/// lexicographically smallest irreducible polynomial of degree t (found
/// once per degree by exhaustive test, cached). Elements live in the low
/// t bits of a uint64_t.
class GF2Field {
 public:
  explicit GF2Field(unsigned degree);

  unsigned degree() const noexcept { return t_; }
  /// Reduction polynomial including the x^t term.
  uint64_t modulus() const noexcept { return poly_; }

  uint64_t mul(uint64_t a, uint64_t b) const noexcept;
  uint64_t add(uint64_t a, uint64_t b) const noexcept { return a ^ b; }
  uint64_t mask() const noexcept { return t_ == 63 ? ~uint64_t{0} >> 1 : (uint64_t{1} << t_) - 1; }

 private:
  unsigned t_;
  uint64_t poly_;
};

/// True iff poly (with implicit leading x^deg term included in the word)
/// is irreducible over GF(2). Exposed for the field self-tests.
bool gf2_poly_irreducible(uint64_t poly, unsigned degree);

}  // namespace recon
