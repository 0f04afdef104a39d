#include "recon/ldpc/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recon::ldpc {

double bsc_llr_magnitude(double q) {
  if (!(q > 0.0 && q < 0.5))
    throw std::domain_error("bsc_llr_magnitude: q must lie in (0, 0.5)");
  return std::log((1.0 - q) / q);
}

namespace {

inline double boxplus(double a, double b) {
  // log((1+e^{a+b})/(e^a+e^b)) evaluated without overflow.
  double sign = (a < 0) == (b < 0) ? 1.0 : -1.0;
  double aa = std::fabs(a), ab = std::fabs(b);
  double m = std::min(aa, ab);
  return sign * m + std::log1p(std::exp(-(aa + ab))) -
         std::log1p(std::exp(-std::fabs(aa - ab)));
}

inline double clamp_llr(double x) {
  return std::clamp(x, -kLlrSaturation, kLlrSaturation);
}

}  // namespace

DecodeResult spa_decode(const ParityCheckMatrix& matrix, std::span<const double> llr_init,
                        const BitFrame& target_syndrome, uint32_t max_iterations) {
  const uint32_t n = matrix.cols();
  const uint32_t m = matrix.rows();
  if (llr_init.size() != n) throw std::invalid_argument("spa_decode: llr length != N");
  if (target_syndrome.size() != m)
    throw std::invalid_argument("spa_decode: syndrome length != m");

  const size_t edges = matrix.edge_count();
  std::vector<double> v2c(edges), c2v(edges, 0.0);
  for (size_t e = 0; e < edges; ++e)
    v2c[e] = clamp_llr(llr_init[matrix.col_of_edge()[e]]);

  uint32_t max_row_deg = 0;
  for (uint32_t r = 0; r < m; ++r) max_row_deg = std::max(max_row_deg, matrix.row_degree(r));
  std::vector<double> fwd(max_row_deg), bwd(max_row_deg);

  DecodeResult res;
  res.hard = BitFrame(n);
  res.posteriors.assign(n, 0.0);
  auto row_ptr = matrix.row_ptr();

  for (uint32_t iter = 1; iter <= max_iterations; ++iter) {
    res.iterations = iter;

    // Check-node update with the syndrome sign folded in.
    for (uint32_t r = 0; r < m; ++r) {
      uint32_t lo = row_ptr[r], deg = row_ptr[r + 1] - lo;
      if (deg == 1) {
        c2v[lo] = target_syndrome.get(r) ? -kLlrSaturation : kLlrSaturation;
        continue;
      }
      fwd[0] = v2c[lo];
      for (uint32_t j = 1; j < deg; ++j) fwd[j] = boxplus(fwd[j - 1], v2c[lo + j]);
      bwd[deg - 1] = v2c[lo + deg - 1];
      for (uint32_t j = deg - 1; j-- > 0;) bwd[j] = boxplus(bwd[j + 1], v2c[lo + j]);
      double sign = target_syndrome.get(r) ? -1.0 : 1.0;
      c2v[lo] = sign * bwd[1];
      c2v[lo + deg - 1] = sign * fwd[deg - 2];
      for (uint32_t j = 1; j + 1 < deg; ++j)
        c2v[lo + j] = sign * boxplus(fwd[j - 1], bwd[j + 1]);
    }

    // Variable-node update, posteriors and hard decision.
    for (uint32_t c = 0; c < n; ++c) {
      double total = llr_init[c];
      for (uint32_t e : matrix.col_edges(c)) total += c2v[e];
      res.posteriors[c] = total;
      res.hard.set(c, total < 0.0);
      for (uint32_t e : matrix.col_edges(c)) v2c[e] = clamp_llr(total - c2v[e]);
    }

    if (matrix.syndrome(res.hard) == target_syndrome) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace recon::ldpc
