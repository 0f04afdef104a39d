#include "recon/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace recon {

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("binary_entropy: p must lie in [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double qber(const BitFrame& x, const BitFrame& y) {
  if (x.size() != y.size()) throw std::invalid_argument("qber: length mismatch");
  return static_cast<double>(hamming_distance(x, y)) / static_cast<double>(x.size());
}

EfficiencyRecord efficiency_metrics(double leak_ir, size_t n, double q, double fer) {
  if (!(q > 0.0)) throw std::domain_error("efficiency_metrics: q must be > 0");
  if (leak_ir < 0.0) throw std::invalid_argument("efficiency_metrics: leak_ir < 0");
  double h = binary_entropy(q);
  EfficiencyRecord rec;
  rec.leak_ir = leak_ir;
  rec.n = n;
  rec.q = q;
  rec.f = leak_ir / (static_cast<double>(n) * h);
  rec.f_fer = (1.0 - fer) * rec.f + fer / h;
  rec.beta = beta_from_f(rec.f, q);
  return rec;
}

double beta_from_f(double f, double q) {
  double h = binary_entropy(q);
  return (1.0 - f * h) / (1.0 - h);
}

double f_from_beta(double beta, double q) {
  double h = binary_entropy(q);
  return (1.0 - beta * (1.0 - h)) / h;
}

double leak_per_bit(double f, double q) { return f * binary_entropy(q); }

}  // namespace recon
