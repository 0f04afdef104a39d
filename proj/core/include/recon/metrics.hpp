#pragma once

#include <cstddef>

#include "recon/bitframe.hpp"

namespace recon {

/// H(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
/// Throws std::domain_error outside [0,1].
double binary_entropy(double p);

/// Symbol error rate between two equal-length frames.
double qber(const BitFrame& x, const BitFrame& y);

/// Leakage bookkeeping for one reconciliation outcome.
///
/// f       = leak_ir / (n H(q))
/// f_fer   = (1 - fer) f + fer / H(q)
/// beta    solves beta (1 - H(q)) = 1 - f H(q)   (uniform keys, H(X) = 1)
struct EfficiencyRecord {
  double leak_ir = 0.0;
  double leak_ev = 0.0;
  size_t n = 0;
  double q = 0.0;
  double f = 0.0;
  double f_fer = 0.0;
  double beta = 0.0;
};

/// Fills the record from leakage and frame-error rate. q must be > 0,
/// otherwise the efficiency is undefined and std::domain_error is thrown.
EfficiencyRecord efficiency_metrics(double leak_ir, size_t n, double q, double fer);

double beta_from_f(double f, double q);
double f_from_beta(double beta, double q);

/// f * H(q): information leaked per processed key bit. Values above 1.0
/// mean no secret key is extractable even asymptotically.
double leak_per_bit(double f, double q);

}  // namespace recon
