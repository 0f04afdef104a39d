#pragma once

#include <cstdint>
#include <string>

namespace recon {

/// Per-frame outcome row; every harness CSV is an aggregation of these.
/// success is only set after the simulation oracle confirmed Bob's output
/// equals Alice's frame, so success implies residual_errors == 0.
struct ReconciliationReport {
  std::string protocol;
  size_t n = 0;
  double q_true = 0.0;
  double q_hat = 0.0;
  bool success = false;
  size_t residual_errors = 0;
  double leak_ir = 0.0;
  double leak_ev = 0.0;
  uint64_t messages = 0;
  uint64_t rounds = 0;
  uint64_t bytes_on_wire = 0;
  double f = 0.0;
  double f_fer = 0.0;
  uint32_t attempts = 1;
  double simulated_seconds = 0.0;
  double wall_seconds = 0.0;
};

}  // namespace recon
