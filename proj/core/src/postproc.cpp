#include "recon/postproc.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "recon/metrics.hpp"
#include "recon/rng.hpp"

namespace recon {

double fer_cluster(double fer, uint32_t k) {
  if (!(fer >= 0.0 && fer <= 1.0)) throw std::domain_error("fer_cluster: fer outside [0,1]");
  if (k < 1) throw std::domain_error("fer_cluster: k must be >= 1");
  return 1.0 - std::pow(1.0 - fer, static_cast<double>(k));
}

double effective_efficiency(double f, double fer, uint32_t k, size_t n, double q,
                            const VerificationParams& params, bool amortize_tag) {
  if (!(q > 0.0)) throw std::domain_error("effective_efficiency: q must be > 0");
  double h = binary_entropy(q);
  double ferc = fer_cluster(fer, k);
  double tag_div = amortize_tag ? static_cast<double>(k) * n : static_cast<double>(n);
  return (1.0 - ferc) * f + (ferc + params.p_collision) / h +
         static_cast<double>(params.tag_bits) / (tag_div * h);
}

double effective_efficiency_repeat(double f, double fer, uint32_t k, size_t n, double q,
                                   const VerificationParams& params, bool amortize_tag) {
  if (!(q > 0.0)) throw std::domain_error("effective_efficiency_repeat: q must be > 0");
  double h = binary_entropy(q);
  double ferc = fer_cluster(fer, k);
  double ferc2 = fer_cluster(fer * fer, k);  // after one repeat round
  double tag_div = amortize_tag ? static_cast<double>(k) * n : static_cast<double>(n);
  return (1.0 - ferc2) * f * (1.0 + fer) + (ferc2 + params.p_collision) / h +
         static_cast<double>(params.tag_bits) * (1.0 + ferc) / (tag_div * h);
}

ClusterOptimum optimize_cluster(double f, double fer, size_t n, double q,
                                const VerificationParams& params, bool repeats_allowed,
                                uint32_t k_max, bool amortize_tag) {
  if (k_max < 1) throw std::invalid_argument("optimize_cluster: empty search range");
  ClusterOptimum best;
  for (uint32_t k = 1; k <= k_max; ++k) {
    double val = repeats_allowed
                     ? effective_efficiency_repeat(f, fer, k, n, q, params, amortize_tag)
                     : effective_efficiency(f, fer, k, n, q, params, amortize_tag);
    if (k == 1 || val < best.f_eff) best = {k, val};
  }
  return best;
}

uint64_t cluster_tag(std::span<const BitFrame> frames, const GF2Field& field,
                     uint64_t alpha) {
  if (frames.empty()) throw std::invalid_argument("cluster_tag: empty cluster");
  unsigned t = field.degree();
  alpha &= field.mask();
  uint64_t acc = 0;
  uint64_t chunk = 0;
  unsigned filled = 0;
  for (const BitFrame& frame : frames) {
    for (size_t i = 0; i < frame.size(); ++i) {
      chunk |= static_cast<uint64_t>(frame.get(i)) << filled;
      if (++filled == t) {
        acc = field.mul(acc ^ chunk, alpha);
        chunk = 0;
        filled = 0;
      }
    }
  }
  if (filled > 0) acc = field.mul(acc ^ chunk, alpha);
  return acc;
}

ClusterVerifyResult verify_cluster(Endpoint& alice_ep, Endpoint& bob_ep,
                                   std::span<const BitFrame> alice_frames,
                                   std::span<const BitFrame> bob_frames,
                                   const VerificationParams& params, uint64_t event_seed) {
  if (!params.valid()) throw std::invalid_argument("verify_cluster: bad params");
  if (alice_frames.empty() || alice_frames.size() != bob_frames.size())
    throw std::invalid_argument("verify_cluster: cluster shape mismatch");
  for (size_t i = 0; i < alice_frames.size(); ++i)
    if (alice_frames[i].size() != bob_frames[i].size())
      throw std::invalid_argument("verify_cluster: frame length mismatch");

  GF2Field field(params.tag_bits);
  uint64_t alpha = Rng(event_seed).derive(0x7A6).next_u64() & field.mask();

  uint64_t alice_tag = 0, bob_tag = 0;
  bool pass = false;
  std::thread alice_thread([&] {
    alice_tag = cluster_tag(alice_frames, field, alpha);
    Message m;
    m.kind = MessageKind::VerifyTag;
    m.payload_bits = params.tag_bits;
    m.payload.resize((params.tag_bits + 7) / 8);
    for (unsigned i = 0; i < m.payload.size(); ++i)
      m.payload[i] = static_cast<uint8_t>(alice_tag >> (8 * i));
    alice_ep.send(std::move(m));
    alice_ep.receive_flush();  // ack
  });

  auto tag_msgs = bob_ep.receive_flush();
  if (tag_msgs.size() != 1 || tag_msgs[0].kind != MessageKind::VerifyTag)
    throw std::runtime_error("verify_cluster: expected tag");
  uint64_t received = 0;
  for (size_t i = 0; i < tag_msgs[0].payload.size(); ++i)
    received |= static_cast<uint64_t>(tag_msgs[0].payload[i]) << (8 * i);
  bob_tag = cluster_tag(bob_frames, field, alpha);
  pass = received == bob_tag;
  Message ack;
  ack.kind = MessageKind::Ack;
  ack.payload = {static_cast<uint8_t>(pass ? 1 : 0)};
  ack.payload_bits = 0;
  bob_ep.send(std::move(ack));
  alice_thread.join();

  return {pass, static_cast<double>(params.tag_bits)};
}

}  // namespace recon
