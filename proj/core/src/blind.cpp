#include "recon/blind.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "recon/ldpc/decoder.hpp"
#include "recon/metrics.hpp"
#include "recon/rng.hpp"

namespace recon::blind {

double adapted_rate(uint32_t frame_size, uint32_t syndrome_len, uint32_t punctured,
                    uint32_t shortened) {
  int64_t den = static_cast<int64_t>(frame_size) - punctured - shortened;
  if (den <= 0) throw std::domain_error("adapted_rate: non-positive denominator");
  int64_t num = static_cast<int64_t>(frame_size) - syndrome_len - shortened;
  return static_cast<double>(num) / static_cast<double>(den);
}

uint64_t reveal_count(uint32_t n, double rate, double alpha) {
  if (!(rate > 0.0 && rate < 1.0))
    throw std::domain_error("reveal_count: rate must lie in (0,1)");
  if (!(alpha > 0.0)) throw std::domain_error("reveal_count: alpha must be > 0");
  double v = std::ceil(static_cast<double>(n) * (0.028 - 0.02 * rate) * alpha);
  return v < 1.0 ? 1 : static_cast<uint64_t>(v);
}

std::vector<uint32_t> select_reveal_positions(
    const std::vector<double>& posteriors, const std::vector<uint8_t>& punctured_mask,
    const std::vector<uint8_t>& revealable_key_mask, uint64_t count) {
  auto rank = [&](const std::vector<uint8_t>& mask) {
    std::vector<uint32_t> idx;
    for (uint32_t i = 0; i < mask.size(); ++i)
      if (mask[i]) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
      double pa = std::fabs(posteriors[a]), pb = std::fabs(posteriors[b]);
      return pa != pb ? pa < pb : a < b;
    });
    return idx;
  };

  std::vector<uint32_t> out;
  for (uint32_t i : rank(punctured_mask)) {
    if (out.size() >= count) return out;
    out.push_back(i);
  }
  for (uint32_t i : rank(revealable_key_mask)) {
    if (out.size() >= count) return out;
    out.push_back(i);
  }
  if (out.empty()) throw std::runtime_error("blind: nothing left to reveal");
  return out;
}

namespace {

constexpr uint64_t kFillerLabel = 0xF111;

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 24));
}

uint32_t get_u32(const uint8_t* p) {
  return uint32_t{p[0]} | (uint32_t{p[1]} << 8) | (uint32_t{p[2]} << 16) |
         (uint32_t{p[3]} << 24);
}

/// Alice's extended frame x': key bits in order at the non-modulated
/// columns, seeded filler at the modulated ones.
BitFrame extend_frame(const BitFrame& key, const ldpc::BlindCode& code,
                      uint32_t frame_size, uint64_t seed) {
  BitFrame ext(frame_size, key.frame_index());
  std::vector<uint8_t> is_mod(frame_size, 0);
  for (uint32_t c : code.modulated) is_mod[c] = 1;
  Rng filler = Rng(seed).derive(kFillerLabel, key.frame_index());
  size_t k = 0;
  for (uint32_t c = 0; c < frame_size; ++c) {
    if (is_mod[c])
      ext.set(c, filler.bernoulli(0.5));
    else
      ext.set(c, key.get(k++));
  }
  return ext;
}

}  // namespace

void blind_alice_responder(Endpoint& alice_ep, const BitFrame& x, double q_hat,
                           const ldpc::CodeSet& code_set, const BlindConfig& cfg) {
  size_t code_idx = cfg.force_code_index >= 0
                        ? static_cast<size_t>(cfg.force_code_index)
                        : code_set.select(q_hat, cfg.f_design);
  const ldpc::BlindCode& code = code_set.code(code_idx);
  BitFrame ext = extend_frame(x, code, code_set.frame_size(), cfg.seed);
  BitFrame syn = code.matrix->syndrome(ext);

  Message msg;
  msg.kind = MessageKind::Syndrome;
  msg.payload_bits = syn.size();
  msg.payload = syn.to_bytes();
  alice_ep.send(std::move(msg));

  try {
    for (;;) {
      auto req = alice_ep.receive_flush();
      if (req.size() != 1 || req[0].kind != MessageKind::RevealRequest ||
          req[0].payload.size() < 4)
        throw std::runtime_error("blind alice: unexpected message");
      const uint8_t* p = req[0].payload.data();
      uint32_t count = get_u32(p);
      if (req[0].payload.size() != 4 + size_t{count} * 4)
        throw std::runtime_error("blind alice: bad request payload");
      std::vector<uint8_t> values((count + 7) / 8, 0);
      for (uint32_t i = 0; i < count; ++i) {
        uint32_t pos = get_u32(p + 4 + i * 4);
        if (pos >= ext.size()) throw std::runtime_error("blind alice: position out of range");
        if (ext.get(pos)) values[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
      }
      Message reply;
      reply.kind = MessageKind::RevealValues;
      reply.payload_bits = count;
      reply.payload = std::move(values);
      alice_ep.send(std::move(reply));
    }
  } catch (const EndpointClosed&) {
    // conversation over
  }
}

ReconciliationReport blind_bob_driver(Endpoint& bob_ep, const BitFrame& y, double q_hat,
                                      const ldpc::CodeSet& code_set,
                                      const BlindConfig& cfg, BitFrame* recovered_out,
                                      BlindSessionState* state_out) {
  if (!cfg.valid()) throw std::invalid_argument("blind: invalid config");
  if (!(q_hat > 0.0 && q_hat < 0.5))
    throw std::invalid_argument("blind: q_hat must lie in (0, 0.5)");
  const uint32_t frame_size = code_set.frame_size();
  const uint32_t n = static_cast<uint32_t>(y.size());
  if (n + code_set.d() != frame_size)
    throw std::invalid_argument("blind: key length must be N - d");

  LeakLedger before = bob_ep.ledger();
  auto t0 = std::chrono::steady_clock::now();

  BlindSessionState st;
  st.code_index = cfg.force_code_index >= 0
                      ? static_cast<size_t>(cfg.force_code_index)
                      : code_set.select(q_hat, cfg.f_design);
  st.alpha = cfg.alpha;
  const ldpc::BlindCode& code = code_set.code(st.code_index);
  const ldpc::ParityCheckMatrix& H = *code.matrix;
  const uint32_t m = H.rows();
  st.plan.positions = code.modulated;
  st.plan.punctured = st.plan.d();
  st.plan.shortened = 0;

  // Bob's extended-side llr: key bits at the code's design point,
  // punctured positions at zero information. Keyed to the code, not to
  // q_hat, so the whole transcript is invariant under estimate changes
  // that keep the same base code.
  double mag = ldpc::bsc_llr_magnitude(std::min(0.49, std::max(1e-4, code.design_q)));
  std::vector<double> llr(frame_size, 0.0);
  std::vector<uint8_t> punctured_mask(frame_size, 0);
  std::vector<uint8_t> key_mask(frame_size, 0);  // unrevealed key positions
  {
    std::vector<uint8_t> is_mod(frame_size, 0);
    for (uint32_t c : code.modulated) is_mod[c] = 1;
    size_t k = 0;
    for (uint32_t c = 0; c < frame_size; ++c) {
      if (is_mod[c]) {
        punctured_mask[c] = 1;
      } else {
        key_mask[c] = 1;
        llr[c] = y.get(k++) ? -mag : mag;
      }
    }
  }

  auto syn_msgs = bob_ep.receive_flush();
  if (syn_msgs.size() != 1 || syn_msgs[0].kind != MessageKind::Syndrome)
    throw std::runtime_error("blind bob: expected syndrome");
  BitFrame target = BitFrame::from_bytes(syn_msgs[0].payload, m);

  const double give_up_leak =
      cfg.f_max * static_cast<double>(n) * binary_entropy(q_hat);

  ldpc::DecodeResult dec;
  bool solved = false;
  bool aborted = false;
  for (;;) {
    dec = ldpc::spa_decode(H, llr, target, cfg.decoder_iterations);
    st.attempts++;
    if (dec.converged) {
      solved = true;
      break;
    }
    if (st.leak_ir(m) >= give_up_leak) {
      aborted = true;
      break;
    }
    double rate = cfg.v_uses_adapted_rate
                      ? adapted_rate(frame_size, m, st.plan.punctured, st.plan.shortened)
                      : code.base_rate;
    uint64_t want = reveal_count(n, std::min(0.999, std::max(1e-3, rate)), cfg.alpha);
    std::vector<uint32_t> picks;
    try {
      picks = select_reveal_positions(dec.posteriors, punctured_mask, key_mask, want);
    } catch (const std::runtime_error&) {
      aborted = true;  // everything shortened and revealed, still no match
      break;
    }

    std::vector<uint8_t> payload;
    put_u32(payload, static_cast<uint32_t>(picks.size()));
    for (uint32_t pos : picks) put_u32(payload, pos);
    Message req;
    req.kind = MessageKind::RevealRequest;
    req.payload_bits = payload.size() * 8;
    req.payload = std::move(payload);
    bob_ep.send(std::move(req));

    auto reply = bob_ep.receive_flush();
    if (reply.size() != 1 || reply[0].kind != MessageKind::RevealValues ||
        reply[0].payload_bits != picks.size())
      throw std::runtime_error("blind bob: bad reveal reply");
    for (size_t i = 0; i < picks.size(); ++i) {
      uint32_t pos = picks[i];
      bool value = (reply[0].payload[i >> 3] >> (i & 7)) & 1;
      llr[pos] = value ? -ldpc::kLlrSaturation : ldpc::kLlrSaturation;
      if (punctured_mask[pos]) {
        punctured_mask[pos] = 0;
        st.plan.punctured--;
        st.plan.shortened++;
      } else {
        key_mask[pos] = 0;
        st.k_revealed++;
      }
    }
  }
  bob_ep.close();

  auto t1 = std::chrono::steady_clock::now();
  LeakLedger after = bob_ep.ledger();

  if (recovered_out) {
    BitFrame rec(n, y.frame_index());
    std::vector<uint8_t> is_mod(frame_size, 0);
    for (uint32_t c : code.modulated) is_mod[c] = 1;
    size_t k = 0;
    for (uint32_t c = 0; c < frame_size; ++c) {
      if (is_mod[c]) continue;
      rec.set(k, solved ? dec.hard.get(c) : y.get(k));
      ++k;
    }
    *recovered_out = std::move(rec);
  }

  ReconciliationReport rep;
  rep.protocol = "blind";
  rep.n = n;
  rep.q_hat = q_hat;
  rep.success = solved && !aborted;
  rep.leak_ir = st.leak_ir(m);
  rep.messages = after.messages - before.messages;
  rep.rounds = after.rounds - before.rounds;
  rep.bytes_on_wire = after.bytes_on_wire - before.bytes_on_wire;
  rep.attempts = st.attempts;
  rep.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  rep.simulated_seconds = bob_ep.now();
  if (state_out) *state_out = st;
  return rep;
}

ReconciliationReport blind_reconcile(Endpoint& alice_ep, Endpoint& bob_ep,
                                     const BitFrame& x, const BitFrame& y, double q_hat,
                                     const ldpc::CodeSet& code_set, const BlindConfig& cfg,
                                     BitFrame* corrected_out, BlindSessionState* state_out) {
  if (x.size() != y.size())
    throw std::invalid_argument("blind_reconcile: frame length mismatch");

  std::exception_ptr alice_error;
  double alice_time = 0.0;
  std::thread alice_thread([&] {
    try {
      blind_alice_responder(alice_ep, x, q_hat, code_set, cfg);
      alice_time = alice_ep.now();
    } catch (...) {
      alice_error = std::current_exception();
    }
  });

  BitFrame recovered;
  ReconciliationReport rep;
  std::exception_ptr bob_error;
  try {
    rep = blind_bob_driver(bob_ep, y, q_hat, code_set, cfg, &recovered, state_out);
  } catch (...) {
    bob_error = std::current_exception();
    bob_ep.close();
  }
  alice_thread.join();
  if (bob_error) std::rethrow_exception(bob_error);
  if (alice_error) std::rethrow_exception(alice_error);

  rep.residual_errors = hamming_distance(x, recovered);
  rep.success = rep.success && rep.residual_errors == 0;
  rep.q_true = qber(x, y);
  if (rep.q_true > 0.0) {
    double h = binary_entropy(rep.q_true);
    rep.f = rep.leak_ir / (static_cast<double>(rep.n) * h);
    rep.f_fer = rep.success ? rep.f : 1.0 / h;
  }
  rep.simulated_seconds = std::max(rep.simulated_seconds, alice_time);
  if (corrected_out) *corrected_out = std::move(recovered);
  return rep;
}

}  // namespace recon::blind
