#include "recon/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "recon/metrics.hpp"

namespace recon {

namespace {

constexpr uint8_t kOpOpen = 1;
constexpr uint8_t kOpSearch = 2;
constexpr uint8_t kOpDone = 3;

constexpr uint8_t kGroupWhole = 0;
constexpr uint8_t kGroupTouched = 1;
constexpr uint8_t kGroupUntouched = 2;

constexpr uint64_t kPermLabel = 0xCA5CADE;
constexpr uint32_t kNoSlot = UINT32_MAX;

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

std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits) {
  std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
  return bytes;
}

bool unpack_bit(const std::vector<uint8_t>& bytes, size_t i) {
  return (bytes[i >> 3] >> (i & 7)) & 1;
}

/// One party's view of a partition: permutation plus a packed copy of its
/// own frame in slot order, so block parities are contiguous popcounts.
struct Partition {
  uint32_t id = 0;
  uint8_t iteration = 1;
  uint8_t group = kGroupWhole;
  uint32_t block_size = 0;
  std::vector<uint32_t> perm;  // slot -> original position
  BitFrame permuted;
  size_t num_blocks = 0;

  size_t size() const noexcept { return perm.size(); }
  size_t block_lo(size_t b) const noexcept { return b * block_size; }
  size_t block_hi(size_t b) const noexcept {
    return std::min<size_t>((b + 1) * block_size, perm.size());
  }

  static Partition build(uint32_t id, uint8_t iteration, uint8_t group,
                         uint32_t block_size, std::vector<uint32_t> positions,
                         const BitFrame& frame, uint64_t seed) {
    if (positions.empty()) throw std::logic_error("cascade: empty partition");
    if (block_size == 0) throw std::logic_error("cascade: zero block size");
    Partition p;
    p.id = id;
    p.iteration = iteration;
    p.group = group;
    p.block_size = block_size;
    // Iteration 1 blocks the frame in natural order; later iterations
    // shuffle. Both parties derive the identical permutation from the
    // shared seed and the registry id.
    if (iteration >= 2) {
      Rng rng = Rng(seed).derive(kPermLabel, id);
      rng.shuffle(std::span<uint32_t>(positions));
    }
    p.perm = std::move(positions);
    p.permuted = BitFrame(p.perm.size());
    for (size_t s = 0; s < p.perm.size(); ++s)
      p.permuted.set(s, frame.get(p.perm[s]));
    p.num_blocks = (p.perm.size() + block_size - 1) / block_size;
    return p;
  }
};

uint32_t pow2_floor_u32(uint64_t x) {
  uint32_t k = 1;
  while (uint64_t{k} * 2 <= x && k < (1u << 30)) k *= 2;
  return k;
}

}  // namespace

uint32_t pow2_round(double x, uint32_t lo, uint32_t hi) {
  if (hi < lo) hi = lo;
  if (!(x > 0)) return lo;
  double e = std::round(std::log2(x));
  double k = std::exp2(std::max(1.0, std::min(e, 30.0)));
  uint32_t v = static_cast<uint32_t>(k);
  return std::max(lo, std::min(v, hi));
}

GroupPosteriors cascade_group_posteriors(uint32_t k1, double q_hat) {
  // X ~ Binomial(k1, q_hat) errors per iteration-1 block. Odd blocks got
  // one error corrected; even blocks keep whatever they hid.
  double p = std::pow(1.0 - q_hat, static_cast<double>(k1));
  GroupPosteriors out{q_hat, q_hat};
  if (!(p > 0.0) || q_hat <= 0.0) return out;
  double ratio = q_hat / (1.0 - q_hat);
  double even_mass = 0, even_err = 0, odd_mass = 0, odd_err = 0;
  for (uint32_t x = 0; x <= k1; ++x) {
    if (x & 1) {
      odd_mass += p;
      odd_err += x * p;
    } else {
      even_mass += p;
      even_err += x * p;
    }
    p *= ratio * static_cast<double>(k1 - x) / static_cast<double>(x + 1);
  }
  constexpr double kFloor = 1e-7;
  if (odd_mass > 0)
    out.touched = std::max(kFloor, (odd_err / odd_mass - 1.0) / k1);
  if (even_mass > 0)
    out.untouched = std::max(kFloor, (even_err / even_mass) / k1);
  return out;
}

// ---------------------------------------------------------------------------
// Alice: parity oracle over x. Mirrors Bob's partition layout from the OPEN
// requests and her record of which iteration-1 blocks were searched.

namespace {

struct AliceState {
  const BitFrame& x;
  uint64_t seed;
  std::vector<Partition> parts;
  std::vector<uint8_t> searched_reg0;

  std::vector<uint32_t> positions_for(uint8_t group) const {
    size_t n = x.size();
    std::vector<uint32_t> pos;
    if (group == kGroupWhole) {
      pos.resize(n);
      std::iota(pos.begin(), pos.end(), 0u);
      return pos;
    }
    if (parts.empty()) throw std::logic_error("cascade: split before iteration 1");
    const Partition& p0 = parts[0];
    std::vector<uint8_t> touched(n, 0);
    for (size_t b = 0; b < p0.num_blocks; ++b)
      if (searched_reg0[b])
        for (size_t s = p0.block_lo(b); s < p0.block_hi(b); ++s)
          touched[p0.perm[s]] = 1;
    for (uint32_t i = 0; i < n; ++i)
      if (touched[i] == (group == kGroupTouched ? 1 : 0)) pos.push_back(i);
    return pos;
  }
};

}  // namespace

void cascade_alice_responder(Endpoint& alice_ep, const BitFrame& x,
                             const CascadeConfig& cfg) {
  AliceState st{x, cfg.seed, {}, {}};
  for (;;) {
    auto msgs = alice_ep.receive_flush();
    for (const auto& req : msgs) {
      if (req.payload.empty())
        throw std::runtime_error("cascade alice: unexpected message");
      const uint8_t* p = req.payload.data();
      uint8_t op = p[0];
      if (op == kOpDone) return;
      if (req.kind != MessageKind::RevealRequest)
        throw std::runtime_error("cascade alice: unexpected message kind");
      if (op == kOpOpen) {
        if (req.payload.size() != 12)
          throw std::runtime_error("cascade alice: bad OPEN");
        uint32_t id = get_u32(p + 1);
        uint8_t iteration = p[5];
        uint8_t group = p[6];
        uint32_t block_size = get_u32(p + 7);
        bool omit_last = p[11] != 0;
        if (id != st.parts.size())
          throw std::runtime_error("cascade alice: registry out of order");
        st.parts.push_back(Partition::build(id, iteration, group, block_size,
                                            st.positions_for(group), x, st.seed));
        const Partition& part = st.parts.back();
        if (id == 0) st.searched_reg0.assign(part.num_blocks, 0);
        size_t count = part.num_blocks - (omit_last ? 1 : 0);
        std::vector<uint8_t> parities(count);
        for (size_t b = 0; b < count; ++b)
          parities[b] = part.permuted.parity_range(part.block_lo(b), part.block_hi(b));
        Message reply;
        reply.kind = MessageKind::ParityBatch;
        reply.payload_bits = count;
        reply.payload = pack_bits(parities);
        alice_ep.send(std::move(reply));
      } else if (op == kOpSearch) {
        if (req.payload.size() < 9) throw std::runtime_error("cascade alice: bad SEARCH");
        uint32_t id = get_u32(p + 1);
        uint32_t count = get_u32(p + 5);
        if (id >= st.parts.size() || req.payload.size() != 9 + size_t{count} * 8)
          throw std::runtime_error("cascade alice: bad SEARCH payload");
        const Partition& part = st.parts[id];
        std::vector<uint8_t> parities(count);
        for (uint32_t i = 0; i < count; ++i) {
          uint32_t lo = get_u32(p + 9 + i * 8);
          uint32_t hi = get_u32(p + 13 + i * 8);
          if (lo >= hi || hi > part.size())
            throw std::runtime_error("cascade alice: bad range");
          if (id == 0) st.searched_reg0[lo / part.block_size] = 1;
          parities[i] = part.permuted.parity_range(lo, hi);
        }
        Message reply;
        reply.kind = MessageKind::ParityBatch;
        reply.payload_bits = count;
        reply.payload = pack_bits(parities);
        alice_ep.send(std::move(reply));
      } else {
        throw std::runtime_error("cascade alice: unknown opcode");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Bob: drives the whole protocol, correcting y in place.

namespace {

struct BobPartition {
  Partition part;
  std::vector<uint32_t> slot_of_pos;  // frame position -> slot (kNoSlot if absent)
  std::vector<uint8_t> alice_par;
  std::vector<uint8_t> bob_par;
  std::vector<uint8_t> in_list;
  std::vector<uint32_t> odd_list;
  size_t odd_count = 0;
  std::vector<uint8_t> searched;  // only consulted for registry 0

  // Every Alice parity ever revealed for a slot range, keyed lo<<32|hi.
  // x never changes, so these stay valid; re-searches of a block descend
  // through known splits locally before asking for anything new.
  std::unordered_map<uint64_t, uint8_t> known;

  bool is_odd(size_t b) const { return alice_par[b] != bob_par[b]; }

  static uint64_t range_key(uint32_t lo, uint32_t hi) {
    return (uint64_t{lo} << 32) | hi;
  }
};

struct BobState {
  BitFrame& y;
  Endpoint& ep;
  const CascadeConfig& cfg;
  std::vector<BobPartition> parts;
  bool frame_parity_known = false;
  bool frame_parity = false;  // parity of Alice's x
  // XOR of announced Alice parities per iteration, for deducing the one
  // omitted block parity.
  bool iter_parity_acc = false;
  uint8_t iter_parity_iter = 0;
  uint64_t alice_parity_bits = 0;  // Alice->Bob disclosed parities

  std::vector<Message> request(std::vector<uint8_t> payload) {
    Message req;
    req.kind = MessageKind::RevealRequest;
    req.payload_bits = payload.size() * 8;
    req.payload = std::move(payload);
    ep.send(std::move(req));
    auto replies = ep.receive_flush();
    if (replies.size() != 1 || replies[0].kind != MessageKind::ParityBatch)
      throw std::runtime_error("cascade bob: expected parity batch");
    alice_parity_bits += replies[0].payload_bits;
    return replies;
  }

  void mark_odd_state(BobPartition& bp, size_t b, bool was_odd) {
    bool now_odd = bp.is_odd(b);
    if (now_odd == was_odd) return;
    if (now_odd) {
      bp.odd_count++;
      if (!bp.in_list[b]) {
        bp.in_list[b] = 1;
        bp.odd_list.push_back(static_cast<uint32_t>(b));
      }
    } else {
      bp.odd_count--;
    }
  }

  void toggle(uint32_t pos) {
    y.flip(pos);
    for (auto& bp : parts) {
      uint32_t slot = bp.slot_of_pos[pos];
      if (slot == kNoSlot) continue;
      bp.part.permuted.flip(slot);
      size_t b = slot / bp.part.block_size;
      bool was_odd = bp.is_odd(b);
      bp.bob_par[b] ^= 1;
      mark_odd_state(bp, b, was_odd);
    }
  }

  void open_partition(uint8_t iteration, uint8_t group, uint32_t block_size,
                      std::vector<uint32_t> positions, bool omit_last) {
    uint32_t id = static_cast<uint32_t>(parts.size());
    std::vector<uint8_t> payload;
    payload.push_back(kOpOpen);
    put_u32(payload, id);
    payload.push_back(iteration);
    payload.push_back(group);
    put_u32(payload, block_size);
    payload.push_back(omit_last ? 1 : 0);
    auto replies = request(std::move(payload));

    BobPartition bp;
    bp.part = Partition::build(id, iteration, group, block_size,
                               std::move(positions), y, cfg.seed);
    bp.slot_of_pos.assign(y.size(), kNoSlot);
    for (size_t s = 0; s < bp.part.size(); ++s)
      bp.slot_of_pos[bp.part.perm[s]] = static_cast<uint32_t>(s);
    size_t nb = bp.part.num_blocks;
    bp.alice_par.assign(nb, 0);
    bp.bob_par.assign(nb, 0);
    bp.in_list.assign(nb, 0);
    bp.searched.assign(nb, 0);

    if (iteration != iter_parity_iter) {
      iter_parity_iter = iteration;
      iter_parity_acc = false;
    }
    size_t announced = nb - (omit_last ? 1 : 0);
    if (replies[0].payload_bits != announced)
      throw std::runtime_error("cascade bob: parity count mismatch");
    for (size_t b = 0; b < announced; ++b) {
      bp.alice_par[b] = unpack_bit(replies[0].payload, b) ? 1 : 0;
      iter_parity_acc ^= bp.alice_par[b] != 0;
    }
    if (omit_last) {
      if (!frame_parity_known)
        throw std::runtime_error("cascade bob: cannot deduce parity yet");
      bp.alice_par[nb - 1] = (frame_parity != iter_parity_acc) ? 1 : 0;
    }
    if (id == 0) {
      frame_parity = iter_parity_acc;
      frame_parity_known = true;
    }
    for (size_t b = 0; b < nb; ++b) {
      bp.bob_par[b] =
          bp.part.permuted.parity_range(bp.part.block_lo(b), bp.part.block_hi(b)) ? 1 : 0;
      bp.known[BobPartition::range_key(static_cast<uint32_t>(bp.part.block_lo(b)),
                                       static_cast<uint32_t>(bp.part.block_hi(b)))] =
          bp.alice_par[b];
      if (bp.is_odd(b)) {
        bp.odd_count++;
        bp.in_list[b] = 1;
        bp.odd_list.push_back(static_cast<uint32_t>(b));
      }
    }
    parts.push_back(std::move(bp));
  }

  struct Search {
    uint32_t block;
    uint32_t lo, hi;  // current slot range; Alice/Bob parities mismatch here
    bool apar;        // Alice's parity of [lo, hi)
    bool done = false;
  };

  // Narrow [lo,hi) through splits whose Alice parity is already known.
  // Returns true when the search finished (error toggled).
  bool descend_known(BobPartition& bp, Search& s) {
    for (;;) {
      if (s.hi - s.lo == 1) {
        if (bp.is_odd(s.block)) toggle(bp.part.perm[s.lo]);
        s.done = true;
        return true;
      }
      uint32_t mid = s.lo + (s.hi - s.lo + 1) / 2;
      auto it = bp.known.find(BobPartition::range_key(s.lo, mid));
      if (it == bp.known.end()) return false;
      bool alice_left = it->second != 0;
      bool bob_left = bp.part.permuted.parity_range(s.lo, mid);
      if (alice_left != bob_left) {
        s.hi = mid;
        s.apar = alice_left;
      } else {
        s.lo = mid;
        s.apar = s.apar != alice_left;
      }
    }
  }

  void run_wave(BobPartition& bp) {
    // Gather currently odd blocks (bounded by the batching cap).
    std::vector<Search> searches;
    while (!bp.odd_list.empty()) {
      if (cfg.max_wave_searches != 0 && searches.size() >= cfg.max_wave_searches) break;
      uint32_t b = bp.odd_list.back();
      bp.odd_list.pop_back();
      bp.in_list[b] = 0;
      if (!bp.is_odd(b)) continue;  // corrected in the meantime
      searches.push_back({b, static_cast<uint32_t>(bp.part.block_lo(b)),
                          static_cast<uint32_t>(bp.part.block_hi(b)),
                          bp.alice_par[b] != 0, false});
    }
    if (searches.empty()) return;

    uint32_t id = bp.part.id;
    for (;;) {
      std::vector<uint32_t> asking;
      for (uint32_t i = 0; i < searches.size(); ++i) {
        Search& s = searches[i];
        if (s.done || descend_known(bp, s)) continue;
        asking.push_back(i);
        bp.searched[s.block] = 1;  // Alice marks on receiving the range
      }
      if (asking.empty()) break;

      std::vector<uint8_t> payload;
      payload.push_back(kOpSearch);
      put_u32(payload, id);
      put_u32(payload, static_cast<uint32_t>(asking.size()));
      for (uint32_t i : asking) {
        Search& s = searches[i];
        uint32_t mid = s.lo + (s.hi - s.lo + 1) / 2;
        put_u32(payload, s.lo);
        put_u32(payload, mid);
      }
      auto replies = request(std::move(payload));

      for (size_t j = 0; j < asking.size(); ++j) {
        Search& s = searches[asking[j]];
        uint32_t mid = s.lo + (s.hi - s.lo + 1) / 2;
        bool alice_left = unpack_bit(replies[0].payload, j);
        bp.known[BobPartition::range_key(s.lo, mid)] = alice_left ? 1 : 0;
        bp.known[BobPartition::range_key(mid, s.hi)] = (s.apar != alice_left) ? 1 : 0;
        bool bob_left = bp.part.permuted.parity_range(s.lo, mid);
        if (alice_left != bob_left) {
          s.hi = mid;
          s.apar = alice_left;
        } else {
          s.lo = mid;
          s.apar = s.apar != alice_left;
        }
        if (s.hi - s.lo == 1) {
          if (bp.is_odd(s.block)) toggle(bp.part.perm[s.lo]);
          s.done = true;
        }
      }
    }
  }

  void drain_odd_blocks() {
    for (;;) {
      BobPartition* best = nullptr;
      for (auto& bp : parts)
        if (bp.odd_count > 0 && (!best || bp.part.block_size < best->part.block_size))
          best = &bp;
      if (!best) return;
      run_wave(*best);
    }
  }
};

}  // namespace

ReconciliationReport cascade_bob_driver(Endpoint& bob_ep, BitFrame& y, double q_hat,
                                        const CascadeConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("cascade: invalid config");
  if (!(q_hat > 0.0 && q_hat < 0.5))
    throw std::invalid_argument("cascade: q_hat must lie in (0, 0.5)");
  size_t n = y.size();
  LeakLedger before = bob_ep.ledger();
  auto t0 = std::chrono::steady_clock::now();

  BobState st{y, bob_ep, cfg, {}, false, false, false, 0, 0};
  uint32_t n_pow2 = pow2_floor_u32(n);
  uint32_t half_pow2 = std::max(2u, n_pow2 / 2);
  uint32_t k1 = pow2_round(cfg.k1_constant / q_hat, 2, half_pow2);

  std::vector<uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  st.open_partition(1, kGroupWhole, k1, all, false);
  st.drain_odd_blocks();

  for (uint32_t iter = 2; iter <= cfg.iterations; ++iter) {
    if (iter == 2 && cfg.confidence_split) {
      const BobPartition& p0 = st.parts[0];
      std::vector<uint32_t> touched_pos, untouched_pos;
      std::vector<uint8_t> is_touched(n, 0);
      for (size_t b = 0; b < p0.part.num_blocks; ++b)
        if (p0.searched[b])
          for (size_t s = p0.part.block_lo(b); s < p0.part.block_hi(b); ++s)
            is_touched[p0.part.perm[s]] = 1;
      for (uint32_t i = 0; i < n; ++i)
        (is_touched[i] ? touched_pos : untouched_pos).push_back(i);
      if (touched_pos.size() >= 4 && untouched_pos.size() >= 4) {
        GroupPosteriors post = cascade_group_posteriors(k1, q_hat);
        uint32_t k_t = pow2_round(cfg.group_constant / post.touched, 2,
                                  pow2_floor_u32(touched_pos.size()));
        uint32_t k_u = pow2_round(cfg.group_constant / post.untouched, 2,
                                  pow2_floor_u32(untouched_pos.size()));
        st.open_partition(2, kGroupTouched, k_t, std::move(touched_pos), false);
        st.open_partition(2, kGroupUntouched, k_u, std::move(untouched_pos), true);
        st.drain_odd_blocks();
        continue;
      }
    }
    uint32_t k_i;
    if (iter == 2) {
      k_i = std::min(half_pow2, k1 * 2);
    } else {
      double want = k1 * std::pow(cfg.growth_factor, static_cast<double>(iter - 1));
      k_i = pow2_round(want, 2, std::min(half_pow2, cfg.late_block_cap));
    }
    st.open_partition(static_cast<uint8_t>(iter), kGroupWhole, k_i, all, true);
    st.drain_odd_blocks();
  }

  bob_ep.send(Message{MessageKind::Ack, Direction::BobToAlice, 0, {kOpDone}});

  auto t1 = std::chrono::steady_clock::now();
  LeakLedger after = bob_ep.ledger();
  ReconciliationReport rep;
  rep.protocol = "cascade";
  rep.n = n;
  rep.q_hat = q_hat;
  rep.leak_ir = cfg.count_alice_to_bob_only
                    ? static_cast<double>(st.alice_parity_bits)
                    : static_cast<double>(after.leaked_bits - before.leaked_bits);
  rep.messages = after.messages - before.messages;
  rep.rounds = after.rounds - before.rounds;
  rep.bytes_on_wire = after.bytes_on_wire - before.bytes_on_wire;
  rep.attempts = cfg.iterations;
  rep.success = false;
  rep.residual_errors = SIZE_MAX;
  rep.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  rep.simulated_seconds = bob_ep.now();
  return rep;
}

ReconciliationReport cascade_reconcile(Endpoint& alice_ep, Endpoint& bob_ep,
                                       const BitFrame& x, const BitFrame& y,
                                       double q_hat, const CascadeConfig& cfg,
                                       BitFrame* corrected_out) {
  if (x.size() != y.size())
    throw std::invalid_argument("cascade_reconcile: frame length mismatch");

  std::exception_ptr alice_error;
  double alice_time = 0.0;
  std::thread alice_thread([&] {
    try {
      cascade_alice_responder(alice_ep, x, cfg);
      alice_time = alice_ep.now();
    } catch (...) {
      alice_error = std::current_exception();
    }
  });

  BitFrame corrected = y;
  ReconciliationReport rep;
  std::exception_ptr bob_error;
  try {
    rep = cascade_bob_driver(bob_ep, corrected, q_hat, cfg);
  } catch (...) {
    bob_error = std::current_exception();
    try {
      bob_ep.send(Message{MessageKind::Ack, Direction::BobToAlice, 0, {kOpDone}});
    } catch (...) {
    }
  }
  alice_thread.join();
  if (bob_error) std::rethrow_exception(bob_error);
  if (alice_error) std::rethrow_exception(alice_error);

  rep.residual_errors = hamming_distance(x, corrected);
  rep.success = rep.residual_errors == 0;
  rep.q_true = qber(x, y);
  if (rep.q_true > 0.0) {
    double h = binary_entropy(rep.q_true);
    rep.f = rep.leak_ir / (static_cast<double>(rep.n) * h);
    rep.f_fer = rep.success ? rep.f : 1.0 / h;
  }
  rep.simulated_seconds = std::max(rep.simulated_seconds, alice_time);
  if (corrected_out) *corrected_out = std::move(corrected);
  return rep;
}

}  // namespace recon
