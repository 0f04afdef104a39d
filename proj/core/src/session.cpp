#include "recon/session.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

namespace recon {

bool kind_leaks(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::ParityBatch:
    case MessageKind::Syndrome:
    case MessageKind::RevealValues:
    case MessageKind::VerifyTag:
      return true;
    case MessageKind::RevealRequest:
    case MessageKind::Ack:
      return false;
  }
  return false;
}

uint64_t wire_frame_bytes(const Message& msg) noexcept {
  return 4 + 1 + 1 + msg.payload.size() + 1;
}

void Endpoint::send(Message msg) {
  std::vector<Message> one;
  one.push_back(std::move(msg));
  flush(std::move(one));
}

namespace {

struct Flush {
  std::vector<Message> msgs;
  double arrive = 0.0;
};

}  // namespace

struct Session::Impl {
  explicit Impl(LatencyModel lat) : latency(lat) {
    if (!latency.valid()) throw std::invalid_argument("Session: bad latency model");
  }

  LatencyModel latency;
  mutable std::mutex mu;
  std::condition_variable cv;
  bool closed = false;

  LeakLedger ledger;
  std::vector<TranscriptEntry> transcript;
  std::optional<Direction> last_direction;

  struct Side {
    double local_time = 0.0;
    std::deque<Flush> inbox;
  };
  Side sides[2];  // indexed by Direction of the receiving party's inbox

  class LocalEndpoint final : public Endpoint {
   public:
    LocalEndpoint(Impl* impl, Direction dir) : impl_(impl), dir_(dir) {}

    void flush(std::vector<Message> msgs) override { impl_->do_flush(dir_, std::move(msgs)); }
    std::vector<Message> receive_flush() override { return impl_->do_receive(dir_); }
    Direction send_direction() const noexcept override { return dir_; }
    const LeakLedger& ledger() const override { return impl_->ledger; }
    double now() const override { return impl_->side_of(dir_).local_time; }
    void close() override { impl_->do_close(); }

   private:
    Impl* impl_;
    Direction dir_;
  };

  LocalEndpoint alice_ep{this, Direction::AliceToBob};
  LocalEndpoint bob_ep{this, Direction::BobToAlice};

  Side& side_of(Direction sender) { return sides[static_cast<int>(sender)]; }
  Side& peer_of(Direction sender) { return sides[1 - static_cast<int>(sender)]; }

  void do_flush(Direction dir, std::vector<Message> msgs) {
    if (msgs.empty()) return;
    std::unique_lock<std::mutex> lock(mu);
    if (closed) throw std::logic_error("Session: send on closed session");

    uint64_t flush_bits = 0;
    for (auto& m : msgs) {
      m.direction = dir;
      if (kind_leaks(m.kind) && m.payload.size() * 8 < m.payload_bits)
        throw std::logic_error("Session: payload shorter than payload_bits");
      ledger.messages += 1;
      if (kind_leaks(m.kind)) ledger.leaked_bits += m.payload_bits;
      uint64_t wb = wire_frame_bytes(m);
      ledger.bytes_on_wire += wb;
      flush_bits += wb * 8;
      transcript.push_back({m.kind, dir, m.payload_bits, wb});
    }
    if (last_direction && *last_direction != dir) ledger.rounds += 1;
    last_direction = dir;

    Side& sender = side_of(dir);
    double transmission =
        latency.bandwidth_bps > 0.0 ? static_cast<double>(flush_bits) / latency.bandwidth_bps : 0.0;
    double arrive = sender.local_time + latency.one_way_latency + transmission;
    peer_of(dir).inbox.push_back({std::move(msgs), arrive});
    cv.notify_all();
  }

  std::vector<Message> do_receive(Direction own_dir) {
    std::unique_lock<std::mutex> lock(mu);
    Side& me = side_of(own_dir);
    cv.wait(lock, [&] { return closed || !me.inbox.empty(); });
    if (me.inbox.empty()) throw EndpointClosed();
    Flush f = std::move(me.inbox.front());
    me.inbox.pop_front();
    me.local_time = std::max(me.local_time, f.arrive);
    return std::move(f.msgs);
  }

  void do_close() {
    std::lock_guard<std::mutex> lock(mu);
    closed = true;
    cv.notify_all();
  }
};

Session::Session(LatencyModel latency) : impl_(std::make_unique<Impl>(latency)) {}

Session::~Session() { close(); }

Endpoint& Session::alice() { return impl_->alice_ep; }
Endpoint& Session::bob() { return impl_->bob_ep; }

LeakLedger Session::ledger() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->ledger;
}

std::vector<TranscriptEntry> Session::transcript() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->transcript;
}

double Session::clock() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return std::max(impl_->sides[0].local_time, impl_->sides[1].local_time);
}

void Session::close() { impl_->do_close(); }

uint64_t replay_leaked_bits(const std::vector<TranscriptEntry>& transcript) {
  uint64_t total = 0;
  for (const auto& e : transcript)
    if (kind_leaks(e.kind)) total += e.payload_bits;
  return total;
}

double throughput(const ReconciliationReport& report, const LatencyModel& latency,
                  double compute_time) {
  double total = compute_time + static_cast<double>(report.rounds) * latency.one_way_latency;
  if (total <= 0.0) throw std::domain_error("throughput: nonpositive total time");
  return static_cast<double>(report.n) / total;
}

}  // namespace recon
