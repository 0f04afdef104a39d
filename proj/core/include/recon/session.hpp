#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "recon/report.hpp"

namespace recon {

/// Thrown by receive_flush when the conversation has ended (session closed
/// or peer disconnected). Protocol responders treat it as normal shutdown.
struct EndpointClosed : std::runtime_error {
  EndpointClosed() : std::runtime_error("endpoint closed") {}
};

enum class Direction : uint8_t { AliceToBob = 0, BobToAlice = 1 };

enum class MessageKind : uint8_t {
  ParityBatch = 0,
  Syndrome = 1,
  RevealRequest = 2,
  RevealValues = 3,
  VerifyTag = 4,
  Ack = 5,
};

/// True for kinds whose payload discloses key information and therefore
/// counts towards leaked_bits. Requests and acks are free.
bool kind_leaks(MessageKind kind) noexcept;

/// One logical message. payload holds the wire bytes; payload_bits is the
/// logical bit length (for a parity batch: the number of parities). The
/// direction is stamped by the sending endpoint.
struct Message {
  MessageKind kind = MessageKind::Ack;
  Direction direction = Direction::AliceToBob;
  uint64_t payload_bits = 0;
  std::vector<uint8_t> payload;
};

/// Serialized frame size under the wire framing (4-byte length prefix,
/// kind, direction, payload, trailing bit-count byte). Used for
/// bytes_on_wire so that in-memory and socket runs account identically.
uint64_t wire_frame_bytes(const Message& msg) noexcept;

struct LeakLedger {
  uint64_t leaked_bits = 0;
  uint64_t messages = 0;
  uint64_t rounds = 0;  // direction alternations; a round trip is two
  uint64_t bytes_on_wire = 0;
};

struct TranscriptEntry {
  MessageKind kind;
  Direction direction;
  uint64_t payload_bits;
  uint64_t wire_bytes;
};

struct LatencyModel {
  double one_way_latency = 0.0;  // seconds
  double bandwidth_bps = 0.0;    // 0 = infinite

  bool valid() const noexcept { return one_way_latency >= 0.0 && bandwidth_bps >= 0.0; }
};

/// Protocol-facing side of a conversation. Implemented by the in-memory
/// session below and by the TCP transport in transport.hpp; protocol code
/// must behave identically over either.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual void send(Message msg);
  /// Send several same-direction messages in one flush: they are counted
  /// individually in the ledger but share a single latency charge.
  virtual void flush(std::vector<Message> msgs) = 0;
  /// Blocks until the peer's next flush arrives; returns it in send order.
  virtual std::vector<Message> receive_flush() = 0;

  virtual Direction send_direction() const noexcept = 0;
  virtual const LeakLedger& ledger() const = 0;
  /// Simulated local time in seconds (always 0 for real transports).
  virtual double now() const { return 0.0; }
  /// Ends the conversation without a message: the peer's next receive
  /// throws EndpointClosed.
  virtual void close() = 0;
};

/// In-memory two-party session with a simulated clock. Both endpoints
/// share one ledger and one transcript, updated under a mutex; each
/// endpoint must be driven by exactly one thread.
class Session {
 public:
  explicit Session(LatencyModel latency = {});
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  Endpoint& alice();
  Endpoint& bob();

  LeakLedger ledger() const;
  std::vector<TranscriptEntry> transcript() const;

  /// Max of the two endpoints' simulated clocks.
  double clock() const;

  /// After close(), send/receive throw std::logic_error.
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Recompute leaked_bits from a transcript; must equal the ledger value.
uint64_t replay_leaked_bits(const std::vector<TranscriptEntry>& transcript);

/// Serial-execution throughput model: n / (compute_time + rounds * latency).
double throughput(const ReconciliationReport& report, const LatencyModel& latency,
                  double compute_time);

}  // namespace recon
