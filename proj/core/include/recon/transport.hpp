#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "recon/session.hpp"

namespace recon {

/// Wire framing: 4-byte big-endian length (covering everything after the
/// prefix), 1-byte kind, 1-byte direction, payload packed bits, one final
/// byte holding payload_bits mod 8 (0 means a whole number of bytes).
std::vector<uint8_t> encode_frame(const Message& msg);

/// Decodes one frame from buf; returns the message and the bytes consumed,
/// or 0 if buf does not yet hold a complete frame. Throws on malformed
/// frames (bad kind/direction or inconsistent bit count).
size_t decode_frame(std::span<const uint8_t> buf, Message& out);

/// Endpoint over a connected TCP socket. Each peer keeps its own ledger,
/// updated symmetrically on send and receive, so both sides of a run end
/// with identical counters (and identical to an in-memory session's).
/// Real transports have no simulated clock; now() is always 0.
class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(int fd, Direction role);
  ~TcpEndpoint() override;

  TcpEndpoint(const TcpEndpoint&) = delete;
  TcpEndpoint& operator=(const TcpEndpoint&) = delete;

  void flush(std::vector<Message> msgs) override;
  std::vector<Message> receive_flush() override;
  Direction send_direction() const noexcept override { return role_; }
  const LeakLedger& ledger() const override { return ledger_; }
  void close() override;

 private:
  void account(const Message& msg);

  int fd_;
  Direction role_;
  LeakLedger ledger_;
  bool has_last_direction_ = false;
  Direction last_direction_ = Direction::AliceToBob;
  std::vector<uint8_t> rxbuf_;
};

/// Bound listening socket; accept() blocks for one peer.
class TcpListener {
 public:
  explicit TcpListener(uint16_t port);  // 0 picks an ephemeral port
  ~TcpListener();

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const noexcept { return port_; }
  std::unique_ptr<TcpEndpoint> accept(Direction role);

 private:
  int fd_;
  uint16_t port_;
};

std::unique_ptr<TcpEndpoint> tcp_connect(const std::string& host, uint16_t port,
                                         Direction role);

}  // namespace recon
