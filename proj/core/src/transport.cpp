#include "recon/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace recon {

std::vector<uint8_t> encode_frame(const Message& msg) {
  uint32_t body_len = static_cast<uint32_t>(msg.payload.size()) + 3;
  std::vector<uint8_t> out;
  out.reserve(4 + body_len);
  out.push_back(static_cast<uint8_t>(body_len >> 24));
  out.push_back(static_cast<uint8_t>(body_len >> 16));
  out.push_back(static_cast<uint8_t>(body_len >> 8));
  out.push_back(static_cast<uint8_t>(body_len));
  out.push_back(static_cast<uint8_t>(msg.kind));
  out.push_back(static_cast<uint8_t>(msg.direction));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  out.push_back(static_cast<uint8_t>(msg.payload_bits % 8));
  return out;
}

size_t decode_frame(std::span<const uint8_t> buf, Message& out) {
  if (buf.size() < 4) return 0;
  uint32_t body_len = (uint32_t{buf[0]} << 24) | (uint32_t{buf[1]} << 16) |
                      (uint32_t{buf[2]} << 8) | uint32_t{buf[3]};
  if (body_len < 3) throw std::runtime_error("decode_frame: body too short");
  if (buf.size() < 4 + static_cast<size_t>(body_len)) return 0;
  uint8_t kind = buf[4];
  uint8_t dir = buf[5];
  if (kind > static_cast<uint8_t>(MessageKind::Ack))
    throw std::runtime_error("decode_frame: unknown message kind");
  if (dir > 1) throw std::runtime_error("decode_frame: bad direction");
  size_t payload_len = body_len - 3;
  uint8_t bits_mod8 = buf[4 + body_len - 1];
  if (bits_mod8 > 7) throw std::runtime_error("decode_frame: bad trailing bit count");
  if (bits_mod8 != 0 && payload_len == 0)
    throw std::runtime_error("decode_frame: bit count without payload");
  out.kind = static_cast<MessageKind>(kind);
  out.direction = static_cast<Direction>(dir);
  out.payload.assign(buf.begin() + 6, buf.begin() + 6 + payload_len);
  out.payload_bits =
      bits_mod8 == 0 ? payload_len * 8 : (payload_len - 1) * 8 + bits_mod8;
  return 4 + body_len;
}

namespace {

void write_all(int fd, const uint8_t* data, size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("tcp send: ") + std::strerror(errno));
    }
    data += n;
    len -= static_cast<size_t>(n);
  }
}

}  // namespace

TcpEndpoint::TcpEndpoint(int fd, Direction role) : fd_(fd), role_(role) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpEndpoint::~TcpEndpoint() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpEndpoint::account(const Message& msg) {
  ledger_.messages += 1;
  if (kind_leaks(msg.kind)) ledger_.leaked_bits += msg.payload_bits;
  ledger_.bytes_on_wire += wire_frame_bytes(msg);
  if (has_last_direction_ && last_direction_ != msg.direction) ledger_.rounds += 1;
  has_last_direction_ = true;
  last_direction_ = msg.direction;
}

void TcpEndpoint::flush(std::vector<Message> msgs) {
  for (auto& m : msgs) {
    m.direction = role_;
    if (kind_leaks(m.kind) && m.payload.size() * 8 < m.payload_bits)
      throw std::logic_error("TcpEndpoint: payload shorter than payload_bits");
    auto bytes = encode_frame(m);
    write_all(fd_, bytes.data(), bytes.size());
    account(m);
  }
}

std::vector<Message> TcpEndpoint::receive_flush() {
  for (;;) {
    Message msg;
    size_t consumed = decode_frame(rxbuf_, msg);
    if (consumed > 0) {
      rxbuf_.erase(rxbuf_.begin(), rxbuf_.begin() + static_cast<long>(consumed));
      if (msg.direction == role_)
        throw std::runtime_error("TcpEndpoint: received own-direction frame");
      account(msg);
      std::vector<Message> out;
      out.push_back(std::move(msg));
      return out;
    }
    uint8_t chunk[4096];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("tcp recv: ") + std::strerror(errno));
    }
    if (n == 0) throw EndpointClosed();
    rxbuf_.insert(rxbuf_.end(), chunk, chunk + n);
  }
}

void TcpEndpoint::close() { ::shutdown(fd_, SHUT_WR); }

TcpListener::TcpListener(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("TcpListener: socket failed");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    throw std::runtime_error(std::string("TcpListener bind: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(fd_, 1) != 0) {
    ::close(fd_);
    throw std::runtime_error("TcpListener: listen failed");
  }
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpEndpoint> TcpListener::accept(Direction role) {
  int conn = ::accept(fd_, nullptr, nullptr);
  if (conn < 0) throw std::runtime_error("TcpListener: accept failed");
  return std::make_unique<TcpEndpoint>(conn, role);
}

std::unique_ptr<TcpEndpoint> tcp_connect(const std::string& host, uint16_t port,
                                         Direction role) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("tcp_connect: socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("tcp_connect: bad host address");
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw std::runtime_error(std::string("tcp_connect: ") + std::strerror(errno));
  }
  return std::make_unique<TcpEndpoint>(fd, role);
}

}  // namespace recon
