#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wavecaster::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();
  /// Wakes any thread blocked on this socket without releasing the fd.
  void shutdown();

  void set_send_timeout(std::chrono::milliseconds timeout);
  void set_recv_timeout(std::chrono::milliseconds timeout);
  void set_nodelay(bool on);

  /// Sends everything or returns false (peer gone, timeout, error).
  bool send_all(std::span<const std::uint8_t> data);
  bool send_all(std::string_view data);
  /// Returns bytes read, 0 on orderly close, -1 on error or timeout.
  long recv_some(std::span<std::uint8_t> buffer);

 private:
  int fd_ = -1;
};

/// Binds and listens. Port 0 picks an ephemeral port.
Socket listen_tcp(const std::string& bind_address, std::uint16_t port, int backlog = 128);
std::uint16_t local_port(const Socket& socket);
/// Waits up to `timeout` for a connection; returns an invalid Socket on timeout.
Socket accept_with_timeout(const Socket& listener, std::chrono::milliseconds timeout,
                           std::string* peer = nullptr);
Socket connect_tcp(const std::string& host, std::uint16_t port,
                   std::chrono::milliseconds timeout = std::chrono::seconds(5));

struct Url {
  std::string host;
  std::uint16_t port = 80;
  std::string path = "/";
};

/// Parses "http://host[:port][/path]".
Url parse_url(const std::string& url);

}  // namespace wavecaster::net
