#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "wavecaster/net.hpp"

namespace wavecaster::http {

/// Case-insensitive header lookup.
struct HeaderLess {
  bool operator()(const std::string& a, const std::string& b) const;
};
using Headers = std::map<std::string, std::string, HeaderLess>;

struct Request {
  std::string method;
  std::string target;  // as sent
  std::string path;    // percent-decoded, without the query
  std::map<std::string, std::string> query;
  std::string version;  // "HTTP/1.1"
  Headers headers;
  std::string body;

  std::optional<std::string> header(const std::string& name) const;
};

struct Response {
  int status = 200;
  Headers headers;
  std::string body;

  static Response text(int status, std::string body,
                       std::string content_type = "text/plain; charset=utf-8");
};

const char* reason_phrase(int status);

/// Status line, headers (Content-Length and Connection: close added) and body.
std::string serialize(const Response& response);

enum class ParseStatus { kIncomplete, kComplete, kBadRequest, kTooLarge, kUnsupported };

struct ParseLimits {
  std::size_t max_header_bytes = 16 * 1024;
  std::size_t max_body_bytes = 64 * 1024 * 1024;
};

/// Parses one request from the front of `data`. Bodies are delimited by
/// Content-Length only; chunked uploads are reported as kUnsupported.
ParseStatus parse_request(std::string_view data, Request& out, const ParseLimits& limits = {});

std::string percent_decode(std::string_view text, bool plus_as_space = false);
std::map<std::string, std::string> parse_query(std::string_view query);

struct MultipartPart {
  std::string name;
  std::optional<std::string> filename;
  std::string content_type;
  std::string data;
};

/// Boundary from a `multipart/form-data; boundary=...` content type.
std::optional<std::string> multipart_boundary(std::string_view content_type);
/// Throws std::invalid_argument on a malformed body.
std::vector<MultipartPart> parse_multipart(std::string_view body, std::string_view boundary);

using Handler = std::function<Response(const Request&)>;

struct ServerConfig {
  std::string bind_address = "0.0.0.0";
  std::uint16_t port = 0;
  ParseLimits limits;
  std::chrono::milliseconds read_timeout{10000};
};

/// One thread per connection, one request per connection.
class Server {
 public:
  Server(Handler handler, ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  struct Connection;
  void accept_loop();
  void serve(Connection& connection);
  void reap(bool all);

  Handler handler_;
  ServerConfig config_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex connections_mutex_;
  std::list<std::unique_ptr<Connection>> connections_;
};

}  // namespace wavecaster::http
