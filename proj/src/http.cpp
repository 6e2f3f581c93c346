#include "wavecaster/http.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace wavecaster::http {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_token_char(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  return std::string_view("!#$%&'*+-.^_`|~").find(c) != std::string_view::npos;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool HeaderLess::operator()(const std::string& a, const std::string& b) const {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](char x, char y) { return lower(x) < lower(y); });
}

std::optional<std::string> Request::header(const std::string& name) const {
  auto it = headers.find(name);
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

Response Response::text(int status, std::string body, std::string content_type) {
  Response r;
  r.status = status;
  r.headers["Content-Type"] = std::move(content_type);
  r.body = std::move(body);
  return r;
}

const char* reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 201: return "Created";
    case 204: return "No Content";
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 408: return "Request Timeout";
    case 409: return "Conflict";
    case 413: return "Payload Too Large";
    case 415: return "Unsupported Media Type";
    case 422: return "Unprocessable Entity";
    case 431: return "Request Header Fields Too Large";
    case 500: return "Internal Server Error";
    case 501: return "Not Implemented";
    case 502: return "Bad Gateway";
    case 503: return "Service Unavailable";
    default: return "Unknown";
  }
}

std::string serialize(const Response& response) {
  std::string out = "HTTP/1.1 " + std::to_string(response.status) + " " +
                    reason_phrase(response.status) + "\r\n";
  for (const auto& [name, value] : response.headers) {
    if (iequals(name, "Content-Length") || iequals(name, "Connection")) continue;
    out += name + ": " + value + "\r\n";
  }
  out += "Content-Length: " + std::to_string(response.body.size()) + "\r\n";
  out += "Connection: close\r\n\r\n";
  out += response.body;
  return out;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '%' && i + 2 < text.size()) {
      int hi = hex_value(text[i + 1]);
      int lo = hex_value(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(plus_as_space && c == '+' ? ' ' : c);
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  while (!query.empty()) {
    auto amp = query.find('&');
    std::string_view pair = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (pair.empty()) continue;
    auto eq = pair.find('=');
    std::string key = percent_decode(pair.substr(0, eq), true);
    std::string value =
        eq == std::string_view::npos ? std::string{} : percent_decode(pair.substr(eq + 1), true);
    out.emplace(std::move(key), std::move(value));
  }
  return out;
}

ParseStatus parse_request(std::string_view data, Request& out, const ParseLimits& limits) {
  auto head_end = data.find("\r\n\r\n");
  if (head_end == std::string_view::npos) {
    return data.size() > limits.max_header_bytes ? ParseStatus::kTooLarge
                                                 : ParseStatus::kIncomplete;
  }
  if (head_end > limits.max_header_bytes) return ParseStatus::kTooLarge;
  std::string_view head = data.substr(0, head_end);

  Request req;
  auto line_end = head.find("\r\n");
  std::string_view line = head.substr(0, line_end);
  auto sp1 = line.find(' ');
  if (sp1 == std::string_view::npos || sp1 == 0) return ParseStatus::kBadRequest;
  auto sp2 = line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || sp2 == sp1 + 1) return ParseStatus::kBadRequest;
  std::string_view method = line.substr(0, sp1);
  std::string_view target = line.substr(sp1 + 1, sp2 - sp1 - 1);
  std::string_view version = line.substr(sp2 + 1);
  if (!std::all_of(method.begin(), method.end(), is_token_char)) return ParseStatus::kBadRequest;
  if (version != "HTTP/1.1" && version != "HTTP/1.0") return ParseStatus::kBadRequest;
  if (target.find(' ') != std::string_view::npos) return ParseStatus::kBadRequest;
  if (std::any_of(target.begin(), target.end(),
                  [](char c) { return static_cast<unsigned char>(c) < 0x21; })) {
    return ParseStatus::kBadRequest;
  }
  req.method = std::string(method);
  req.target = std::string(target);
  req.version = std::string(version);
  auto qmark = target.find('?');
  req.path = percent_decode(target.substr(0, qmark));
  if (qmark != std::string_view::npos) req.query = parse_query(target.substr(qmark + 1));

  std::string_view rest =
      line_end == std::string_view::npos ? std::string_view{} : head.substr(line_end + 2);
  while (!rest.empty()) {
    auto eol = rest.find("\r\n");
    std::string_view h = rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 2);
    auto colon = h.find(':');
    if (colon == std::string_view::npos || colon == 0) return ParseStatus::kBadRequest;
    std::string_view name = h.substr(0, colon);
    if (!std::all_of(name.begin(), name.end(), is_token_char)) return ParseStatus::kBadRequest;
    std::string value(trim(h.substr(colon + 1)));
    auto [it, inserted] = req.headers.emplace(std::string(name), value);
    if (!inserted) it->second += ", " + value;
  }

  if (req.header("Transfer-Encoding")) return ParseStatus::kUnsupported;
  std::size_t body_len = 0;
  if (auto cl = req.header("Content-Length")) {
    const std::string& v = *cl;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), body_len);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      return ParseStatus::kBadRequest;
    }
    if (body_len > limits.max_body_bytes) return ParseStatus::kTooLarge;
  }
  const std::size_t body_start = head_end + 4;
  if (data.size() - body_start < body_len) return ParseStatus::kIncomplete;
  req.body = std::string(data.substr(body_start, body_len));
  out = std::move(req);
  return ParseStatus::kComplete;
}

std::optional<std::string> multipart_boundary(std::string_view content_type) {
  std::string lowered(content_type);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), lower);
  if (lowered.rfind("multipart/form-data", 0) != 0) return std::nullopt;
  auto pos = lowered.find("boundary=");
  if (pos == std::string::npos) return std::nullopt;
  std::string_view b = content_type.substr(pos + 9);
  auto semi = b.find(';');
  b = trim(b.substr(0, semi));
  if (b.size() >= 2 && b.front() == '"' && b.back() == '"') b = b.substr(1, b.size() - 2);
  if (b.empty() || b.size() > 70) return std::nullopt;
  return std::string(b);
}

namespace {

/// Value of `key="..."` or `key=token` inside a Content-Disposition header.
std::optional<std::string> disposition_param(std::string_view header, std::string_view key) {
  std::size_t pos = 0;
  while ((pos = header.find(key, pos)) != std::string_view::npos) {
    bool at_start = pos == 0 || header[pos - 1] == ';' || header[pos - 1] == ' ';
    std::size_t after = pos + key.size();
    if (!at_start || after >= header.size() || header[after] != '=') {
      pos = after;
      continue;
    }
    std::string_view v = header.substr(after + 1);
    if (!v.empty() && v.front() == '"') {
      auto close = v.find('"', 1);
      if (close == std::string_view::npos) return std::nullopt;
      return std::string(v.substr(1, close - 1));
    }
    return std::string(trim(v.substr(0, v.find(';'))));
  }
  return std::nullopt;
}

}  // namespace

std::vector<MultipartPart> parse_multipart(std::string_view body, std::string_view boundary) {
  const std::string delimiter = "--" + std::string(boundary);
  std::vector<MultipartPart> parts;
  auto pos = body.find(delimiter);
  if (pos == std::string_view::npos) throw std::invalid_argument("multipart: no boundary");
  pos += delimiter.size();
  for (;;) {
    if (body.substr(pos, 2) == "--") return parts;
    if (body.substr(pos, 2) != "\r\n") throw std::invalid_argument("multipart: bad delimiter");
    pos += 2;
    auto head_end = body.find("\r\n\r\n", pos);
    if (head_end == std::string_view::npos) throw std::invalid_argument("multipart: no headers");
    std::string_view head = body.substr(pos, head_end - pos);
    const std::string next = "\r\n" + delimiter;
    auto data_end = body.find(next, head_end + 4);
    if (data_end == std::string_view::npos) throw std::invalid_argument("multipart: unterminated");

    MultipartPart part;
    while (!head.empty()) {
      auto eol = head.find("\r\n");
      std::string_view h = head.substr(0, eol);
      head = eol == std::string_view::npos ? std::string_view{} : head.substr(eol + 2);
      auto colon = h.find(':');
      if (colon == std::string_view::npos) continue;
      std::string name(trim(h.substr(0, colon)));
      std::string_view value = trim(h.substr(colon + 1));
      if (iequals(name, "Content-Disposition")) {
        if (auto n = disposition_param(value, "name")) part.name = *n;
        part.filename = disposition_param(value, "filename");
      } else if (iequals(name, "Content-Type")) {
        part.content_type = std::string(value);
      }
    }
    part.data = std::string(body.substr(head_end + 4, data_end - head_end - 4));
    parts.push_back(std::move(part));
    pos = data_end + next.size();
  }
}

// ---------------------------------------------------------------------------

struct Server::Connection {
  net::Socket socket;
  std::thread thread;
  std::atomic<bool> done{false};
};

Server::Server(Handler handler, ServerConfig config)
    : handler_(std::move(handler)), config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  listener_ = net::listen_tcp(config_.bind_address, config_.port);
  port_ = net::local_port(listener_);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.close();
  {
    std::lock_guard lock(connections_mutex_);
    for (auto& c : connections_) c->socket.shutdown();
  }
  reap(true);
}

void Server::reap(bool all) {
  std::list<std::unique_ptr<Connection>> finished;
  {
    std::lock_guard lock(connections_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (all || (*it)->done) {
        finished.push_back(std::move(*it));
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : finished) {
    if (c->thread.joinable()) c->thread.join();
  }
}

void Server::accept_loop() {
  while (running_) {
    net::Socket client = net::accept_with_timeout(listener_, std::chrono::milliseconds(200));
    reap(false);
    if (!client.valid()) continue;
    auto connection = std::make_unique<Connection>();
    connection->socket = std::move(client);
    Connection* raw = connection.get();
    {
      std::lock_guard lock(connections_mutex_);
      connections_.push_back(std::move(connection));
    }
    raw->thread = std::thread([this, raw] {
      serve(*raw);
      std::lock_guard lock(connections_mutex_);
      raw->socket.close();
      raw->done = true;
    });
  }
}

void Server::serve(Connection& connection) {
  auto& sock = connection.socket;
  sock.set_recv_timeout(config_.read_timeout);
  sock.set_send_timeout(config_.read_timeout);

  std::string buffer;
  Request request;
  ParseStatus status = ParseStatus::kIncomplete;
  std::uint8_t chunk[16384];
  while (status == ParseStatus::kIncomplete) {
    long n = sock.recv_some(chunk);
    if (n <= 0) {
      if (!buffer.empty() && n < 0) {
        sock.send_all(serialize(Response::text(408, "request timeout\n")));
      } else if (!buffer.empty()) {
        sock.send_all(serialize(Response::text(400, "truncated request\n")));
      }
      return;
    }
    buffer.append(reinterpret_cast<const char*>(chunk), static_cast<std::size_t>(n));
    status = parse_request(buffer, request, config_.limits);
  }

  Response response;
  switch (status) {
    case ParseStatus::kComplete:
      try {
        response = handler_(request);
      } catch (const std::exception& e) {
        spdlog::error("handler failed on {} {}: {}", request.method, request.path, e.what());
        response = Response::text(500, "internal error\n");
      }
      break;
    case ParseStatus::kTooLarge:
      response = Response::text(413, "request too large\n");
      break;
    case ParseStatus::kUnsupported:
      response = Response::text(501, "transfer encoding not supported\n");
      break;
    default:
      response = Response::text(400, "bad request\n");
      break;
  }
  sock.send_all(serialize(response));
  sock.shutdown();
}

}  // namespace wavecaster::http
