#include "wavecaster/streamer.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <stdexcept>

namespace wavecaster::streamer {
namespace {

constexpr std::size_t kMaxMetadataPayload = 255 * 16;
constexpr std::string_view kTitlePrefix = "StreamTitle='";
constexpr std::string_view kTitleSuffix = "';";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string header_value(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c != '\r' && c != '\n') out.push_back(c);
  }
  return out;
}

}  // namespace

// ---- handshake ----

IcyHandshake build_icy_response(const StationInfo& station, std::size_t metaint,
                                std::string_view request) {
  IcyHandshake hs;
  const auto eol = request.find('\n');
  const std::string_view request_line = trim(request.substr(0, eol));

  // METHOD SP TARGET SP HTTP/x.y
  const auto sp1 = request_line.find(' ');
  const auto sp2 = sp1 == std::string_view::npos ? sp1 : request_line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos ||
      request_line.substr(sp2 + 1).rfind("HTTP/", 0) != 0) {
    hs.outcome = IcyHandshake::Outcome::kMalformed;
    return hs;
  }
  if (request_line.substr(0, sp1) != "GET") {
    hs.outcome = IcyHandshake::Outcome::kMethodNotAllowed;
    hs.response =
        "HTTP/1.0 405 Method Not Allowed\r\nAllow: GET\r\nConnection: close\r\n\r\n";
    return hs;
  }

  std::string_view rest = eol == std::string_view::npos ? std::string_view{} : request.substr(eol + 1);
  while (!rest.empty()) {
    const auto next = rest.find('\n');
    const std::string_view line = trim(rest.substr(0, next));
    rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next + 1);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    if (lower(trim(line.substr(0, colon))) == "icy-metadata" &&
        trim(line.substr(colon + 1)) == "1") {
      hs.wants_metadata = true;
    }
  }

  hs.outcome = IcyHandshake::Outcome::kAccepted;
  hs.response = "ICY 200 OK\r\n";
  hs.response += "icy-name: " + header_value(station.name) + "\r\n";
  hs.response += "icy-genre: " + header_value(station.genre) + "\r\n";
  hs.response += "icy-br: " + std::to_string(station.bitrate_kbps) + "\r\n";
  hs.response += "icy-pub: 0\r\n";
  if (hs.wants_metadata) hs.response += "icy-metaint: " + std::to_string(metaint) + "\r\n";
  hs.response += "content-type: audio/mpeg\r\n";
  hs.response += "\r\n";
  return hs;
}

std::string encode_metadata_block(std::string_view title) {
  std::string clean;
  for (char c : title) {
    if (c != '\'' && c != '\0') clean.push_back(c);
  }
  const std::size_t max_title = kMaxMetadataPayload - kTitlePrefix.size() - kTitleSuffix.size();
  if (clean.size() > max_title) clean.resize(max_title);

  std::string payload;
  payload.reserve(kTitlePrefix.size() + clean.size() + kTitleSuffix.size());
  payload.append(kTitlePrefix).append(clean).append(kTitleSuffix);
  const std::size_t blocks = (payload.size() + 15) / 16;
  payload.resize(blocks * 16, '\0');

  std::string out(1, static_cast<char>(blocks));
  out += payload;
  return out;
}

MetadataInserter::MetadataInserter(std::size_t metaint) : metaint_(metaint) {
  if (metaint_ == 0) throw std::invalid_argument("metaint must be positive");
}

void MetadataInserter::wrap(std::span<const std::uint8_t> audio, std::string_view title,
                            std::string& out) {
  while (!audio.empty()) {
    const std::size_t take = std::min(audio.size(), metaint_ - since_meta_);
    out.append(reinterpret_cast<const char*>(audio.data()), take);
    audio = audio.subspan(take);
    since_meta_ += take;
    if (since_meta_ == metaint_) {
      if (!last_title_ || *last_title_ != title) {
        out += encode_metadata_block(title);
        last_title_ = std::string(title);
      } else {
        out.push_back('\0');
      }
      since_meta_ = 0;
    }
  }
}

std::string MetadataInserter::wrap(std::span<const std::uint8_t> audio, std::string_view title) {
  std::string out;
  wrap(audio, title, out);
  return out;
}

void MetadataStripper::feed(std::span<const std::uint8_t> wire, std::vector<std::uint8_t>& audio) {
  std::size_t i = 0;
  while (i < wire.size()) {
    switch (phase_) {
      case Phase::kAudio: {
        const std::size_t take = std::min(remaining_, wire.size() - i);
        audio.insert(audio.end(), wire.begin() + static_cast<std::ptrdiff_t>(i),
                     wire.begin() + static_cast<std::ptrdiff_t>(i + take));
        i += take;
        remaining_ -= take;
        audio_total_ += take;
        wire_total_ += take;
        if (remaining_ == 0) phase_ = Phase::kLength;
        break;
      }
      case Phase::kLength: {
        block_offsets_.push_back(wire_total_);
        const std::size_t len = wire[i] * 16u;
        ++i;
        ++wire_total_;
        ++meta_total_;
        ++blocks_;
        if (len == 0) {
          phase_ = Phase::kAudio;
          remaining_ = metaint_;
        } else {
          phase_ = Phase::kPayload;
          remaining_ = len;
          payload_.clear();
        }
        break;
      }
      case Phase::kPayload: {
        const std::size_t take = std::min(remaining_, wire.size() - i);
        payload_.append(reinterpret_cast<const char*>(wire.data() + i), take);
        i += take;
        remaining_ -= take;
        wire_total_ += take;
        meta_total_ += take;
        if (remaining_ == 0) {
          if (auto title = parse_stream_title(payload_)) {
            titles_.push_back({*title, audio_total_, block_offsets_.back()});
          } else {
            malformed_ = true;
          }
          phase_ = Phase::kAudio;
          remaining_ = metaint_;
        }
        break;
      }
    }
  }
}

std::optional<std::string> parse_stream_title(std::string_view payload) {
  const auto start = payload.find(kTitlePrefix);
  if (start == std::string_view::npos) return std::nullopt;
  const auto from = start + kTitlePrefix.size();
  const auto end = payload.find(kTitleSuffix, from);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(payload.substr(from, end - from));
}

// ---- ring ----

BroadcastRing::BroadcastRing(double capacity_s) : capacity_s_(capacity_s) {
  if (!(capacity_s_ > 0.0)) throw std::invalid_argument("ring capacity must be positive");
}

std::uint64_t BroadcastRing::publish(std::vector<std::uint8_t> bytes, double duration_s,
                                     std::string title) {
  PacketPtr packet;
  Observer observer;
  {
    std::lock_guard lock(mutex_);
    auto p = std::make_shared<StreamPacket>();
    p->seq = next_seq_++;
    p->bytes = std::move(bytes);
    p->duration_s = duration_s;
    p->title = std::move(title);
    packet = p;
    packets_.push_back(packet);
    buffered_s_ += duration_s;
    while (packets_.size() > 1 && buffered_s_ > capacity_s_ + 1e-9) {
      buffered_s_ -= packets_.front()->duration_s;
      packets_.pop_front();
    }
    observer = observer_;
  }
  cv_.notify_all();
  if (observer) observer(packet);
  return packet->seq;
}

BroadcastRing::Attach BroadcastRing::attach() const {
  std::lock_guard lock(mutex_);
  return {std::vector<PacketPtr>(packets_.begin(), packets_.end()), next_seq_};
}

BroadcastRing::ReadResult BroadcastRing::read_from(std::uint64_t next_seq,
                                                   std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || next_seq_ > next_seq; });
  ReadResult result;
  result.closed = closed_;
  if (next_seq_ <= next_seq) return result;
  if (packets_.empty() || packets_.front()->seq > next_seq) {
    result.lagged = true;
    return result;
  }
  const std::size_t first = static_cast<std::size_t>(next_seq - packets_.front()->seq);
  result.packets.assign(packets_.begin() + static_cast<std::ptrdiff_t>(first), packets_.end());
  return result;
}

void BroadcastRing::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool BroadcastRing::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

double BroadcastRing::buffered_s() const {
  std::lock_guard lock(mutex_);
  return buffered_s_;
}

std::size_t BroadcastRing::size() const {
  std::lock_guard lock(mutex_);
  return packets_.size();
}

std::uint64_t BroadcastRing::next_seq() const {
  std::lock_guard lock(mutex_);
  return next_seq_;
}

void BroadcastRing::set_observer(Observer observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

// ---- pacing ----

std::vector<double> pace_schedule(std::span<const double> frame_durations) {
  std::vector<double> offsets;
  offsets.reserve(frame_durations.size());
  double elapsed = 0.0;
  for (double d : frame_durations) {
    offsets.push_back(elapsed);
    elapsed += d;
  }
  return offsets;
}

Pacer::SteadyPoint Pacer::next_deadline() const {
  return t0_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(elapsed_s_));
}

void Pacer::rebase(SteadyPoint now) {
  t0_ = now - std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                  std::chrono::duration<double>(elapsed_s_));
}

double estimate_bandwidth(double listeners, double stream_kbps, double sync_kbps) {
  if (listeners < 0 || stream_kbps < 0 || sync_kbps < 0) {
    throw std::invalid_argument("bandwidth inputs must be non-negative");
  }
  return listeners * (stream_kbps + sync_kbps);
}

std::size_t capacity(double uplink_kbps, double stream_kbps, double sync_kbps) {
  const double per_listener = stream_kbps + sync_kbps;
  if (!(per_listener > 0)) throw std::invalid_argument("A + B must be positive");
  if (uplink_kbps <= 0) return 0;
  return static_cast<std::size_t>(std::floor(uplink_kbps / per_listener));
}

// ---- server ----

struct StreamServer::Session {
  net::Socket socket;
  std::string peer;
  std::thread thread;
  std::atomic<bool> done{false};
};

StreamServer::StreamServer(BroadcastRing& ring, StreamServerConfig config)
    : ring_(ring), config_(std::move(config)), bitrate_kbps_(config_.station.bitrate_kbps) {}

StreamServer::~StreamServer() { stop(); }

void StreamServer::start() {
  if (running_) return;
  listener_ = net::listen_tcp(config_.bind_address, config_.port);
  port_ = net::local_port(listener_);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void StreamServer::stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.close();
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto& s : sessions_) s->socket.shutdown();
  }
  reap(true);
}

void StreamServer::set_bitrate(int kbps) { bitrate_kbps_ = kbps; }

ServerStats StreamServer::stats() const {
  ServerStats s;
  s.accepted = accepted_;
  s.rejected = rejected_;
  s.dropped_slow = dropped_slow_;
  s.dropped_error = dropped_error_;
  s.bytes_sent = bytes_sent_;
  std::lock_guard lock(sessions_mutex_);
  s.active = static_cast<std::size_t>(std::count_if(
      sessions_.begin(), sessions_.end(), [](const auto& p) { return !p->done.load(); }));
  return s;
}

void StreamServer::reap(bool all) {
  std::list<std::unique_ptr<Session>> finished;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (all || (*it)->done) {
        finished.push_back(std::move(*it));
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : finished) {
    if (s->thread.joinable()) s->thread.join();
  }
}

void StreamServer::accept_loop() {
  while (running_) {
    std::string peer;
    net::Socket client =
        net::accept_with_timeout(listener_, std::chrono::milliseconds(200), &peer);
    reap(false);
    if (!client.valid()) continue;
    auto session = std::make_unique<Session>();
    session->socket = std::move(client);
    session->peer = std::move(peer);
    Session* raw = session.get();
    {
      std::lock_guard lock(sessions_mutex_);
      sessions_.push_back(std::move(session));
    }
    raw->thread = std::thread([this, raw] {
      serve(*raw);
      std::lock_guard lock(sessions_mutex_);
      raw->socket.close();
      raw->done = true;
    });
  }
}

void StreamServer::serve(Session& session) {
  auto& sock = session.socket;
  sock.set_recv_timeout(config_.handshake_timeout);

  std::string request;
  std::uint8_t buf[2048];
  while (request.size() < 8192 && request.find("\r\n\r\n") == std::string::npos &&
         request.find("\n\n") == std::string::npos) {
    const long n = sock.recv_some(buf);
    if (n <= 0) break;
    request.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  if (request.empty()) return;

  StationInfo station = config_.station;
  station.bitrate_kbps = bitrate_kbps_;
  const IcyHandshake hs = build_icy_response(station, config_.metaint, request);
  if (hs.outcome != IcyHandshake::Outcome::kAccepted) {
    ++rejected_;
    if (!hs.response.empty()) sock.send_all(hs.response);
    return;
  }
  {
    std::lock_guard lock(sessions_mutex_);
    const auto active = std::count_if(sessions_.begin(), sessions_.end(), [](const auto& p) {
      return !p->done.load();
    });
    // This session is among the active ones.
    if (config_.max_listeners > 0 &&
        static_cast<std::size_t>(active) > config_.max_listeners) {
      ++rejected_;
      sock.send_all(std::string_view("HTTP/1.0 503 Service Unavailable\r\nConnection: close\r\n\r\n"));
      return;
    }
  }
  ++accepted_;

  const auto horizon = std::chrono::milliseconds(
      static_cast<long>(std::ceil(ring_.capacity_s() * 1000.0)));
  sock.set_send_timeout(config_.send_timeout.count() > 0 ? config_.send_timeout : horizon);
  if (!sock.send_all(hs.response)) {
    ++dropped_error_;
    return;
  }
  bytes_sent_ += hs.response.size();

  std::optional<MetadataInserter> inserter;
  if (hs.wants_metadata) inserter.emplace(config_.metaint);

  std::string wire;
  auto send_packets = [&](const std::vector<PacketPtr>& packets) {
    wire.clear();
    for (const auto& p : packets) {
      if (inserter) {
        inserter->wrap(p->bytes, p->title, wire);
      } else {
        wire.append(reinterpret_cast<const char*>(p->bytes.data()), p->bytes.size());
      }
    }
    if (wire.empty()) return true;
    if (!sock.send_all(wire)) return false;
    bytes_sent_ += wire.size();
    return true;
  };

  // Burst what the ring holds so the player can start at once.
  auto attach = ring_.attach();
  std::uint64_t next = attach.next_seq;
  if (!send_packets(attach.burst)) {
    ++dropped_error_;
    return;
  }
  while (running_) {
    auto r = ring_.read_from(next, std::chrono::milliseconds(250));
    if (r.lagged) {
      ++dropped_slow_;
      return;
    }
    if (!r.packets.empty()) {
      next = r.packets.back()->seq + 1;
      if (!send_packets(r.packets)) {
        // A blocked send that hit the horizon timeout means the listener
        // could not keep up; anything else is a dead peer.
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          ++dropped_slow_;
        } else {
          ++dropped_error_;
        }
        return;
      }
    }
    if (r.closed) return;
  }
}

}  // namespace wavecaster::streamer
