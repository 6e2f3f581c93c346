#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wavecaster/net.hpp"

namespace wavecaster::streamer {

inline constexpr std::uint16_t kDefaultStreamPort = 8000;
inline constexpr std::uint16_t kDefaultApiPort = 8089;
inline constexpr std::size_t kDefaultMetaint = 8192;
inline constexpr double kDefaultRingSeconds = 10.0;

// ---------------------------------------------------------------------------
// ICY handshake and in-band metadata

struct StationInfo {
  std::string name = "Wavecaster";
  std::string genre = "Various";
  int bitrate_kbps = 128;
};

struct IcyHandshake {
  enum class Outcome { kAccepted, kMethodNotAllowed, kMalformed };
  Outcome outcome = Outcome::kMalformed;
  /// Bytes to send before audio (or the rejection). Empty for kMalformed:
  /// the connection is simply closed.
  std::string response;
  bool wants_metadata = false;
};

/// Answers a listener's request. Only GET is served; the metaint header is
/// advertised only when the request carried `Icy-MetaData: 1`.
IcyHandshake build_icy_response(const StationInfo& station, std::size_t metaint,
                                std::string_view request);

/// `StreamTitle='<title>';` zero-padded to a multiple of 16, preceded by the
/// length byte (payload / 16). Single quotes are dropped from the title and
/// overlong titles are truncated to fit the 255-block limit.
std::string encode_metadata_block(std::string_view title);

/// Per-listener metadata interleaving state.
///
/// After every `metaint` audio bytes a metadata block is emitted: the full
/// block when the title differs from the last one sent, a lone 0x00 otherwise.
class MetadataInserter {
 public:
  explicit MetadataInserter(std::size_t metaint);

  void wrap(std::span<const std::uint8_t> audio, std::string_view title, std::string& out);
  std::string wrap(std::span<const std::uint8_t> audio, std::string_view title);

  std::size_t bytes_since_meta() const { return since_meta_; }
  const std::optional<std::string>& last_sent_title() const { return last_title_; }

 private:
  std::size_t metaint_;
  std::size_t since_meta_ = 0;
  std::optional<std::string> last_title_;
};

/// Inverse of MetadataInserter: splits a wire stream into audio bytes and
/// metadata titles. Feed it incrementally.
class MetadataStripper {
 public:
  struct Title {
    std::string text;
    std::uint64_t audio_offset;  // audio bytes preceding the block
    std::uint64_t wire_offset;   // offset of the length byte in the stream
  };

  explicit MetadataStripper(std::size_t metaint) : metaint_(metaint), remaining_(metaint) {}

  /// Appends the audio portion of `wire` to `audio`.
  void feed(std::span<const std::uint8_t> wire, std::vector<std::uint8_t>& audio);

  const std::vector<Title>& titles() const { return titles_; }
  std::uint64_t audio_bytes() const { return audio_total_; }
  std::uint64_t metadata_bytes() const { return meta_total_; }
  std::uint64_t block_count() const { return blocks_; }
  /// Wire offsets of every metadata length byte, in order.
  const std::vector<std::uint64_t>& block_offsets() const { return block_offsets_; }
  bool malformed() const { return malformed_; }

 private:
  enum class Phase { kAudio, kLength, kPayload };
  std::size_t metaint_;
  Phase phase_ = Phase::kAudio;
  std::size_t remaining_ = 0;  // bytes left in the current phase
  std::string payload_;
  std::uint64_t audio_total_ = 0;
  std::uint64_t meta_total_ = 0;
  std::uint64_t wire_total_ = 0;
  std::uint64_t blocks_ = 0;
  std::vector<std::uint64_t> block_offsets_;
  std::vector<Title> titles_;
  bool malformed_ = false;
};

/// Extracts the value of StreamTitle='...'; from a metadata payload.
std::optional<std::string> parse_stream_title(std::string_view payload);

// ---------------------------------------------------------------------------
// Broadcast ring

struct StreamPacket {
  std::uint64_t seq = 0;
  std::vector<std::uint8_t> bytes;  // one MP3 frame
  double duration_s = 0.0;
  std::string title;
};

using PacketPtr = std::shared_ptr<const StreamPacket>;

/// Most recent `capacity_s` seconds of audio, shared by all sessions.
///
/// Packets are immutable once published, so readers holding a PacketPtr
/// never see a partial write. One producer, many readers.
class BroadcastRing {
 public:
  explicit BroadcastRing(double capacity_s = kDefaultRingSeconds);

  std::uint64_t publish(std::vector<std::uint8_t> bytes, double duration_s, std::string title);

  struct Attach {
    std::vector<PacketPtr> burst;
    std::uint64_t next_seq = 0;
  };
  /// Everything buffered plus the seq of the first live packet, atomically.
  Attach attach() const;

  struct ReadResult {
    std::vector<PacketPtr> packets;
    bool lagged = false;  // next_seq already evicted
    bool closed = false;
  };
  /// Packets with seq >= next_seq, waiting up to `timeout` for at least one.
  ReadResult read_from(std::uint64_t next_seq, std::chrono::milliseconds timeout) const;

  void close();
  bool closed() const;

  double capacity_s() const { return capacity_s_; }
  double buffered_s() const;
  std::size_t size() const;
  std::uint64_t next_seq() const;

  using Observer = std::function<void(const PacketPtr&)>;
  /// Called in the producer's context after each publish.
  void set_observer(Observer observer);

 private:
  double capacity_s_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::deque<PacketPtr> packets_;
  double buffered_s_ = 0.0;
  std::uint64_t next_seq_ = 0;
  bool closed_ = false;
  Observer observer_;
};

// ---------------------------------------------------------------------------
// Pacing and capacity arithmetic

/// Offsets (seconds after t0) at which each frame is due: the running sum
/// of the preceding durations.
std::vector<double> pace_schedule(std::span<const double> frame_durations);

/// Running form of pace_schedule anchored at a steady-clock instant.
class Pacer {
 public:
  using SteadyPoint = std::chrono::steady_clock::time_point;
  explicit Pacer(SteadyPoint t0) : t0_(t0) {}

  /// Deadline of the next frame; call advance() once it is published.
  SteadyPoint next_deadline() const;
  void advance(double duration_s) { elapsed_s_ += duration_s; }
  double scheduled_s() const { return elapsed_s_; }
  SteadyPoint origin() const { return t0_; }
  /// Re-anchors so the next deadline is `now` (used after an idle gap).
  void rebase(SteadyPoint now);

 private:
  SteadyPoint t0_;
  double elapsed_s_ = 0.0;
};

/// Total outbound rate T = n * (A + B) in kbps.
double estimate_bandwidth(double listeners, double stream_kbps, double sync_kbps);
/// Listeners an uplink can carry: floor(uplink / (A + B)).
std::size_t capacity(double uplink_kbps, double stream_kbps, double sync_kbps);

// ---------------------------------------------------------------------------
// Stream server

struct StreamServerConfig {
  std::string bind_address = "0.0.0.0";
  std::uint16_t port = kDefaultStreamPort;
  std::size_t metaint = kDefaultMetaint;
  std::size_t max_listeners = 100;  // 0 = unlimited
  std::chrono::milliseconds handshake_timeout{5000};
  /// A send blocked longer than this drops the listener; 0 = ring horizon.
  std::chrono::milliseconds send_timeout{0};
  StationInfo station;
};

struct ServerStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t dropped_slow = 0;
  std::uint64_t dropped_error = 0;
  std::uint64_t bytes_sent = 0;
  std::size_t active = 0;
};

/// Accepts listeners on one port and fans the ring out to each of them from
/// its own thread. A failing or lagging session is closed without touching
/// the producer or any other session.
class StreamServer {
 public:
  StreamServer(BroadcastRing& ring, StreamServerConfig config);
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  ServerStats stats() const;
  void set_bitrate(int kbps);

 private:
  struct Session;
  void accept_loop();
  void serve(Session& session);
  void reap(bool all);

  BroadcastRing& ring_;
  StreamServerConfig config_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::atomic<int> bitrate_kbps_;

  mutable std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;

  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::atomic<std::uint64_t> dropped_slow_{0};
  std::atomic<std::uint64_t> dropped_error_{0};
  std::atomic<std::uint64_t> bytes_sent_{0};
};

}  // namespace wavecaster::streamer
