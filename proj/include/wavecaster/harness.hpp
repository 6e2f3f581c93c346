#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavecaster/streamer.hpp"

namespace wavecaster::harness {

/// Consumes a byte stream frame by frame and reports whether every frame
/// starts exactly where the previous one ended.
class FrameWalker {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::uint64_t frames() const { return frames_; }
  std::uint64_t frame_bytes() const { return frame_bytes_; }
  /// False once a non-header was met at a frame boundary.
  bool aligned() const { return aligned_; }
  /// Bytes of an incomplete trailing frame.
  std::size_t pending() const { return pending_.size(); }

 private:
  std::vector<std::uint8_t> pending_;
  std::uint64_t frames_ = 0;
  std::uint64_t frame_bytes_ = 0;
  bool aligned_ = true;
};

struct ListenerReport {
  std::size_t index = 0;
  std::string status_line;
  std::map<std::string, std::string> icy_headers;  // lower-cased names
  std::size_t metaint = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t bytes_received = 0;  // after the response header
  std::uint64_t audio_bytes = 0;
  std::uint64_t metadata_bytes = 0;
  std::uint64_t frames_recovered = 0;
  std::uint64_t frame_bytes = 0;
  bool frames_aligned = true;
  bool metadata_malformed = false;
  std::vector<streamer::MetadataStripper::Title> titles;
  /// Rates over the measurement window (after warmup).
  double window_s = 0.0;
  double throughput_kbps = 0.0;
  double audio_kbps = 0.0;
  double sync_kbps = 0.0;
  /// "completed", "killed", "server closed", "connect failed: ...",
  /// "handshake failed: ..." or "receive error".
  std::string disconnect_reason;
  /// Stripped audio, when capture was requested.
  std::vector<std::uint8_t> captured_audio;
  /// Raw wire bytes after the header, when capture was requested.
  std::vector<std::uint8_t> captured_wire;
};

struct SwarmReport {
  std::size_t n = 0;
  double duration_s = 0.0;
  double warmup_s = 0.0;
  std::vector<ListenerReport> listeners;
  /// Sum of per-listener throughput, listeners that ran the whole window.
  double aggregate_kbps = 0.0;
  double mean_audio_kbps = 0.0;
  /// B: mean non-audio rate per listener.
  double mean_sync_kbps = 0.0;
  /// n * (A + B) with A the expected bitrate (or measured mean audio rate
  /// when none was given) and n the listeners that completed.
  double model_kbps = 0.0;
  /// (aggregate - model) / model.
  double residual = 0.0;
};

struct Expectations {
  std::optional<double> bitrate_kbps;
  double bitrate_tolerance = 0.05;
  std::optional<double> max_sync_kbps;
  double model_tolerance = 0.10;
};

struct KillOrder {
  std::size_t listener = 0;
  double at_s = 0.0;
};

struct LoadTestOptions {
  std::string url;
  std::size_t listeners = 10;
  double duration_s = 60.0;
  /// Excluded from rate measurement so the connect burst does not count.
  double warmup_s = 3.0;
  std::vector<KillOrder> kills;
  bool capture = false;
  Expectations expectations;
};

/// Connects the listeners with `Icy-MetaData: 1`, reads for the duration,
/// strips metadata, walks frames and fills the reports. The listeners never
/// send anything after their request.
SwarmReport run_load_test(const LoadTestOptions& options);

/// Failed expectations, empty when all hold.
std::vector<std::string> check_expectations(const SwarmReport& report,
                                            const Expectations& expectations);

std::string to_json(const SwarmReport& report, const std::vector<std::string>& failures);

}  // namespace wavecaster::harness
