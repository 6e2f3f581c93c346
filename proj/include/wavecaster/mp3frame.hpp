#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavecaster::mp3 {

inline constexpr int kSamplesPerFrame = 1152;

enum class ChannelMode { kStereo, kJointStereo, kDual, kMono };

const char* to_string(ChannelMode mode);

/// Decoded MPEG-1 Layer III frame header.
struct FrameHeader {
  int bitrate_kbps = 0;
  int sample_rate_hz = 0;
  int padding = 0;
  int frame_len_bytes = 0;
  int samples_per_frame = kSamplesPerFrame;
  ChannelMode channel_mode = ChannelMode::kStereo;

  double duration_s() const {
    return static_cast<double>(samples_per_frame) / sample_rate_hz;
  }

  bool operator==(const FrameHeader&) const = default;
};

enum class HeaderError {
  kBadSync,
  kUnsupportedVersion,  // MPEG-2, MPEG-2.5 or reserved
  kUnsupportedLayer,    // anything but Layer III
  kFreeBitrate,
  kReservedBitrate,
  kReservedSampleRate,
};

const char* to_string(HeaderError error);

class HeaderException : public std::runtime_error {
 public:
  explicit HeaderException(HeaderError error);
  HeaderError error() const { return error_; }

 private:
  HeaderError error_;
};

class NoFramesError : public std::runtime_error {
 public:
  NoFramesError() : std::runtime_error("no valid frame found") {}
};

/// Decodes a 4-byte frame header. Throws HeaderException with the specific
/// reason on any unsupported or corrupt field.
FrameHeader parse_header(std::span<const std::uint8_t, 4> bytes);

/// Non-throwing variant used while scanning. Returns the error through
/// `error` when given.
std::optional<FrameHeader> probe_header(std::span<const std::uint8_t> bytes,
                                        HeaderError* error = nullptr);

/// Encodes a header back to its 4 wire bytes (no CRC, no private/copyright
/// bits). Bitrate and sample rate must come from the Layer III tables.
std::array<std::uint8_t, 4> encode_header(int bitrate_kbps, int sample_rate_hz,
                                          int padding, ChannelMode mode);

struct Frame {
  FrameHeader header;
  std::span<const std::uint8_t> bytes;
};

/// Walks a buffer frame by frame. A leading ID3v2 tag and a trailing ID3v1
/// tag are skipped; any other bytes that do not form a frame are skipped
/// one at a time and counted in junk_bytes().
class FrameScanner {
 public:
  explicit FrameScanner(std::span<const std::uint8_t> data);

  std::optional<Frame> next();

  std::size_t junk_bytes() const { return junk_bytes_; }
  std::size_t id3v2_bytes() const { return id3v2_bytes_; }

 private:
  bool is_id3v1_trailer(std::size_t pos) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::size_t junk_bytes_ = 0;
  std::size_t id3v2_bytes_ = 0;
  bool in_sync_ = true;
};

/// Size of an ID3v2 tag at the start of `data` (header + body + footer),
/// or 0 when there is none.
std::size_t id3v2_size(std::span<const std::uint8_t> data);

std::vector<Frame> iterate_frames(std::span<const std::uint8_t> data);

/// True for a Xing/Info header frame: an encoder-written frame that carries
/// stream statistics instead of audio.
bool is_info_frame(const Frame& frame);

struct StreamInfo {
  /// Audio frames; a leading Xing/Info frame is not counted.
  std::size_t frame_count = 0;
  double total_duration_s = 0.0;
  int nominal_bitrate_kbps = 0;
  int sample_rate_hz = 0;
  bool is_cbr = true;
  std::size_t junk_bytes = 0;
  bool has_info_frame = false;
};

/// Throws NoFramesError when the buffer holds no frame at all.
StreamInfo stream_info(std::span<const std::uint8_t> data);

/// Builds `count` frames of digital silence (zeroed side info and main data).
/// Decoders play these as silence; useful as deterministic filler audio.
std::vector<std::uint8_t> make_silent_frames(int bitrate_kbps,
                                             int sample_rate_hz,
                                             std::size_t count,
                                             ChannelMode mode = ChannelMode::kJointStereo);

std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace wavecaster::mp3
