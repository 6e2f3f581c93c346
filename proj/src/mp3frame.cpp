#include "wavecaster/mp3frame.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace wavecaster::mp3 {
namespace {

constexpr std::array<int, 16> kBitrates = {0,   32,  40,  48,  56,  64,  80,  96,
                                           112, 128, 160, 192, 224, 256, 320, -1};
constexpr std::array<int, 4> kSampleRates = {44100, 48000, 32000, -1};

int frame_length(int bitrate_kbps, int sample_rate_hz, int padding) {
  return 144 * bitrate_kbps * 1000 / sample_rate_hz + padding;
}

std::optional<FrameHeader> decode(std::span<const std::uint8_t> b, HeaderError& err) {
  if (b.size() < 4 || b[0] != 0xFF || (b[1] & 0xE0) != 0xE0) {
    err = HeaderError::kBadSync;
    return std::nullopt;
  }
  const int version = (b[1] >> 3) & 0x03;  // 3 = MPEG-1
  const int layer = (b[1] >> 1) & 0x03;    // 1 = Layer III
  if (version != 3) {
    err = HeaderError::kUnsupportedVersion;
    return std::nullopt;
  }
  if (layer != 1) {
    err = HeaderError::kUnsupportedLayer;
    return std::nullopt;
  }
  const int bitrate_index = (b[2] >> 4) & 0x0F;
  if (bitrate_index == 0) {
    err = HeaderError::kFreeBitrate;
    return std::nullopt;
  }
  if (bitrate_index == 15) {
    err = HeaderError::kReservedBitrate;
    return std::nullopt;
  }
  const int rate_index = (b[2] >> 2) & 0x03;
  if (rate_index == 3) {
    err = HeaderError::kReservedSampleRate;
    return std::nullopt;
  }
  FrameHeader h;
  h.bitrate_kbps = kBitrates[bitrate_index];
  h.sample_rate_hz = kSampleRates[rate_index];
  h.padding = (b[2] >> 1) & 0x01;
  h.channel_mode = static_cast<ChannelMode>((b[3] >> 6) & 0x03);
  h.frame_len_bytes = frame_length(h.bitrate_kbps, h.sample_rate_hz, h.padding);
  return h;
}

}  // namespace

const char* to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::kStereo: return "stereo";
    case ChannelMode::kJointStereo: return "joint-stereo";
    case ChannelMode::kDual: return "dual";
    case ChannelMode::kMono: return "mono";
  }
  return "?";
}

const char* to_string(HeaderError error) {
  switch (error) {
    case HeaderError::kBadSync: return "bad sync";
    case HeaderError::kUnsupportedVersion: return "unsupported MPEG version (MPEG-1 only)";
    case HeaderError::kUnsupportedLayer: return "unsupported layer (Layer III only)";
    case HeaderError::kFreeBitrate: return "free-format bitrate not supported";
    case HeaderError::kReservedBitrate: return "reserved bitrate index";
    case HeaderError::kReservedSampleRate: return "reserved sample-rate index";
  }
  return "?";
}

HeaderException::HeaderException(HeaderError error)
    : std::runtime_error(to_string(error)), error_(error) {}

FrameHeader parse_header(std::span<const std::uint8_t, 4> bytes) {
  HeaderError err{};
  auto h = decode(bytes, err);
  if (!h) throw HeaderException(err);
  return *h;
}

std::optional<FrameHeader> probe_header(std::span<const std::uint8_t> bytes,
                                        HeaderError* error) {
  HeaderError err{};
  auto h = decode(bytes, err);
  if (!h && error) *error = err;
  return h;
}

std::array<std::uint8_t, 4> encode_header(int bitrate_kbps, int sample_rate_hz,
                                          int padding, ChannelMode mode) {
  int bitrate_index = -1;
  for (int i = 1; i < 15; ++i) {
    if (kBitrates[i] == bitrate_kbps) bitrate_index = i;
  }
  int rate_index = -1;
  for (int i = 0; i < 3; ++i) {
    if (kSampleRates[i] == sample_rate_hz) rate_index = i;
  }
  if (bitrate_index < 0) throw HeaderException(HeaderError::kReservedBitrate);
  if (rate_index < 0) throw HeaderException(HeaderError::kReservedSampleRate);
  return {0xFF, 0xFB,
          static_cast<std::uint8_t>((bitrate_index << 4) | (rate_index << 2) |
                                    ((padding & 1) << 1)),
          static_cast<std::uint8_t>(static_cast<int>(mode) << 6)};
}

std::size_t id3v2_size(std::span<const std::uint8_t> data) {
  if (data.size() < 10 || data[0] != 'I' || data[1] != 'D' || data[2] != '3') return 0;
  // Syncsafe: 4 x 7 bits.
  for (int i = 6; i < 10; ++i) {
    if (data[i] & 0x80) return 0;
  }
  std::size_t body = (std::size_t{data[6]} << 21) | (std::size_t{data[7]} << 14) |
                     (std::size_t{data[8]} << 7) | std::size_t{data[9]};
  std::size_t total = 10 + body + ((data[5] & 0x10) ? 10 : 0);
  return std::min(total, data.size());
}

FrameScanner::FrameScanner(std::span<const std::uint8_t> data) : data_(data) {
  id3v2_bytes_ = id3v2_size(data_);
  pos_ = id3v2_bytes_;
  in_sync_ = false;
}

bool FrameScanner::is_id3v1_trailer(std::size_t pos) const {
  return data_.size() - pos == 128 && data_[pos] == 'T' && data_[pos + 1] == 'A' &&
         data_[pos + 2] == 'G';
}

std::optional<Frame> FrameScanner::next() {
  while (pos_ < data_.size()) {
    if (is_id3v1_trailer(pos_)) {
      pos_ = data_.size();
      break;
    }
    auto rest = data_.subspan(pos_);
    auto header = probe_header(rest);
    if (header && static_cast<std::size_t>(header->frame_len_bytes) <= rest.size()) {
      const std::size_t end = pos_ + header->frame_len_bytes;
      bool confirmed =
          in_sync_ || pos_ == id3v2_bytes_ || end == data_.size() || is_id3v1_trailer(end);
      if (!confirmed) {
        // Out of sync: only trust a candidate followed by another header.
        auto follow = probe_header(data_.subspan(end));
        confirmed = follow.has_value();
      }
      if (confirmed) {
        Frame frame{*header, rest.first(header->frame_len_bytes)};
        pos_ = end;
        in_sync_ = true;
        return frame;
      }
    }
    ++junk_bytes_;
    ++pos_;
    in_sync_ = false;
  }
  return std::nullopt;
}

std::vector<Frame> iterate_frames(std::span<const std::uint8_t> data) {
  std::vector<Frame> frames;
  FrameScanner scanner(data);
  while (auto f = scanner.next()) frames.push_back(*f);
  return frames;
}

bool is_info_frame(const Frame& frame) {
  const bool crc = (frame.bytes[1] & 0x01) == 0;
  const std::size_t side_info = frame.header.channel_mode == ChannelMode::kMono ? 17 : 32;
  const std::size_t offset = 4 + (crc ? 2 : 0) + side_info;
  if (frame.bytes.size() < offset + 4) return false;
  const auto tag = frame.bytes.subspan(offset, 4);
  auto is = [&](const char* word) { return std::equal(tag.begin(), tag.end(), word); };
  return is("Xing") || is("Info");
}

StreamInfo stream_info(std::span<const std::uint8_t> data) {
  StreamInfo info;
  FrameScanner scanner(data);
  bool first = true;
  while (auto f = scanner.next()) {
    if (first) {
      first = false;
      if (is_info_frame(*f)) {
        info.has_info_frame = true;
        continue;
      }
    }
    if (info.frame_count == 0) {
      info.nominal_bitrate_kbps = f->header.bitrate_kbps;
      info.sample_rate_hz = f->header.sample_rate_hz;
    } else if (f->header.bitrate_kbps != info.nominal_bitrate_kbps) {
      info.is_cbr = false;
    }
    ++info.frame_count;
    info.total_duration_s += f->header.duration_s();
  }
  if (info.frame_count == 0) throw NoFramesError();
  info.junk_bytes = scanner.junk_bytes();
  return info;
}

std::vector<std::uint8_t> make_silent_frames(int bitrate_kbps, int sample_rate_hz,
                                             std::size_t count, ChannelMode mode) {
  std::vector<std::uint8_t> out;
  const long numerator = 144L * bitrate_kbps * 1000;
  long remainder = 0;
  for (std::size_t i = 0; i < count; ++i) {
    remainder += numerator % sample_rate_hz;
    int padding = 0;
    if (remainder >= sample_rate_hz) {
      remainder -= sample_rate_hz;
      padding = 1;
    }
    auto header = encode_header(bitrate_kbps, sample_rate_hz, padding, mode);
    out.insert(out.end(), header.begin(), header.end());
    out.resize(out.size() + frame_length(bitrate_kbps, sample_rate_hz, padding) - 4, 0);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace wavecaster::mp3
