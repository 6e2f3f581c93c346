#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace wavecaster {

using Clock = std::chrono::system_clock;
using TimePoint = std::chrono::time_point<Clock, std::chrono::milliseconds>;

inline TimePoint now_ms() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(Clock::now());
}

inline std::int64_t to_epoch_ms(TimePoint t) { return t.time_since_epoch().count(); }
inline TimePoint from_epoch_ms(std::int64_t ms) {
  return TimePoint(std::chrono::milliseconds(ms));
}

/// "2026-10-18T12:00:41.250Z"
std::string format_iso8601(TimePoint t);
/// Accepts the format produced by format_iso8601, with or without the
/// millisecond part. Throws std::invalid_argument otherwise.
TimePoint parse_iso8601(const std::string& text);
/// RSS pubDate form: "Sun, 18 Oct 2026 12:00:41 +0000".
std::string format_rfc822(TimePoint t);
TimePoint parse_rfc822(const std::string& text);

}  // namespace wavecaster
