#include <gtest/gtest.h>

#include "wavecaster/timeutil.hpp"

namespace wavecaster {
namespace {

// 2026-10-18T12:00:41Z, computed independently: 20744 days since the epoch.
constexpr std::int64_t kSample = (20744LL * 86400 + 12 * 3600 + 41) * 1000;

TEST(TimeUtil, Iso8601Format) {
  EXPECT_EQ(format_iso8601(from_epoch_ms(kSample + 250)), "2026-10-18T12:00:41.250Z");
  EXPECT_EQ(format_iso8601(from_epoch_ms(0)), "1970-01-01T00:00:00.000Z");
}

TEST(TimeUtil, Iso8601Parse) {
  EXPECT_EQ(to_epoch_ms(parse_iso8601("2026-10-18T12:00:41.250Z")), kSample + 250);
  EXPECT_EQ(to_epoch_ms(parse_iso8601("2026-10-18T12:00:41Z")), kSample);
  EXPECT_THROW(parse_iso8601("2026-10-18 12:00:41"), std::invalid_argument);
  EXPECT_THROW(parse_iso8601("2026-10-18T12:00:41+02:00"), std::invalid_argument);
  EXPECT_THROW(parse_iso8601(""), std::invalid_argument);
}

TEST(TimeUtil, Rfc822) {
  EXPECT_EQ(format_rfc822(from_epoch_ms(kSample)), "Sun, 18 Oct 2026 12:00:41 +0000");
  EXPECT_EQ(to_epoch_ms(parse_rfc822("Sun, 18 Oct 2026 12:00:41 +0000")), kSample);
  EXPECT_EQ(format_rfc822(from_epoch_ms(0)), "Thu, 01 Jan 1970 00:00:00 +0000");
}

TEST(TimeUtil, RoundTripAcrossLeapDay) {
  for (std::int64_t ms : {951782400000LL, 1709164800123LL, 4107542399999LL}) {
    auto t = from_epoch_ms(ms);
    EXPECT_EQ(parse_iso8601(format_iso8601(t)), t);
  }
}

}  // namespace
}  // namespace wavecaster
