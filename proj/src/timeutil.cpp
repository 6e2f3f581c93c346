#include "wavecaster/timeutil.hpp"

#include <cstdio>
#include <ctime>
#include <stdexcept>
#include <string_view>

namespace wavecaster {
namespace {

constexpr const char* kDays[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::tm to_utc(TimePoint t) {
  std::time_t secs = static_cast<std::time_t>(
      std::chrono::floor<std::chrono::seconds>(t).time_since_epoch().count());
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return tm;
}

TimePoint from_civil(int y, int mon, int d, int h, int mi, int s, int ms) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mon)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60 || ms < 0 ||
      ms > 999) {
    throw std::invalid_argument("bad timestamp");
  }
  return time_point_cast<milliseconds>(sys_days{ymd}) + hours{h} + minutes{mi} +
         seconds{s} + milliseconds{ms};
}

}  // namespace

std::string format_iso8601(TimePoint t) {
  const std::tm tm = to_utc(t);
  const auto ms = to_epoch_ms(t) - std::chrono::floor<std::chrono::seconds>(t)
                                           .time_since_epoch()
                                           .count() * 1000;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms));
  return buf;
}

TimePoint parse_iso8601(const std::string& text) {
  int y, mon, d, h, mi, s, ms = 0, consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mon, &d, &h, &mi, &s,
                  &consumed) != 6) {
    throw std::invalid_argument("bad ISO-8601 timestamp: " + text);
  }
  std::string_view rest(text.c_str() + consumed);
  if (!rest.empty() && rest.front() == '.') {
    int digits = 0;
    if (std::sscanf(rest.data(), ".%3d%n", &ms, &digits) != 1 || digits != 4) {
      throw std::invalid_argument("bad ISO-8601 fraction: " + text);
    }
    rest.remove_prefix(digits);
  }
  if (rest != "Z") throw std::invalid_argument("ISO-8601 timestamp must be UTC: " + text);
  return from_civil(y, mon, d, h, mi, s, ms);
}

std::string format_rfc822(TimePoint t) {
  const std::tm tm = to_utc(t);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s, %02d %s %04d %02d:%02d:%02d +0000", kDays[tm.tm_wday],
                tm.tm_mday, kMonths[tm.tm_mon], tm.tm_year + 1900, tm.tm_hour, tm.tm_min,
                tm.tm_sec);
  return buf;
}

TimePoint parse_rfc822(const std::string& text) {
  char dow[4] = {}, mon_name[4] = {}, zone[8] = {};
  int d, y, h, mi, s;
  if (std::sscanf(text.c_str(), "%3s, %d %3s %d %d:%d:%d %7s", dow, &d, mon_name, &y, &h,
                  &mi, &s, zone) != 8) {
    throw std::invalid_argument("bad RFC 822 date: " + text);
  }
  int mon = 0;
  for (int i = 0; i < 12; ++i) {
    if (std::string_view(mon_name) == kMonths[i]) mon = i + 1;
  }
  if (mon == 0 || (std::string_view(zone) != "+0000" && std::string_view(zone) != "GMT")) {
    throw std::invalid_argument("bad RFC 822 date: " + text);
  }
  return from_civil(y, mon, d, h, mi, s, 0);
}

}  // namespace wavecaster
