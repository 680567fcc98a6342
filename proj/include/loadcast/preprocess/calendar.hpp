#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "loadcast/core/errors.hpp"

// Instants are whole minutes since 1970-01-01T00:00 in a single fixed zone;
// dates are whole days since the same origin.

namespace loadcast::preprocess {

inline constexpr std::int64_t kMinutesPerDay = 24 * 60;

struct CivilDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
};

inline std::int64_t days_from_civil(const CivilDate& d) {
  using namespace std::chrono;
  const year_month_day ymd{year{d.year}, month{d.month}, day{d.day}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date " + std::to_string(d.year) + "-" + std::to_string(d.month) + "-" +
                    std::to_string(d.day));
  }
  return sys_days{ymd}.time_since_epoch().count();
}

inline CivilDate civil_from_days(std::int64_t days) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())};
}

/// Floor division so instants before the origin map to the right day.
inline std::int64_t day_of(std::int64_t minutes) {
  return minutes >= 0 ? minutes / kMinutesPerDay : -((-minutes + kMinutesPerDay - 1) / kMinutesPerDay);
}

inline std::int64_t minute_of_day(std::int64_t minutes) { return minutes - day_of(minutes) * kMinutesPerDay; }

/// ISO weekday: 1 = Monday ... 7 = Sunday.
inline unsigned iso_weekday(std::int64_t days) {
  using namespace std::chrono;
  return weekday{sys_days{std::chrono::days{days}}}.iso_encoding();
}

inline bool is_weekend_day(std::int64_t days) { return iso_weekday(days) >= 6; }

namespace detail {

inline int parse_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int v = 0;
  if (pos + len > text.size()) throw DataError("malformed date/time '" + std::string(whole) + "'");
  const char* b = text.data() + pos;
  auto [ptr, ec] = std::from_chars(b, b + len, v);
  if (ec != std::errc() || ptr != b + len) throw DataError("malformed date/time '" + std::string(whole) + "'");
  return v;
}

}  // namespace detail

/// Parses YYYY-MM-DD into days since the origin.
inline std::int64_t parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const int y = detail::parse_int(text, 0, 4, text);
  const int m = detail::parse_int(text, 5, 2, text);
  const int d = detail::parse_int(text, 8, 2, text);
  return days_from_civil({y, static_cast<unsigned>(m), static_cast<unsigned>(d)});
}

/// Parses YYYY-MM-DDTHH:MM[:SS] (a space may replace the T). Seconds must be
/// zero.
inline std::int64_t parse_timestamp(std::string_view text) {
  if (text.size() != 16 && text.size() != 19) {
    throw DataError("malformed timestamp '" + std::string(text) + "', expected YYYY-MM-DDTHH:MM[:SS]");
  }
  if (text[10] != 'T' && text[10] != ' ') throw DataError("malformed timestamp '" + std::string(text) + "'");
  if (text[13] != ':') throw DataError("malformed timestamp '" + std::string(text) + "'");
  const std::int64_t days = parse_date(text.substr(0, 10));
  const int hh = detail::parse_int(text, 11, 2, text);
  const int mm = detail::parse_int(text, 14, 2, text);
  if (text.size() == 19) {
    if (text[16] != ':' || detail::parse_int(text, 17, 2, text) != 0) {
      throw DataError("timestamp '" + std::string(text) + "' has non-zero seconds");
    }
  }
  if (hh > 23 || mm > 59) throw DataError("timestamp '" + std::string(text) + "' is out of range");
  return days * kMinutesPerDay + hh * 60 + mm;
}

inline std::string format_date(std::int64_t days) {
  const CivilDate d = civil_from_days(days);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

inline std::string format_timestamp(std::int64_t minutes) {
  const std::int64_t mod = minute_of_day(minutes);
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d:%02d", static_cast<int>(mod / 60), static_cast<int>(mod % 60));
  return format_date(day_of(minutes)) + buf;
}

/// Meteorological season of a month: spring (Mar-May) 1, summer 2, autumn 3,
/// winter (Dec-Feb) 4.
inline int season_of_month(unsigned month) {
  if (month < 1 || month > 12) throw DataError("month " + std::to_string(month) + " out of range");
  if (month >= 3 && month <= 5) return 1;
  if (month >= 6 && month <= 8) return 2;
  if (month >= 9 && month <= 11) return 3;
  return 4;
}

}  // namespace loadcast::preprocess
