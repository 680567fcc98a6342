#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "loadcast/preprocess/clean.hpp"
#include "loadcast/preprocess/table.hpp"

// Feature catalog. Ids follow the 40-row factor table; id 0 is the load.
//   1-2    weather severity (day, night)
//   3-9    day wind direction one-hot       10-16  night wind direction one-hot
//   17-18  wind force (day, night)          19-20  max / min temperature
//   21-27  year, season, month, day of month, hour, ISO weekday, weekend flag
//   28-29  holiday flag, holiday type       30-36  holiday type one-hot
//   37     daily mean load                  38-40  seasonal, trend, residual

namespace loadcast::preprocess {

inline constexpr std::array<std::string_view, 7> kWeatherLevels = {
    "sunny", "cloudy", "overcast", "light_rain", "moderate_rain", "heavy_rain", "rainstorm"};

inline constexpr std::array<std::string_view, 7> kWindDirections = {
    "northeast", "southeast", "east", "north", "south", "none", "southwest"};

inline constexpr std::array<std::string_view, 7> kHolidayTypes = {
    "dragon_boat", "labour_day", "mid_autumn", "national_day", "new_year", "spring_festival", "tomb_sweeping"};

inline constexpr std::array<std::string_view, 4> kSeasons = {"spring", "summer", "autumn", "winter"};

inline constexpr int kLoadId = 0;
inline constexpr int kDailyMeanId = 37;
inline constexpr int kSeasonalId = 38;
inline constexpr int kTrendId = 39;
inline constexpr int kResidualId = 40;

namespace detail {

inline std::string normalize_label(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

template <std::size_t N>
int lookup(const std::array<std::string_view, N>& vocab, std::string_view value, std::string_view column) {
  const std::string key = normalize_label(value);
  for (std::size_t i = 0; i < N; ++i) {
    if (vocab[i] == key) return static_cast<int>(i) + 1;
  }
  std::string allowed;
  for (auto v : vocab) allowed += (allowed.empty() ? "" : ", ") + std::string(v);
  throw DataError("column '" + std::string(column) + "': unknown category '" + std::string(value) +
                  "' (expected one of: " + allowed + ")");
}

}  // namespace detail

/// Ordinal code of a season name: spring 1 ... winter 4.
inline int season_code(std::string_view name) { return detail::lookup(kSeasons, name, "season"); }

/// Ordinal severity, sunny 1 ... rainstorm 7.
inline int weather_code(std::string_view name) { return detail::lookup(kWeatherLevels, name, "weather_cond"); }

/// One-hot vector over kWindDirections.
inline std::array<double, 7> wind_direction_one_hot(std::string_view name, std::string_view column) {
  std::array<double, 7> v{};
  v[static_cast<std::size_t>(detail::lookup(kWindDirections, name, column) - 1)] = 1.0;
  return v;
}

/// 0 for an ordinary day, otherwise 1 + position in kHolidayTypes.
inline int holiday_type_code(std::string_view name) { return detail::lookup(kHolidayTypes, name, "holiday_type"); }

/// Splits "day~night" weather; a single label applies to both halves.
inline std::pair<int, int> weather_pair(std::string_view cond) {
  const std::size_t sep = cond.find('~');
  if (sep == std::string_view::npos) {
    const int c = weather_code(cond);
    return {c, c};
  }
  return {weather_code(cond.substr(0, sep)), weather_code(cond.substr(sep + 1))};
}

/// Joins the cleaned load with daily weather and the holiday calendar and
/// encodes every calendar and weather factor numerically (ids 0-36).
inline TimeSeriesTable encode_features(const CleanedLoad& load, const WeatherTable& weather,
                                       const HolidayCalendar& holidays) {
  const LoadSeries& s = load.series;
  s.check();
  if (load.is_holiday.size() != s.size()) throw ShapeError("holiday flags do not match the load series");
  const std::size_t n = s.size();
  TimeSeriesTable t;
  t.time = s.time;
  {
    Column& c = t.add(kLoadId, "load", ColumnKind::kFloat, FeatureGroup::kDynamic, s.load);
    c.missing = s.missing;
  }

  // Per-day encodings computed once and broadcast to the day's points.
  struct DayCodes {
    double w1, w2;
    std::array<double, 7> dir_day, dir_night;
    double wind_day, wind_night, tmax, tmin;
  };
  std::map<std::int64_t, DayCodes> days;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t d = day_of(s.time[i]);
    if (days.count(d)) continue;
    auto it = weather.find(d);
    if (it == weather.end()) throw DataError("no weather record for date " + format_date(d));
    const WeatherDay& w = it->second;
    const auto [w1, w2] = weather_pair(w.condition);
    days.emplace(d, DayCodes{static_cast<double>(w1), static_cast<double>(w2),
                             wind_direction_one_hot(w.winddir_day, "winddir_day"),
                             wind_direction_one_hot(w.winddir_night, "winddir_night"), w.wind_day, w.wind_night, w.tmax,
                             w.tmin});
  }

  std::vector<std::vector<double>> cols(37, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t d = day_of(s.time[i]);
    const DayCodes& dc = days.at(d);
    const CivilDate cd = civil_from_days(d);
    cols[1][i] = dc.w1;
    cols[2][i] = dc.w2;
    for (std::size_t k = 0; k < 7; ++k) {
      cols[3 + k][i] = dc.dir_day[k];
      cols[10 + k][i] = dc.dir_night[k];
    }
    cols[17][i] = dc.wind_day;
    cols[18][i] = dc.wind_night;
    cols[19][i] = dc.tmax;
    cols[20][i] = dc.tmin;
    cols[21][i] = cd.year;
    cols[22][i] = season_of_month(cd.month);
    cols[23][i] = cd.month;
    cols[24][i] = cd.day;
    cols[25][i] = static_cast<double>(minute_of_day(s.time[i]) / 60);
    cols[26][i] = iso_weekday(d);
    cols[27][i] = is_weekend_day(d) ? 1.0 : 0.0;
    cols[28][i] = load.is_holiday[i] ? 1.0 : 0.0;
    if (load.is_holiday[i]) {
      auto h = holidays.find(d);
      const int code = h == holidays.end() ? 0 : holiday_type_code(h->second);
      cols[29][i] = code;
      if (code > 0) cols[29 + static_cast<std::size_t>(code)][i] = 1.0;
    }
  }

  auto add = [&](int id, std::string name, ColumnKind kind) {
    t.add(id, std::move(name), kind, FeatureGroup::kStatic, std::move(cols[static_cast<std::size_t>(id)]));
  };
  add(1, "weather_day", ColumnKind::kOrdinal);
  add(2, "weather_night", ColumnKind::kOrdinal);
  for (std::size_t k = 0; k < 7; ++k) {
    add(3 + static_cast<int>(k), "winddir_day_" + std::string(kWindDirections[k]), ColumnKind::kBoolean);
  }
  for (std::size_t k = 0; k < 7; ++k) {
    add(10 + static_cast<int>(k), "winddir_night_" + std::string(kWindDirections[k]), ColumnKind::kBoolean);
  }
  add(17, "wind_day", ColumnKind::kOrdinal);
  add(18, "wind_night", ColumnKind::kOrdinal);
  add(19, "tmax", ColumnKind::kFloat);
  add(20, "tmin", ColumnKind::kFloat);
  add(21, "year", ColumnKind::kOrdinal);
  add(22, "season", ColumnKind::kOrdinal);
  add(23, "month", ColumnKind::kOrdinal);
  add(24, "day", ColumnKind::kOrdinal);
  add(25, "hour", ColumnKind::kOrdinal);
  add(26, "weekday", ColumnKind::kOrdinal);
  add(27, "is_weekend", ColumnKind::kBoolean);
  add(28, "is_holiday", ColumnKind::kBoolean);
  add(29, "holiday_type", ColumnKind::kCategorical);
  for (std::size_t k = 0; k < 7; ++k) {
    add(30 + static_cast<int>(k), "holiday_" + std::string(kHolidayTypes[k]), ColumnKind::kBoolean);
  }
  return t;
}

}  // namespace loadcast::preprocess
