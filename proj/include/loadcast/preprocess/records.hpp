#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "loadcast/preprocess/calendar.hpp"
#include "loadcast/preprocess/csv.hpp"

// Raw inputs as read from the three CSV files:
//   load     timestamp,load_kw
//   weather  date,tmax_c,tmin_c,weather_cond,wind_day,winddir_day,wind_night,winddir_night
//   holiday  date,holiday_type

namespace loadcast::preprocess {

inline constexpr std::int64_t kLoadCadence = 15;  // minutes
inline constexpr std::size_t kPointsPerDay = kMinutesPerDay / kLoadCadence;

/// Load on a uniform 15-minute grid. Gaps in the file become masked cells.
struct LoadSeries {
  std::vector<std::int64_t> time;  // minutes since origin
  std::vector<double> load;        // NaN where missing
  std::vector<char> missing;

  std::size_t size() const { return time.size(); }

  void check() const {
    if (load.size() != time.size() || missing.size() != time.size()) {
      throw ShapeError("load series: column lengths differ");
    }
    for (std::size_t i = 1; i < time.size(); ++i) {
      if (time[i] - time[i - 1] != kLoadCadence) throw DataError("load series: cadence is not uniform");
    }
  }
};

/// Builds the uniform grid from sorted (time, value) pairs; NaN values and
/// absent grid points are masked.
inline LoadSeries make_load_series(const std::vector<std::int64_t>& time, const std::vector<double>& values) {
  if (time.size() != values.size()) throw ShapeError("load series: column lengths differ");
  if (time.empty()) throw DataError("load series is empty");
  LoadSeries s;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (i > 0) {
      if (time[i] <= time[i - 1]) {
        throw DataError("load timestamps are not strictly increasing at " + format_timestamp(time[i]));
      }
      if ((time[i] - time[i - 1]) % kLoadCadence != 0) {
        throw DataError("load timestamp " + format_timestamp(time[i]) + " is off the 15-minute grid");
      }
      for (std::int64_t t = time[i - 1] + kLoadCadence; t < time[i]; t += kLoadCadence) {
        s.time.push_back(t);
        s.load.push_back(std::nan(""));
        s.missing.push_back(1);
      }
    }
    s.time.push_back(time[i]);
    s.load.push_back(values[i]);
    s.missing.push_back(std::isnan(values[i]) ? 1 : 0);
  }
  return s;
}

inline LoadSeries read_load_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("timestamp"), cl = t.column("load_kw");
  std::vector<std::int64_t> time;
  std::vector<double> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      time.push_back(parse_timestamp(t.rows[r][ct]));
    } catch (const DataError& e) {
      throw DataError(path + ": column 'timestamp' row " + std::to_string(r + 1) + ": " + e.what());
    }
    values.push_back(parse_number(t.rows[r][cl], t, r, cl));
  }
  return make_load_series(time, values);
}

inline void write_load_csv(const std::string& path, const LoadSeries& s) {
  CsvWriter w(path, {"timestamp", "load_kw"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    w.row({format_timestamp(s.time[i]), s.missing[i] ? "" : format_number(s.load[i])});
  }
}

struct WeatherDay {
  std::int64_t date = 0;  // days since origin
  double tmax = 0.0;
  double tmin = 0.0;
  std::string condition;  // "sunny", or "day~night" such as "cloudy~light_rain"
  double wind_day = 0.0;  // wind force grade
  std::string winddir_day;
  double wind_night = 0.0;
  std::string winddir_night;
};

/// Daily weather keyed by date.
using WeatherTable = std::map<std::int64_t, WeatherDay>;

inline WeatherTable read_weather_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  t.require({"date", "tmax_c", "tmin_c", "weather_cond", "wind_day", "winddir_day", "wind_night", "winddir_night"});
  const std::size_t cd = t.column("date"), cx = t.column("tmax_c"), cn = t.column("tmin_c");
  const std::size_t cc = t.column("weather_cond"), cwd = t.column("wind_day"), cdd = t.column("winddir_day");
  const std::size_t cwn = t.column("wind_night"), cdn = t.column("winddir_night");
  WeatherTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    WeatherDay w;
    try {
      w.date = parse_date(row[cd]);
    } catch (const DataError& e) {
      throw DataError(path + ": column 'date' row " + std::to_string(r + 1) + ": " + e.what());
    }
    auto number = [&](std::size_t c) {
      const double v = parse_number(row[c], t, r, c);
      if (std::isnan(v)) throw DataError(path + ": column '" + t.header[c] + "' row " + std::to_string(r + 1) + " is empty");
      return v;
    };
    w.tmax = number(cx);
    w.tmin = number(cn);
    w.condition = row[cc];
    w.wind_day = number(cwd);
    w.winddir_day = row[cdd];
    w.wind_night = number(cwn);
    w.winddir_night = row[cdn];
    if (!out.emplace(w.date, w).second) throw DataError(path + ": duplicate date " + row[cd]);
  }
  return out;
}

inline void write_weather_csv(const std::string& path, const WeatherTable& table) {
  CsvWriter w(path, {"date", "tmax_c", "tmin_c", "weather_cond", "wind_day", "winddir_day", "wind_night", "winddir_night"});
  for (const auto& [date, d] : table) {
    w.row({format_date(date), format_number(d.tmax), format_number(d.tmin), d.condition, format_number(d.wind_day),
           d.winddir_day, format_number(d.wind_night), d.winddir_night});
  }
}

/// Holiday type per date; dates not listed are ordinary days.
using HolidayCalendar = std::map<std::int64_t, std::string>;

inline HolidayCalendar read_holiday_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cd = t.column("date"), ct = t.column("holiday_type");
  HolidayCalendar out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::int64_t d = 0;
    try {
      d = parse_date(t.rows[r][cd]);
    } catch (const DataError& e) {
      throw DataError(path + ": column 'date' row " + std::to_string(r + 1) + ": " + e.what());
    }
    if (!out.emplace(d, t.rows[r][ct]).second) throw DataError(path + ": duplicate date " + t.rows[r][cd]);
  }
  return out;
}

inline void write_holiday_csv(const std::string& path, const HolidayCalendar& cal) {
  CsvWriter w(path, {"date", "holiday_type"});
  for (const auto& [date, type] : cal) w.row({format_date(date), type});
}

}  // namespace loadcast::preprocess
