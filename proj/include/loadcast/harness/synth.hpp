#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "loadcast/core/rng.hpp"
#include "loadcast/preprocess/encode.hpp"
#include "loadcast/preprocess/exogenous.hpp"
#include "loadcast/preprocess/records.hpp"

namespace loadcast::harness {

/// Parameters of the synthetic load generator. Levels are in kW.
struct SynthSpec {
  std::size_t n_days = 120;
  std::string start_date = "2021-01-04";
  double base_load = 500.0;
  double trend_slope = 0.5;        // kW per day
  double daily_amplitude = 0.25;   // fraction of base load
  double weekly_dip = 0.12;        // weekend reduction, fraction of base load
  double holiday_effect = 0.20;    // holiday reduction, fraction of base load
  double weather_coef = 6.0;       // kW per degree of tmax above 20 C or tmin below 5 C
  double noise_sigma = 8.0;
  std::vector<double> driver_coefs = {80.0, 70.0, 60.0};  // kW per unit of the lagged driver
  double driver_phi = 0.9;         // AR(1) coefficient of drivers and distractors
  std::size_t distractors = 10;

  void validate() const {
    if (n_days < 30) throw ConfigError("synth: n_days must be at least 30");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise sigma must be non-negative");
    if (!(driver_phi > -1.0 && driver_phi < 1.0)) throw ConfigError("synth: driver phi must lie in (-1, 1)");
    if (!(base_load > 0.0)) throw ConfigError("synth: base load must be positive");
    preprocess::parse_date(start_date);
  }
};

struct SynthTruth {
  std::string name;
  bool driver = false;
  double coefficient = 0.0;
};

struct SynthData {
  preprocess::LoadSeries load;
  preprocess::WeatherTable weather;
  preprocess::HolidayCalendar holidays;
  preprocess::ExogenousTable exogenous;
  std::vector<SynthTruth> truth;  // drivers first, then distractors, in column order
};

/// Fixed-date holidays used by the generator.
inline preprocess::HolidayCalendar synth_holidays(std::int64_t first_day, std::int64_t last_day) {
  struct Fixed {
    unsigned month, day, length;
    const char* type;
  };
  static constexpr Fixed kFixed[] = {
      {1, 1, 1, "new_year"},     {2, 11, 7, "spring_festival"}, {4, 4, 1, "tomb_sweeping"},
      {5, 1, 3, "labour_day"},   {6, 14, 1, "dragon_boat"},     {9, 21, 1, "mid_autumn"},
      {10, 1, 7, "national_day"}};
  preprocess::HolidayCalendar cal;
  const int y0 = preprocess::civil_from_days(first_day).year, y1 = preprocess::civil_from_days(last_day).year;
  for (int y = y0; y <= y1; ++y) {
    for (const auto& f : kFixed) {
      const std::int64_t start = preprocess::days_from_civil({y, f.month, f.day});
      for (std::int64_t d = start; d < start + f.length; ++d) {
        if (d >= first_day && d <= last_day) cal.emplace(d, f.type);
      }
    }
  }
  return cal;
}

/// Deterministic part of the load: trend, daily cycle, weekend and holiday
/// reductions.
inline double synth_base_signal(const SynthSpec& spec, std::size_t day_index, std::int64_t minute_of_day, bool weekend,
                                bool holiday) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(minute_of_day) / 1440.0;
  double v = spec.base_load + spec.trend_slope * static_cast<double>(day_index);
  v -= spec.daily_amplitude * spec.base_load * std::cos(phase);
  if (weekend) v -= spec.weekly_dip * spec.base_load;
  if (holiday) v -= spec.holiday_effect * spec.base_load;
  return v;
}

inline double synth_weather_effect(const SynthSpec& spec, const preprocess::WeatherDay& w) {
  return spec.weather_coef * (std::max(0.0, w.tmax - 20.0) + std::max(0.0, 5.0 - w.tmin));
}

/// Load = base signal + weather effect + sum_j c_j x_j(t-1) + noise, with
/// unit-variance AR(1) drivers x_j and unrelated AR(1) distractors.
inline SynthData synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  using namespace preprocess;
  spec.validate();
  Rng root(seed);
  Rng weather_rng = root.split(), series_rng = root.split(), noise_rng = root.split();
  const std::int64_t first_day = parse_date(spec.start_date);
  const auto n_days = static_cast<std::int64_t>(spec.n_days);
  SynthData out;
  out.holidays = synth_holidays(first_day, first_day + n_days - 1);

  static constexpr double kConditionWeights[] = {0.35, 0.25, 0.15, 0.12, 0.07, 0.04, 0.02};
  auto condition = [&] {
    double u = weather_rng.uniform();
    for (std::size_t k = 0; k < kWeatherLevels.size(); ++k) {
      if (u < kConditionWeights[k]) return std::string(kWeatherLevels[k]);
      u -= kConditionWeights[k];
    }
    return std::string(kWeatherLevels.back());
  };
  for (std::int64_t d = first_day; d < first_day + n_days; ++d) {
    const CivilDate cd = civil_from_days(d);
    const double doy = static_cast<double>(d - days_from_civil({cd.year, 1, 1}));
    WeatherDay w;
    w.date = d;
    w.tmax = std::round((18.0 + 10.0 * std::sin(2.0 * std::numbers::pi * (doy - 105.0) / 365.25) +
                         weather_rng.normal(0.0, 2.0)) * 10.0) / 10.0;
    w.tmin = std::round((w.tmax - 6.0 - 4.0 * weather_rng.uniform()) * 10.0) / 10.0;
    w.condition = condition();
    if (weather_rng.uniform() < 0.3) w.condition += "~" + condition();
    w.wind_day = static_cast<double>(1 + weather_rng.below(5));
    w.winddir_day = std::string(kWindDirections[weather_rng.below(kWindDirections.size())]);
    w.wind_night = static_cast<double>(1 + weather_rng.below(5));
    w.winddir_night = std::string(kWindDirections[weather_rng.below(kWindDirections.size())]);
    out.weather.emplace(d, w);
  }

  const std::size_t n = spec.n_days * kPointsPerDay;
  std::vector<std::int64_t> time(n);
  for (std::size_t i = 0; i < n; ++i) time[i] = first_day * kMinutesPerDay + static_cast<std::int64_t>(i) * kLoadCadence;

  const double innovation = std::sqrt(1.0 - spec.driver_phi * spec.driver_phi);
  auto ar1 = [&] {
    std::vector<double> v(n);
    v[0] = series_rng.normal();
    for (std::size_t i = 1; i < n; ++i) v[i] = spec.driver_phi * v[i - 1] + innovation * series_rng.normal();
    return v;
  };
  out.exogenous.time = time;
  for (std::size_t j = 0; j < spec.driver_coefs.size(); ++j) {
    out.exogenous.names.push_back("driver_" + std::to_string(j + 1));
    out.exogenous.columns.push_back(ar1());
    out.truth.push_back({out.exogenous.names.back(), true, spec.driver_coefs[j]});
  }
  for (std::size_t j = 0; j < spec.distractors; ++j) {
    out.exogenous.names.push_back("distractor_" + std::to_string(j + 1));
    out.exogenous.columns.push_back(ar1());
    out.truth.push_back({out.exogenous.names.back(), false, 0.0});
  }

  std::vector<double> load(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t d = day_of(time[i]);
    double v = synth_base_signal(spec, static_cast<std::size_t>(d - first_day), minute_of_day(time[i]),
                                 is_weekend_day(d), out.holidays.count(d) > 0);
    v += synth_weather_effect(spec, out.weather.at(d));
    if (i > 0) {
      for (std::size_t j = 0; j < spec.driver_coefs.size(); ++j) v += spec.driver_coefs[j] * out.exogenous.columns[j][i - 1];
    }
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise_rng.normal();
    load[i] = v;
  }
  out.load = make_load_series(time, load);
  return out;
}

struct SynthPaths {
  std::string load, weather, holidays, exogenous, truth;
};

inline SynthPaths synth_paths(const std::string& dir) {
  const std::filesystem::path p(dir);
  return {(p / "load.csv").string(), (p / "weather.csv").string(), (p / "holidays.csv").string(),
          (p / "exogenous.csv").string(), (p / "truth.csv").string()};
}

/// Writes load.csv, weather.csv, holidays.csv and, when there are
/// exogenous series, exogenous.csv and truth.csv (name,role,coefficient).
inline SynthPaths write_synth(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  SynthPaths p = synth_paths(dir);
  preprocess::write_load_csv(p.load, data.load);
  preprocess::write_weather_csv(p.weather, data.weather);
  preprocess::write_holiday_csv(p.holidays, data.holidays);
  if (data.exogenous.empty()) {
    p.exogenous.clear();
    p.truth.clear();
    return p;
  }
  preprocess::write_exogenous_csv(p.exogenous, data.exogenous);
  preprocess::CsvWriter w(p.truth, {"name", "role", "coefficient"});
  for (const auto& t : data.truth) {
    w.row({t.name, t.driver ? "driver" : "distractor", preprocess::format_number(t.coefficient)});
  }
  return p;
}

}  // namespace loadcast::harness
