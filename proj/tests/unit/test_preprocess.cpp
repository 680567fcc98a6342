#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "loadcast/core/rng.hpp"
#include "loadcast/preprocess/pipeline.hpp"

using namespace loadcast;
using namespace loadcast::preprocess;

namespace {

constexpr std::int64_t kDay = static_cast<std::int64_t>(kPointsPerDay);

// 2021-03-01 is a Monday.
std::int64_t origin_minutes() { return days_from_civil({2021, 3, 1}) * kMinutesPerDay; }

LoadSeries constant_series(std::size_t days, double level) {
  std::vector<std::int64_t> t;
  std::vector<double> v;
  for (std::size_t i = 0; i < days * kPointsPerDay; ++i) {
    t.push_back(origin_minutes() + static_cast<std::int64_t>(i) * kLoadCadence);
    v.push_back(level);
  }
  return make_load_series(t, v);
}

void mask(LoadSeries& s, std::size_t i) {
  s.load[i] = std::nan("");
  s.missing[i] = 1;
}

WeatherTable weather_for(const LoadSeries& s) {
  WeatherTable w;
  const char* conds[] = {"sunny", "cloudy~light_rain", "overcast", "heavy_rain~moderate_rain"};
  const char* dirs[] = {"east", "north", "southwest", "none"};
  for (std::int64_t d = day_of(s.time.front()); d <= day_of(s.time.back()); ++d) {
    const auto k = static_cast<std::size_t>(d % 4);
    w[d] = WeatherDay{d, 20.0 + static_cast<double>(d % 7), 10.0 - static_cast<double>(d % 5), conds[k],
                      static_cast<double>(1 + d % 3), dirs[k], static_cast<double>(d % 2), dirs[(k + 1) % 4]};
  }
  return w;
}

// Smooth load with a daily shape, a weekend dip and a slow drift.
LoadSeries smooth_series(std::size_t days) {
  std::vector<std::int64_t> t;
  std::vector<double> v;
  for (std::size_t i = 0; i < days * kPointsPerDay; ++i) {
    const std::int64_t ts = origin_minutes() + static_cast<std::int64_t>(i) * kLoadCadence;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % kPointsPerDay) / kPointsPerDay;
    t.push_back(ts);
    v.push_back(100.0 + 20.0 * std::sin(phase) + (is_weekend_day(day_of(ts)) ? -15.0 : 0.0) +
                0.05 * static_cast<double>(i / kPointsPerDay));
  }
  return make_load_series(t, v);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("loadcast_test_" + name);
}

TimeSeriesTable ramp_table(std::size_t n) {
  TimeSeriesTable t;
  for (std::size_t i = 0; i < n; ++i) t.time.push_back(origin_minutes() + static_cast<std::int64_t>(i) * kLoadCadence);
  std::vector<double> load(n), extra(n), stat(n);
  for (std::size_t i = 0; i < n; ++i) {
    load[i] = static_cast<double>(i);
    extra[i] = 100.0 + static_cast<double>(i);
    stat[i] = -static_cast<double>(i);
  }
  t.add(kLoadId, "load", ColumnKind::kFloat, FeatureGroup::kDynamic, load);
  t.add(kDailyMeanId, "daily_mean", ColumnKind::kFloat, FeatureGroup::kDynamic, extra);
  t.add(19, "tmax", ColumnKind::kFloat, FeatureGroup::kStatic, stat);
  return t;
}

}  // namespace

TEST(Calendar, CivilRoundTripAndWeekday) {
  for (std::int64_t d = -800; d < 40000; d += 37) {
    EXPECT_EQ(days_from_civil(civil_from_days(d)), d);
  }
  EXPECT_EQ(iso_weekday(days_from_civil({2021, 3, 1})), 1u);
  EXPECT_EQ(iso_weekday(days_from_civil({2021, 3, 7})), 7u);
  EXPECT_EQ(format_timestamp(parse_timestamp("2020-02-29T23:45")), "2020-02-29T23:45");
  EXPECT_EQ(parse_timestamp("2020-02-29 23:45:00"), parse_timestamp("2020-02-29T23:45"));
  EXPECT_THROW(parse_date("2021-02-30"), DataError);
  EXPECT_THROW(parse_timestamp("2021-02-01T25:00"), DataError);
}

TEST(Calendar, SeasonsFollowMonths) {
  EXPECT_EQ(season_of_month(3), 1);
  EXPECT_EQ(season_of_month(7), 2);
  EXPECT_EQ(season_of_month(10), 3);
  EXPECT_EQ(season_of_month(1), 4);
  EXPECT_EQ(season_of_month(12), 4);
}

TEST(Csv, ReportsColumnAndRowOfBadNumbers) {
  std::istringstream in("timestamp,load_kw\n2021-03-01T00:00,abc\n");
  const CsvTable t = parse_csv(in, "mem");
  try {
    parse_number(t.rows[0][1], t, 0, 1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("load_kw"), std::string::npos);
  }
  std::istringstream short_row("a,b\n1\n");
  EXPECT_THROW(parse_csv(short_row, "mem"), DataError);
}

TEST(Records, LoadGapsBecomeMaskedCells) {
  const std::int64_t t0 = origin_minutes();
  LoadSeries s = make_load_series({t0, t0 + 15, t0 + 60}, {1.0, 2.0, 5.0});
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s.missing, (std::vector<char>{0, 0, 1, 1, 0}));
  EXPECT_THROW(make_load_series({t0, t0 + 10}, {1.0, 2.0}), DataError);
  EXPECT_THROW(make_load_series({t0, t0}, {1.0, 2.0}), DataError);
}

TEST(Records, CsvFilesRoundTrip) {
  LoadSeries s = constant_series(2, 3.25);
  mask(s, 7);
  const auto lp = temp_file("load.csv"), wp = temp_file("weather.csv"), hp = temp_file("holiday.csv");
  write_load_csv(lp.string(), s);
  const LoadSeries back = read_load_csv(lp.string());
  EXPECT_EQ(back.time, s.time);
  EXPECT_EQ(back.missing, s.missing);
  EXPECT_EQ(back.load[0], 3.25);

  const WeatherTable w = weather_for(s);
  write_weather_csv(wp.string(), w);
  const WeatherTable wb = read_weather_csv(wp.string());
  ASSERT_EQ(wb.size(), w.size());
  EXPECT_EQ(wb.begin()->second.condition, w.begin()->second.condition);
  EXPECT_EQ(wb.rbegin()->second.winddir_night, w.rbegin()->second.winddir_night);

  HolidayCalendar h{{days_from_civil({2021, 5, 1}), "labour_day"}};
  write_holiday_csv(hp.string(), h);
  EXPECT_EQ(read_holiday_csv(hp.string()), h);
  std::filesystem::remove(lp);
  std::filesystem::remove(wp);
  std::filesystem::remove(hp);
}

TEST(Records, MissingColumnIsNamed) {
  const auto p = temp_file("bad_load.csv");
  std::ofstream(p) << "time,load_kw\n2021-03-01T00:00,1\n";
  try {
    read_load_csv(p.string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("timestamp"), std::string::npos);
  }
  std::filesystem::remove(p);
}

TEST(Impute, ConstantDonorsGiveTheConstant) {
  LoadSeries s = constant_series(15, 5.0);
  const std::size_t noon = 7 * kPointsPerDay + 48;
  mask(s, noon);
  const LoadSeries out = impute_missing(s);
  EXPECT_EQ(out.load[noon], 5.0);
  EXPECT_EQ(out.missing[noon], 0);
}

TEST(Impute, AveragesOnlyAvailableDonors) {
  // Every same-slot cell is masked except one day before (4) and three days
  // after (6); masked cells never act as donors.
  LoadSeries s = constant_series(15, 1.0);
  const std::size_t target = 7 * kPointsPerDay + 48;
  for (int d = -7; d <= 7; ++d) mask(s, static_cast<std::size_t>(static_cast<std::int64_t>(target) + d * kDay));
  s.load[target - kPointsPerDay] = 4.0;
  s.missing[target - kPointsPerDay] = 0;
  s.load[target + 3 * kPointsPerDay] = 6.0;
  s.missing[target + 3 * kPointsPerDay] = 0;
  const LoadSeries out = impute_missing(s);
  EXPECT_EQ(out.load[target], 5.0);
  EXPECT_EQ(out.load[target - 7 * kPointsPerDay], 4.0);
}

TEST(Impute, NoDonorIsAnError) {
  LoadSeries s = constant_series(15, 2.0);
  const std::size_t target = 7 * kPointsPerDay + 48;
  for (int d = -7; d <= 7; ++d) mask(s, static_cast<std::size_t>(static_cast<std::int64_t>(target) + d * kDay));
  try {
    impute_missing(s);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unrecoverable gap"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(format_timestamp(s.time[target])), std::string::npos);
  }
}

TEST(Outliers, CleanSeriesHasNone) {
  WarningCapture warnings;
  const CleanedLoad c = flag_and_clean_outliers(constant_series(35, 10.0), {});
  EXPECT_TRUE(c.outliers.empty());
  EXPECT_TRUE(warnings.contains("outlier window shrunk"));
}

TEST(Outliers, SpikeIsMaskedAndImputed) {
  WarningCapture warnings;
  LoadSeries s = constant_series(35, 10.0);
  const std::size_t spike = 16 * kPointsPerDay + 30;  // a Wednesday
  s.load[spike] = 100.0;
  const CleanedLoad c = flag_and_clean_outliers(s, {});
  ASSERT_EQ(c.outliers.size(), 1u);
  EXPECT_EQ(c.outliers[0], spike);
  EXPECT_EQ(c.series.load[spike], 10.0);
}

TEST(Outliers, HandMadThreshold) {
  // Same-slot weekday values 10, 11, 12, ... give a median and MAD that the
  // test recomputes directly.
  WarningCapture warnings;
  LoadSeries s = constant_series(35, 10.0);
  const std::size_t slot = 40;
  for (std::size_t d = 0; d < 35; ++d) s.load[d * kPointsPerDay + slot] = 10.0 + static_cast<double>(d % 3);
  const std::size_t probe = 17 * kPointsPerDay + slot;
  std::vector<double> group;
  for (std::int64_t e = -14; e <= 13; ++e) {
    const std::int64_t d = 17 + e;
    if (!is_weekend_day(day_of(s.time[0]) + d)) group.push_back(s.load[static_cast<std::size_t>(d) * kPointsPerDay + slot]);
  }
  std::sort(group.begin(), group.end());
  const double med = group.size() % 2 ? group[group.size() / 2]
                                      : 0.5 * (group[group.size() / 2 - 1] + group[group.size() / 2]);
  std::vector<double> dev;
  for (double g : group) dev.push_back(std::abs(g - med));
  std::sort(dev.begin(), dev.end());
  const double mad = dev.size() % 2 ? dev[dev.size() / 2] : 0.5 * (dev[dev.size() / 2 - 1] + dev[dev.size() / 2]);
  ASSERT_GT(mad, 0.0);
  s.load[probe] = med + 5.0 * mad - 0.01;  // just inside
  EXPECT_TRUE(flag_and_clean_outliers(s, {}).outliers.empty());
  s.load[probe] = med + 5.0 * mad + 0.01;  // just outside
  const auto flagged = flag_and_clean_outliers(s, {}).outliers;
  ASSERT_EQ(flagged.size(), 1u);
  EXPECT_EQ(flagged[0], probe);
}

TEST(Outliers, HolidaySpikeIsKept) {
  WarningCapture warnings;
  LoadSeries s = constant_series(35, 10.0);
  const std::size_t spike = 16 * kPointsPerDay + 30;
  s.load[spike] = 100.0;
  const HolidayCalendar h{{day_of(s.time[spike]), "labour_day"}};
  const CleanedLoad c = flag_and_clean_outliers(s, h);
  EXPECT_TRUE(c.outliers.empty());
  EXPECT_EQ(c.series.load[spike], 100.0);
  EXPECT_EQ(c.is_holiday[spike], 1);
  EXPECT_EQ(c.is_holiday[spike - kPointsPerDay], 0);
}

TEST(Encode, OrdinalCodes) {
  EXPECT_EQ(season_code("spring"), 1);
  EXPECT_EQ(season_code("winter"), 4);
  EXPECT_EQ(weather_code("sunny"), 1);
  EXPECT_EQ(weather_code("Rainstorm"), 7);
  EXPECT_EQ(weather_pair("cloudy~light rain"), std::make_pair(2, 4));
  EXPECT_EQ(holiday_type_code("national_day"), 4);
}

TEST(Encode, WindDirectionOneHot) {
  const auto v = wind_direction_one_hot("east", "winddir_day");
  double sum = 0.0;
  for (double x : v) sum += x;
  EXPECT_EQ(sum, 1.0);
  EXPECT_EQ(v[2], 1.0);
  try {
    wind_direction_one_hot("NNE", "winddir_day");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("winddir_day"), std::string::npos);
    EXPECT_NE(msg.find("NNE"), std::string::npos);
  }
}

TEST(Encode, TableColumnsFollowCalendar) {
  WarningCapture warnings;
  const LoadSeries s = constant_series(3, 7.0);
  const std::int64_t holiday = day_of(s.time.front()) + 2;
  const HolidayCalendar h{{holiday, "spring_festival"}};
  const CleanedLoad c = flag_and_clean_outliers(s, h);
  const TimeSeriesTable t = encode_features(c, weather_for(s), h);
  t.check();
  EXPECT_EQ(t.columns.size(), 37u);
  const std::size_t last = t.rows() - 1;
  EXPECT_EQ(t.column("season").values[0], 1.0);
  EXPECT_EQ(t.column("month").values[0], 3.0);
  EXPECT_EQ(t.column("weekday").values[0], 1.0);
  EXPECT_EQ(t.column("hour").values[last], 23.0);
  EXPECT_EQ(t.column("is_holiday").values[last], 1.0);
  EXPECT_EQ(t.column("holiday_type").values[last], 6.0);
  EXPECT_EQ(t.by_id(35).values[last], 1.0);
  EXPECT_EQ(t.by_id(35).values[0], 0.0);
  double one_hot = 0.0;
  for (int id = 3; id <= 9; ++id) one_hot += t.by_id(id).values[100];
  EXPECT_EQ(one_hot, 1.0);
}

TEST(Encode, MissingWeatherDayIsAnError) {
  WarningCapture warnings;
  const LoadSeries s = constant_series(3, 7.0);
  WeatherTable w = weather_for(s);
  w.erase(w.begin());
  EXPECT_THROW(encode_features(flag_and_clean_outliers(s, {}), w, {}), DataError);
}

TEST(Decompose, SineIsAllSeasonal) {
  std::vector<double> x(6 * kDailyPeriod);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / kDailyPeriod);
  }
  const Decomposition d = decompose(x);
  for (std::size_t i = kDailyPeriod / 2; i + kDailyPeriod / 2 < x.size(); ++i) {
    EXPECT_NEAR(d.seasonal[i], x[i], 1e-6);
    EXPECT_NEAR(d.trend[i], 0.0, 1e-6);
    EXPECT_NEAR(d.residual[i], 0.0, 1e-6);
  }
}

TEST(Decompose, ConstantIsAllTrend) {
  const std::vector<double> x(3 * kDailyPeriod, 4.5);
  const Decomposition d = decompose(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(d.trend[i], 4.5, 1e-12);
    EXPECT_NEAR(d.seasonal[i], 0.0, 1e-12);
    EXPECT_NEAR(d.residual[i], 0.0, 1e-12);
  }
}

TEST(Decompose, ReconstructsExactly) {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(2 * kDailyPeriod + static_cast<std::size_t>(rep) * 13);
    const double level = std::pow(10.0, rng.uniform(0.0, 5.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % kDailyPeriod) / kDailyPeriod;
      x[i] = level * (1.0 + 0.3 * std::sin(phase) + 0.05 * rng.normal());
    }
    const Decomposition d = decompose(x);
    EXPECT_EQ(d.inexact, 0u);
    EXPECT_EQ(reconstruct(d), x);
  }
}

TEST(Decompose, TinyValuesNearALargeBaseAreReported) {
  // A zero-mean series has points far below trend + seasonal, or of the
  // opposite sign; some of those cannot close bit-exactly and must be
  // counted, not thrown.
  Rng rng(4);
  std::vector<double> x(4 * kDailyPeriod);
  for (auto& v : x) v = rng.normal();
  x[200] = 1e-300;
  WarningCapture warnings;
  const Decomposition d = decompose(x);
  EXPECT_GT(d.inexact, 0u);
  EXPECT_TRUE(warnings.contains("bit-exactly"));
  const auto back = reconstruct(d);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double base = d.trend[i] + d.seasonal[i];
    EXPECT_LE(std::abs(back[i] - x[i]), (std::abs(base) + std::abs(x[i])) * 0x1p-52);
    exact += back[i] == x[i] ? 1 : 0;
  }
  EXPECT_EQ(exact, x.size() - d.inexact);
}

TEST(Decompose, SeasonalSumsToZeroAndOddPeriodWorks) {
  Rng rng(3);
  std::vector<double> x(70);
  for (auto& v : x) v = 10.0 + rng.normal();
  const Decomposition d = decompose(x, 7);
  double sum = 0.0;
  for (std::size_t p = 0; p < 7; ++p) sum += d.seasonal[p];
  EXPECT_NEAR(sum, 0.0, 1e-12);
  EXPECT_EQ(reconstruct(d), x);
}

TEST(Decompose, ShortSeriesIsAnError) {
  EXPECT_THROW(decompose(std::vector<double>(2 * kDailyPeriod - 1, 1.0)), DataError);
}

TEST(DeriveFeatures, DailyMean) {
  std::vector<std::int64_t> t;
  std::vector<double> load;
  for (std::size_t i = 0; i < 2 * kPointsPerDay; ++i) {
    t.push_back(origin_minutes() + static_cast<std::int64_t>(i) * kLoadCadence);
    load.push_back(i < kPointsPerDay ? static_cast<double>(i + 1) : 3.0);
  }
  const auto mean = daily_mean(t, load);
  for (std::size_t i = 0; i < kPointsPerDay; ++i) {
    EXPECT_EQ(mean[i], 48.5);
    EXPECT_EQ(mean[i + kPointsPerDay], 3.0);
  }
}

TEST(DeriveFeatures, ColumnsMatchDecompose) {
  WarningCapture warnings;
  const LoadSeries s = smooth_series(4);
  const PreparedTable p = prepare_table(s, weather_for(s), {});
  const Decomposition d = decompose(p.table.by_id(kLoadId).values);
  EXPECT_EQ(p.table.by_id(kSeasonalId).values, d.seasonal);
  EXPECT_EQ(p.table.by_id(kTrendId).values, d.trend);
  EXPECT_EQ(p.table.by_id(kResidualId).values, d.residual);
  EXPECT_EQ(p.table.columns.size(), 41u);
}

TEST(Windows, CountAndContents) {
  const TimeSeriesTable t = ramp_table(20);
  const FeatureLayout layout = layout_for(t, {19, kDailyMeanId});
  EXPECT_EQ(layout.dynamic, (std::vector<int>{kLoadId, kDailyMeanId}));
  EXPECT_EQ(layout.stat, (std::vector<int>{19}));
  const WindowSet w = make_windows(t, layout, 12, 1);
  ASSERT_EQ(w.size(), 8u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w.target[i], static_cast<double>(i + 12));
    EXPECT_EQ(w.stat[i], -static_cast<double>(i + 12));
    EXPECT_EQ(w.time[i], t.time[i + 12]);
  }
  for (std::size_t r = 0; r < 12; ++r) {
    EXPECT_EQ(w.dyn[r * 2], static_cast<double>(r));
    EXPECT_EQ(w.dyn[r * 2 + 1], 100.0 + static_cast<double>(r));
  }
}

TEST(Windows, CountFormulaHolds) {
  for (std::size_t n = 2; n < 30; ++n) {
    const TimeSeriesTable t = ramp_table(n);
    for (std::size_t steps = 1; steps < n; ++steps) {
      for (std::size_t h = 1; steps + h <= n; ++h) {
        EXPECT_EQ(make_windows(t, layout_for(t, {}), steps, h).size(), n - steps - h + 1);
      }
    }
  }
  const TimeSeriesTable t = ramp_table(12);
  EXPECT_THROW(make_windows(t, layout_for(t, {}), 12, 1), DataError);
}

TEST(Windows, MissingValuesAreRejected) {
  TimeSeriesTable t = ramp_table(20);
  t.columns[1].missing[3] = 1;
  EXPECT_THROW(make_windows(t, layout_for(t, {kDailyMeanId}), 12, 1), DataError);
}

TEST(Windows, CacheRoundTripAndCorruption) {
  const TimeSeriesTable t = ramp_table(40);
  const WindowSet w = make_windows(t, layout_for(t, {19, kDailyMeanId}), 12, 1);
  const auto p = temp_file("windows.lcwn");
  save_windows(w, p.string());
  const WindowSet back = load_windows(p.string());
  EXPECT_EQ(back.dyn, w.dyn);
  EXPECT_EQ(back.stat, w.stat);
  EXPECT_EQ(back.target, w.target);
  EXPECT_EQ(back.time, w.time);

  std::string bytes = binary::slurp(p.string());
  bytes[100] ^= 1;
  binary::dump(p.string(), bytes);
  EXPECT_THROW(load_windows(p.string()), FormatError);
  binary::dump(p.string(), bytes.substr(0, 50));
  EXPECT_THROW(load_windows(p.string()), FormatError);
  std::filesystem::remove(p);
}

TEST(Split, SevenTwoOne) {
  const TimeSeriesTable t = ramp_table(112);
  const WindowSet w = make_windows(t, layout_for(t, {19}), 12, 1);
  ASSERT_EQ(w.size(), 100u);
  const SplitData s = split_and_normalize(w, {"load"}, {"tmax"});
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.val.size(), 20u);
  EXPECT_EQ(s.test.size(), 10u);
  EXPECT_EQ(s.val.time.front(), w.time[70]);
  EXPECT_EQ(s.test.time.front(), w.time[90]);
}

TEST(Split, TrainColumnsAreStandardized) {
  Rng rng(5);
  WindowSet w{1, 1, 1, {}, {}, {}, {}};
  for (int i = 0; i < 200; ++i) {
    const double d[] = {10.0 + 2.0 * rng.normal()};
    const double s[] = {3.0};
    w.push_back(d, s, rng.uniform(0.0, 50.0), i);
  }
  WarningCapture warnings;
  const SplitData split = split_and_normalize(w, {"load"}, {"flat"});
  EXPECT_TRUE(warnings.contains("'flat'"));
  double mean = 0.0, sq = 0.0;
  for (double v : split.train.dyn) mean += v;
  mean /= static_cast<double>(split.train.dyn.size());
  for (double v : split.train.dyn) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(split.train.dyn.size())), 1.0, 1e-12);
  for (double v : split.train.stat) EXPECT_EQ(v, 3.0);
  EXPECT_EQ(split.scaler.stat[0].std, 1.0);
}

TEST(Split, DenormalizingRecoversWindows) {
  Rng rng(8);
  WindowSet w{12, 3, 2, {}, {}, {}, {}};
  std::vector<double> d(36), s(2);
  for (int i = 0; i < 50; ++i) {
    for (auto& v : d) v = rng.uniform(-500.0, 2000.0);
    for (auto& v : s) v = rng.uniform(0.0, 30.0);
    w.push_back(d, s, rng.uniform(100.0, 900.0), i);
  }
  const SplitData split = split_and_normalize(w, {"a", "b", "c"}, {"x", "y"});
  WindowSet all = split.train;
  for (const WindowSet* part : {&split.val, &split.test}) {
    all.dyn.insert(all.dyn.end(), part->dyn.begin(), part->dyn.end());
    all.stat.insert(all.stat.end(), part->stat.begin(), part->stat.end());
    all.target.insert(all.target.end(), part->target.begin(), part->target.end());
    all.time.insert(all.time.end(), part->time.begin(), part->time.end());
  }
  split.scaler.invert(all);
  for (std::size_t i = 0; i < w.dyn.size(); ++i) EXPECT_NEAR(all.dyn[i], w.dyn[i], 1e-12 * std::abs(w.dyn[i]) + 1e-12);
  for (std::size_t i = 0; i < w.stat.size(); ++i) EXPECT_NEAR(all.stat[i], w.stat[i], 1e-12 * 30.0);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(all.target[i], w.target[i], 1e-12 * 900.0);
}

TEST(Split, BadRatiosAreRejected) {
  const TimeSeriesTable t = ramp_table(40);
  const WindowSet w = make_windows(t, layout_for(t, {}), 12, 1);
  EXPECT_THROW(split_and_normalize(w, {"load"}, {}, {0.7, 0.2, 0.2}), ConfigError);
}

TEST(Scaler, JsonRoundTripAndVersionCheck) {
  Rng rng(9);
  WindowSet w{2, 1, 1, {}, {}, {}, {}};
  for (int i = 0; i < 20; ++i) {
    const double d[] = {rng.normal(), rng.normal()};
    const double s[] = {rng.normal()};
    w.push_back(d, s, rng.normal(), i);
  }
  const Scaler sc = fit_scaler(w, {"load"}, {"tmax"});
  const auto p = temp_file("scaler.json");
  save_scaler(sc, p.string());
  const Scaler back = load_scaler(p.string());
  EXPECT_EQ(back.dyn[0].mean, sc.dyn[0].mean);
  EXPECT_EQ(back.stat[0].std, sc.stat[0].std);
  EXPECT_EQ(back.target.mean, sc.target.mean);
  EXPECT_EQ(back.stat_names, sc.stat_names);

  nlohmann::json j = to_json(sc);
  j["version"] = 99;
  std::ofstream(p) << j.dump();
  try {
    load_scaler(p.string());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
  }
  WindowSet wrong{3, 1, 1, {}, {}, {}, {}};
  EXPECT_THROW(sc.apply(wrong), DataError);
  std::filesystem::remove(p);
}

TEST(Pipeline, IdempotentOnCleanInput) {
  WarningCapture warnings;
  const LoadSeries s = smooth_series(35);
  const WeatherTable w = weather_for(s);
  const HolidayCalendar h{{day_of(s.time.front()) + 10, "tomb_sweeping"}};
  const PreparedTable first = prepare_table(s, w, h);
  EXPECT_TRUE(first.outliers.empty());
  LoadSeries again = s;
  again.load = first.table.by_id(kLoadId).values;
  const PreparedTable second = prepare_table(again, w, h);
  ASSERT_EQ(first.table.columns.size(), second.table.columns.size());
  for (std::size_t c = 0; c < first.table.columns.size(); ++c) {
    EXPECT_EQ(first.table.columns[c].values, second.table.columns[c].values) << first.table.columns[c].name;
  }
  const FeatureLayout layout = layout_for(first.table, kDefaultRetained);
  EXPECT_EQ(make_windows(first.table, layout, 12).dyn, make_windows(second.table, layout, 12).dyn);
}

TEST(Pipeline, GapsAndOutliersAreRepaired) {
  WarningCapture warnings;
  LoadSeries s = smooth_series(35);
  mask(s, 500);
  mask(s, 501);
  s.load[20 * kPointsPerDay + 10] *= 10.0;
  const PreparedTable p = prepare_table(s, weather_for(s), {});
  EXPECT_EQ(p.missing_filled, 2u);
  ASSERT_EQ(p.outliers.size(), 1u);
  for (char m : p.table.by_id(kLoadId).missing) EXPECT_EQ(m, 0);
  const FeatureLayout layout = layout_for(p.table, kDefaultRetained);
  EXPECT_EQ(layout.dynamic.size(), 5u);
  EXPECT_EQ(layout.stat.size(), 10u);
  const WindowSet win = make_windows(p.table, layout, 12);
  EXPECT_EQ(win.size(), p.table.rows() - 12);
}
