#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/preprocess/records.hpp"

namespace loadcast::preprocess {

inline constexpr int kDonorDays = 7;

/// Fills every masked load cell with the mean of the values at the same time
/// of day on the 7 days before and the 7 days after. Only cells that were
/// present on input act as donors.
inline LoadSeries impute_missing(const LoadSeries& in) {
  in.check();
  LoadSeries out = in;
  const auto n = static_cast<std::int64_t>(in.size());
  const auto day = static_cast<std::int64_t>(kPointsPerDay);
  std::vector<std::string> unrecoverable;
  std::size_t unrecoverable_count = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!in.missing[static_cast<std::size_t>(i)]) continue;
    double sum = 0.0;
    int count = 0;
    for (int d = -kDonorDays; d <= kDonorDays; ++d) {
      const std::int64_t j = i + d * day;
      if (d == 0 || j < 0 || j >= n || in.missing[static_cast<std::size_t>(j)]) continue;
      sum += in.load[static_cast<std::size_t>(j)];
      ++count;
    }
    if (count == 0) {
      if (unrecoverable.size() < 10) unrecoverable.push_back(format_timestamp(in.time[static_cast<std::size_t>(i)]));
      ++unrecoverable_count;
      continue;
    }
    out.load[static_cast<std::size_t>(i)] = sum / count;
    out.missing[static_cast<std::size_t>(i)] = 0;
  }
  if (unrecoverable_count > 0) {
    std::string list;
    for (const auto& t : unrecoverable) list += (list.empty() ? "" : ", ") + t;
    if (unrecoverable_count > unrecoverable.size()) list += ", ...";
    throw DataError("unrecoverable gap: " + std::to_string(unrecoverable_count) +
                    " missing load value(s) have no donor within 7 days: " + list);
  }
  return out;
}

struct OutlierOptions {
  double k = 5.0;             // threshold in units of the median absolute deviation
  std::int64_t window_days = 28;
};

struct CleanedLoad {
  LoadSeries series;                  // outliers masked, then imputed
  std::vector<char> is_holiday;       // per point
  std::vector<std::size_t> outliers;  // indices that were masked as outliers
};

inline double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Adds the holiday flag and masks non-holiday points that sit more than
/// k * MAD from the median of their reference group, then imputes. The group
/// of a point holds the non-holiday values at the same time of day, on days
/// of the same kind (weekday or weekend), inside a window of `window_days`
/// days around it. Holidays are never masked.
inline CleanedLoad flag_and_clean_outliers(const LoadSeries& in, const HolidayCalendar& holidays,
                                           const OutlierOptions& opt = {}) {
  in.check();
  if (opt.k <= 0.0) throw ConfigError("outlier threshold k must be positive");
  if (opt.window_days < 1) throw ConfigError("outlier window must span at least one day");
  const auto n = static_cast<std::int64_t>(in.size());
  const auto per_day = static_cast<std::int64_t>(kPointsPerDay);
  CleanedLoad res;
  res.is_holiday.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) res.is_holiday[i] = holidays.count(day_of(in.time[i])) ? 1 : 0;

  LoadSeries masked = in;
  const std::int64_t before = opt.window_days / 2;
  const std::int64_t after = opt.window_days - before - 1;
  const std::int64_t first_day = day_of(in.time.front()), last_day = day_of(in.time.back());
  std::size_t shrunk = 0;
  std::vector<double> group, dev;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (in.missing[ui] || res.is_holiday[ui]) continue;
    const std::int64_t d = day_of(in.time[ui]);
    const bool weekend = is_weekend_day(d);
    if (d - before < first_day || d + after > last_day) ++shrunk;
    group.clear();
    for (std::int64_t e = -before; e <= after; ++e) {
      const std::int64_t j = i + e * per_day;
      if (j < 0 || j >= n) continue;
      const auto uj = static_cast<std::size_t>(j);
      if (in.missing[uj] || res.is_holiday[uj] || is_weekend_day(d + e) != weekend) continue;
      group.push_back(in.load[uj]);
    }
    if (group.size() < 3) continue;
    const double med = median_of(group);
    dev.resize(group.size());
    for (std::size_t g = 0; g < group.size(); ++g) dev[g] = std::abs(group[g] - med);
    const double mad = median_of(dev);
    if (std::abs(in.load[ui] - med) > opt.k * mad) {
      masked.load[ui] = std::nan("");
      masked.missing[ui] = 1;
      res.outliers.push_back(ui);
    }
  }
  if (shrunk > 0) {
    warn("outlier window shrunk at the series boundary for " + std::to_string(shrunk) + " point(s)");
  }
  res.series = impute_missing(masked);
  return res;
}

}  // namespace loadcast::preprocess
