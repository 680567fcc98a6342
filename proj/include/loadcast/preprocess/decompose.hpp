#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "loadcast/preprocess/encode.hpp"

namespace loadcast::preprocess {

inline constexpr std::size_t kDailyPeriod = kPointsPerDay;

struct Decomposition {
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> residual;
  std::size_t inexact = 0;  // points where no double residual closes the sum exactly
};

/// The reconstruction order that decompose() guarantees to be exact.
inline double recombine(double trend, double seasonal, double residual) { return (trend + seasonal) + residual; }

inline std::vector<double> reconstruct(const Decomposition& d) {
  std::vector<double> out(d.trend.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = recombine(d.trend[i], d.seasonal[i], d.residual[i]);
  return out;
}

namespace detail {

// Residual r with fl(base + r) == x. fl(x - base) satisfies this whenever the
// subtraction is exact; otherwise neighbouring doubles are tried. When x is
// far smaller than base, or of opposite sign, such a double may not exist and
// the nearest one is kept.
inline bool fit_residual(double x, double base, double& r) {
  const double nearest = x - base;
  r = nearest;
  for (int step = 0; step < 8 && base + r != x; ++step) {
    r = std::nextafter(r, base + r < x ? INFINITY : -INFINITY);
  }
  if (base + r == x) return true;
  r = nearest;
  return false;
}

}  // namespace detail

/// Classical additive decomposition. Trend is the centered moving average
/// over one period (2 x period for even periods) with edges filled by the
/// nearest defined value; seasonal is the per-phase mean of the detrended
/// interior, centered to sum to zero over a period; residual closes the sum.
inline Decomposition decompose(std::span<const double> x, std::size_t period = kDailyPeriod) {
  const std::size_t n = x.size();
  if (period < 2) throw ConfigError("decomposition period must be at least 2");
  if (n < 2 * period) {
    throw DataError("decomposition needs at least " + std::to_string(2 * period) + " points, got " + std::to_string(n));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("decomposition input has missing or non-finite values");
  }
  Decomposition d;
  d.trend.assign(n, 0.0);
  const std::size_t half = period / 2;
  const bool even = period % 2 == 0;
  const std::size_t lo = half, hi = n - half;  // defined trend on [lo, hi)
  for (std::size_t i = lo; i < hi; ++i) {
    double acc = 0.0;
    if (even) {
      acc = 0.5 * x[i - half] + 0.5 * x[i + half];
      for (std::size_t j = i - half + 1; j < i + half; ++j) acc += x[j];
    } else {
      for (std::size_t j = i - half; j <= i + half; ++j) acc += x[j];
    }
    d.trend[i] = acc / static_cast<double>(period);
  }
  for (std::size_t i = 0; i < lo; ++i) d.trend[i] = d.trend[lo];
  for (std::size_t i = hi; i < n; ++i) d.trend[i] = d.trend[hi - 1];

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t i = lo; i < hi; ++i) {
    phase_sum[i % period] += x[i] - d.trend[i];
    ++phase_count[i % period];
  }
  std::vector<double> phase_mean(period);
  double centre = 0.0;
  for (std::size_t p = 0; p < period; ++p) {
    phase_mean[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
    centre += phase_mean[p];
  }
  centre /= static_cast<double>(period);
  for (auto& v : phase_mean) v -= centre;

  d.seasonal.resize(n);
  d.residual.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.seasonal[i] = phase_mean[i % period];
    if (!detail::fit_residual(x[i], d.trend[i] + d.seasonal[i], d.residual[i])) ++d.inexact;
  }
  if (d.inexact > 0) {
    warn("decomposition: " + std::to_string(d.inexact) +
         " point(s) are too small relative to trend + seasonal to reconstruct bit-exactly");
  }
  return d;
}

/// Mean of each calendar day's load broadcast to the day's points.
inline std::vector<double> daily_mean(std::span<const std::int64_t> time, std::span<const double> load) {
  std::map<std::int64_t, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < time.size(); ++i) {
    auto& [sum, count] = acc[day_of(time[i])];
    sum += load[i];
    ++count;
  }
  std::vector<double> out(time.size());
  for (std::size_t i = 0; i < time.size(); ++i) {
    const auto& [sum, count] = acc.at(day_of(time[i]));
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

/// Adds the daily mean load (37) and the seasonal, trend and residual
/// series (38-40) of the load column.
inline void derive_load_features(TimeSeriesTable& t, std::size_t period = kDailyPeriod) {
  const Column& load = t.by_id(kLoadId);
  for (char m : load.missing) {
    if (m) throw DataError("derive_load_features: load must be imputed first");
  }
  std::vector<double> mean = daily_mean(t.time, load.values);
  Decomposition d = decompose(load.values, period);
  t.add(kDailyMeanId, "daily_mean", ColumnKind::kFloat, FeatureGroup::kDynamic, std::move(mean));
  t.add(kSeasonalId, "seasonal", ColumnKind::kFloat, FeatureGroup::kDynamic, std::move(d.seasonal));
  t.add(kTrendId, "trend", ColumnKind::kFloat, FeatureGroup::kDynamic, std::move(d.trend));
  t.add(kResidualId, "residual", ColumnKind::kFloat, FeatureGroup::kDynamic, std::move(d.residual));
}

}  // namespace loadcast::preprocess
