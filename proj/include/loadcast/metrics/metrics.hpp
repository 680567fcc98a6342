#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/errors.hpp"
#include "loadcast/preprocess/csv.hpp"

namespace loadcast::metrics {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct MetricsReport {
  double mape = kUndefined;  // percent; undefined when any actual value is zero
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = kUndefined;  // undefined for a constant actual series
  std::size_t n = 0;
  std::vector<std::size_t> zero_actual;   // indices that make MAPE undefined
  double mape_nonzero = kUndefined;       // MAPE over the remaining points

  bool mape_defined() const { return zero_actual.empty(); }
  bool r2_defined() const { return !std::isnan(r2); }
};

namespace detail {

inline void check_series(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) {
    throw ShapeError("evaluate: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(actual.size()) + " actual values");
  }
  if (pred.size() < 2) throw DataError("evaluate: needs at least 2 samples");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(actual[i])) {
      throw NumericError("evaluate: non-finite value at index " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// MAPE, MAE, RMSE and R^2 of a prediction series.
inline MetricsReport evaluate(std::span<const double> pred, std::span<const double> actual) {
  detail::check_series(pred, actual);
  MetricsReport r;
  r.n = pred.size();
  const double n = static_cast<double>(r.n);
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0, mean = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double e = pred[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    mean += actual[i];
    if (actual[i] == 0.0) {
      r.zero_actual.push_back(i);
    } else {
      pct_sum += std::abs(e) / std::abs(actual[i]);
      ++pct_count;
    }
  }
  mean /= n;
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  if (pct_count > 0) r.mape_nonzero = 100.0 * pct_sum / static_cast<double>(pct_count);
  if (r.zero_actual.empty()) r.mape = r.mape_nonzero;
  double total = 0.0;
  for (double y : actual) total += (y - mean) * (y - mean);
  if (total > 0.0) r.r2 = 1.0 - sq_sum / total;
  return r;
}

struct Histogram {
  std::vector<double> edges;          // bins + 1
  std::vector<std::size_t> counts;
  std::vector<double> mass;           // counts / n, sums to 1
  std::vector<double> density;        // mass / bin width, integrates to 1

  std::size_t bins() const { return counts.size(); }
};

/// Equal-width histogram over the observed range. All-equal values give a
/// single unit-width bin centred on the value, with a warning.
inline Histogram histogram(std::span<const double> v, std::size_t bins, const std::string& what) {
  if (v.size() < 2) throw DataError("histogram: needs at least 2 values");
  if (bins < 2) throw ConfigError("histogram: needs at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  Histogram h;
  const double n = static_cast<double>(v.size());
  if (!(hi > lo)) {
    warn(what + ": all values equal " + preprocess::format_number(lo) + "; single-bin histogram");
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {v.size()};
    h.mass = {1.0};
    h.density = {1.0};
    return h;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    h.mass.push_back(static_cast<double>(h.counts[b]) / n);
    h.density.push_back(h.mass.back() / width);
  }
  return h;
}

struct ErrorDensity {
  Histogram relative;  // (pred - actual) / |actual| in percent, zero actuals skipped
  Histogram absolute;  // pred - actual, target units
};

inline ErrorDensity error_density(std::span<const double> pred, std::span<const double> actual, std::size_t bins) {
  detail::check_series(pred, actual);
  std::vector<double> rel, abs;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - actual[i];
    abs.push_back(e);
    if (actual[i] != 0.0) rel.push_back(100.0 * e / std::abs(actual[i]));
  }
  if (rel.size() < 2) throw DataError("error_density: fewer than 2 nonzero actual values");
  return {histogram(rel, bins, "relative error"), histogram(abs, bins, "absolute error")};
}

/// One row per split: split,MAPE,MAE,RMSE,R2. Undefined values are written
/// as "nan".
struct MetricsRow {
  std::string split;
  MetricsReport report;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  using preprocess::format_number;
  preprocess::CsvWriter w(path, {"split", "MAPE", "MAE", "RMSE", "R2"});
  for (const auto& r : rows) {
    w.row({r.split, format_number(r.report.mape), format_number(r.report.mae), format_number(r.report.rmse),
           format_number(r.report.r2)});
  }
}

struct DensityRow {
  std::string split;
  ErrorDensity density;
};

inline void write_error_density_csv(const std::string& path, const std::vector<DensityRow>& rows) {
  using preprocess::format_number;
  preprocess::CsvWriter w(path, {"split", "kind", "bin_lo", "bin_hi", "count", "mass", "density"});
  auto emit = [&](const std::string& split, const char* kind, const Histogram& h) {
    for (std::size_t b = 0; b < h.bins(); ++b) {
      w.row({split, kind, format_number(h.edges[b]), format_number(h.edges[b + 1]), std::to_string(h.counts[b]),
             format_number(h.mass[b]), format_number(h.density[b])});
    }
  };
  for (const auto& r : rows) {
    emit(r.split, "relative_pct", r.density.relative);
    emit(r.split, "absolute", r.density.absolute);
  }
}

}  // namespace loadcast::metrics
