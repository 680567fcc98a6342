#pragma once

#include <vector>

#include "loadcast/preprocess/clean.hpp"
#include "loadcast/preprocess/dataset.hpp"
#include "loadcast/preprocess/decompose.hpp"
#include "loadcast/preprocess/encode.hpp"

namespace loadcast::preprocess {

/// Retained feature ids used when no screening result is supplied.
inline const std::vector<int> kDefaultRetained = {17, 18, 19, 20, 21, 22, 23, 25, 29, 35, 37, 38, 39, 40};

struct PreprocessOptions {
  OutlierOptions outliers;
  std::size_t period = kDailyPeriod;
};

struct PreparedTable {
  TimeSeriesTable table;
  std::size_t missing_filled = 0;
  std::vector<std::size_t> outliers;
};

/// Cleaning, encoding and load-derived features in one pass.
inline PreparedTable prepare_table(const LoadSeries& load, const WeatherTable& weather,
                                   const HolidayCalendar& holidays, const PreprocessOptions& opt = {}) {
  PreparedTable out;
  for (char m : load.missing) out.missing_filled += m ? 1 : 0;
  CleanedLoad cleaned = flag_and_clean_outliers(load, holidays, opt.outliers);
  out.outliers = cleaned.outliers;
  out.table = encode_features(cleaned, weather, holidays);
  derive_load_features(out.table, opt.period);
  out.table.check();
  return out;
}

}  // namespace loadcast::preprocess
