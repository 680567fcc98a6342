#pragma once

#include <map>
#include <string>
#include <vector>

#include "loadcast/models/train.hpp"
#include "loadcast/models/weights_io.hpp"
#include "loadcast/preprocess/csv.hpp"
#include "loadcast/preprocess/dataset.hpp"

// One input window as CSV, in original units:
//   row,<dynamic names...>,<static names...>
//   1,...            history step 1 (oldest); static cells empty
//   ...
//   T,...            history step T (latest)
//   static,...       static features at the target time; dynamic cells empty

namespace loadcast::harness {

inline constexpr const char* kStaticRow = "static";

inline void write_window_csv(const std::string& path, const preprocess::Scaler& scaler, const WindowSet& raw,
                             std::size_t index) {
  raw.check();
  scaler.check(raw);
  if (index >= raw.size()) throw DataError("window index " + std::to_string(index) + " is out of range");
  std::vector<std::string> header{"row"};
  header.insert(header.end(), scaler.dyn_names.begin(), scaler.dyn_names.end());
  header.insert(header.end(), scaler.stat_names.begin(), scaler.stat_names.end());
  preprocess::CsvWriter w(path, header);
  const std::size_t T = raw.steps, D = raw.dyn_features, S = raw.stat_features;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::string> row{std::to_string(t + 1)};
    for (std::size_t f = 0; f < D; ++f) row.push_back(preprocess::format_number(raw.dyn[(index * T + t) * D + f]));
    row.resize(1 + D + S);
    w.row(row);
  }
  std::vector<std::string> row(1 + D, "");
  row[0] = kStaticRow;
  for (std::size_t f = 0; f < S; ++f) row.push_back(preprocess::format_number(raw.stat[index * S + f]));
  w.row(row);
}

/// Reads one window laid out for `scaler`. Columns may come in any order;
/// missing, unknown or empty cells are rejected by name.
inline WindowSet parse_window_csv(const preprocess::CsvTable& t, const preprocess::Scaler& scaler) {
  const std::size_t T = scaler.steps, D = scaler.dyn_names.size(), S = scaler.stat_names.size();
  const std::size_t row_col = t.column("row");
  std::map<std::string, std::size_t> known;
  for (std::size_t f = 0; f < D; ++f) known.emplace(scaler.dyn_names[f], f);
  for (std::size_t f = 0; f < S; ++f) known.emplace(scaler.stat_names[f], D + f);
  std::vector<std::size_t> col_of(D + S, 0);
  std::vector<bool> seen(D + S, false);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == row_col) continue;
    auto it = known.find(t.header[c]);
    if (it == known.end()) throw DataError(t.source + ": unexpected column '" + t.header[c] + "'");
    if (seen[it->second]) throw DataError(t.source + ": duplicate column '" + t.header[c] + "'");
    seen[it->second] = true;
    col_of[it->second] = c;
  }
  for (const auto& [name, k] : known) {
    if (!seen[k]) throw DataError(t.source + ": missing column '" + name + "'");
  }
  if (t.rows.size() != T + 1) {
    throw DataError(t.source + ": expected " + std::to_string(T) + " history rows and one '" + kStaticRow +
                    "' row, found " + std::to_string(t.rows.size()) + " rows");
  }
  auto cell = [&](std::size_t r, std::size_t k) {
    const double v = preprocess::parse_number(t.rows[r][col_of[k]], t, r, col_of[k]);
    if (std::isnan(v)) {
      throw DataError(t.source + ": column '" + t.header[col_of[k]] + "' row " + std::to_string(r + 1) + " is empty");
    }
    return v;
  };
  std::vector<double> dyn(T * D), stat(S);
  for (std::size_t r = 0; r < T; ++r) {
    if (t.rows[r][row_col] != std::to_string(r + 1)) {
      throw DataError(t.source + ": row " + std::to_string(r + 1) + " must be labelled '" + std::to_string(r + 1) +
                      "', found '" + t.rows[r][row_col] + "'");
    }
    for (std::size_t f = 0; f < D; ++f) dyn[r * D + f] = cell(r, f);
  }
  if (t.rows[T][row_col] != kStaticRow) {
    throw DataError(t.source + ": last row must be labelled '" + kStaticRow + "', found '" + t.rows[T][row_col] + "'");
  }
  for (std::size_t f = 0; f < S; ++f) stat[f] = cell(T, D + f);
  WindowSet w{T, D, S, {}, {}, {}, {}};
  w.push_back(dyn, stat, 0.0, 0);
  return w;
}

inline WindowSet read_window_csv(const std::string& path, const preprocess::Scaler& scaler) {
  return parse_window_csv(preprocess::read_csv(path), scaler);
}

/// The weights and the scaler must describe the same window layout.
inline void check_compatible(const models::ModelSpec& spec, const preprocess::Scaler& scaler) {
  if (spec.steps != scaler.steps || spec.dyn_features != scaler.dyn.size() ||
      spec.stat_features != scaler.stat.size()) {
    throw DataError("weights expect T=" + std::to_string(spec.steps) + ", " + std::to_string(spec.dyn_features) +
                    " dynamic and " + std::to_string(spec.stat_features) + " static features; scaler has T=" +
                    std::to_string(scaler.steps) + ", " + std::to_string(scaler.dyn.size()) + " and " +
                    std::to_string(scaler.stat.size()));
  }
}

/// Forecasts in original units for raw (unscaled) windows.
inline std::vector<double> predict_raw(const models::ForecastModel& model, const preprocess::Scaler& scaler,
                                       WindowSet raw) {
  check_compatible(model.spec, scaler);
  scaler.apply(raw);
  std::vector<double> out = models::predict(model, raw);
  for (double& v : out) v = scaler.target.invert(v);
  return out;
}

/// Loads weights, scaler and one window file and returns the forecast.
inline double predict_from_files(const std::string& weights_path, const std::string& scaler_path,
                                 const std::string& window_path) {
  const models::ForecastModel model = models::load_weights(weights_path);
  const preprocess::Scaler scaler = preprocess::load_scaler(scaler_path);
  check_compatible(model.spec, scaler);
  return predict_raw(model, scaler, read_window_csv(window_path, scaler)).front();
}

}  // namespace loadcast::harness
