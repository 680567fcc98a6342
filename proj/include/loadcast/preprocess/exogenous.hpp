#pragma once

#include <map>
#include <string>
#include <vector>

#include "loadcast/preprocess/records.hpp"
#include "loadcast/preprocess/table.hpp"

// Optional extra series on the load grid:
//   exogenous  timestamp,<name>,<name>,...

namespace loadcast::preprocess {

/// Ids given to exogenous columns, in file order.
inline constexpr int kFirstExogenousId = 41;

struct ExogenousTable {
  std::vector<std::int64_t> time;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // one per name

  std::size_t size() const { return time.size(); }
  bool empty() const { return names.empty(); }
};

inline ExogenousTable read_exogenous_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("timestamp");
  ExogenousTable ex;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == ct) continue;
    ex.names.push_back(t.header[c]);
    cols.push_back(c);
  }
  if (cols.empty()) throw DataError(path + ": no series columns besides 'timestamp'");
  ex.columns.assign(cols.size(), {});
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      ex.time.push_back(parse_timestamp(t.rows[r][ct]));
    } catch (const DataError& e) {
      throw DataError(path + ": column 'timestamp' row " + std::to_string(r + 1) + ": " + e.what());
    }
    if (r > 0 && ex.time[r] <= ex.time[r - 1]) {
      throw DataError(path + ": timestamps are not strictly increasing at row " + std::to_string(r + 1));
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = parse_number(t.rows[r][cols[k]], t, r, cols[k]);
      if (std::isnan(v)) {
        throw DataError(path + ": column '" + ex.names[k] + "' row " + std::to_string(r + 1) + " is empty");
      }
      ex.columns[k].push_back(v);
    }
  }
  return ex;
}

inline void write_exogenous_csv(const std::string& path, const ExogenousTable& ex) {
  std::vector<std::string> header{"timestamp"};
  header.insert(header.end(), ex.names.begin(), ex.names.end());
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    std::vector<std::string> row{format_timestamp(ex.time[i])};
    for (const auto& c : ex.columns) row.push_back(format_number(c[i]));
    w.row(row);
  }
}

/// Joins exogenous series onto the table by timestamp as dynamic float
/// columns with ids kFirstExogenousId, kFirstExogenousId + 1, ...
inline void append_exogenous(TimeSeriesTable& t, const ExogenousTable& ex) {
  std::map<std::int64_t, std::size_t> row_of;
  for (std::size_t i = 0; i < ex.size(); ++i) row_of.emplace(ex.time[i], i);
  std::vector<std::size_t> rows(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto it = row_of.find(t.time[i]);
    if (it == row_of.end()) throw DataError("exogenous series have no value at " + format_timestamp(t.time[i]));
    rows[i] = it->second;
  }
  for (std::size_t k = 0; k < ex.names.size(); ++k) {
    std::vector<double> v(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) v[i] = ex.columns[k][rows[i]];
    t.add(kFirstExogenousId + static_cast<int>(k), ex.names[k], ColumnKind::kFloat, FeatureGroup::kDynamic, std::move(v));
  }
}

}  // namespace loadcast::preprocess
