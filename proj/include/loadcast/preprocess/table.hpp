#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "loadcast/core/errors.hpp"
#include "loadcast/preprocess/calendar.hpp"
#include "loadcast/preprocess/csv.hpp"

namespace loadcast::preprocess {

enum class ColumnKind { kFloat, kOrdinal, kCategorical, kBoolean };

inline const char* kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::kFloat: return "float";
    case ColumnKind::kOrdinal: return "ordinal";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kBoolean: return "boolean";
  }
  return "?";
}

/// Which model branch a feature feeds.
enum class FeatureGroup { kDynamic, kStatic };

struct Column {
  int id = 0;  // catalog id; 0 is the load itself
  std::string name;
  ColumnKind kind = ColumnKind::kFloat;
  FeatureGroup group = FeatureGroup::kStatic;
  std::vector<double> values;
  std::vector<char> missing;
};

/// Timestamped columns on the 15-minute load grid.
struct TimeSeriesTable {
  std::vector<std::int64_t> time;
  std::vector<Column> columns;

  std::size_t rows() const { return time.size(); }

  const Column* find(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const Column& column(std::string_view name) const {
    if (const Column* c = find(name)) return *c;
    throw DataError("table has no column '" + std::string(name) + "'");
  }

  const Column& by_id(int id) const {
    for (const auto& c : columns) {
      if (c.id == id) return c;
    }
    throw DataError("table has no feature with id " + std::to_string(id));
  }

  Column& add(int id, std::string name, ColumnKind kind, FeatureGroup group, std::vector<double> values) {
    if (values.size() != time.size()) {
      throw ShapeError("column '" + name + "' has " + std::to_string(values.size()) + " values for " +
                       std::to_string(time.size()) + " rows");
    }
    if (find(name)) throw DataError("duplicate column '" + name + "'");
    Column c{id, std::move(name), kind, group, std::move(values), {}};
    c.missing.assign(time.size(), 0);
    columns.push_back(std::move(c));
    return columns.back();
  }

  void check() const {
    for (std::size_t i = 1; i < time.size(); ++i) {
      if (time[i] <= time[i - 1]) throw DataError("table timestamps are not strictly increasing");
    }
    for (const auto& c : columns) {
      if (c.values.size() != time.size() || c.missing.size() != time.size()) {
        throw ShapeError("column '" + c.name + "' length does not match the table");
      }
    }
  }
};

inline void write_table_csv(const std::string& path, const TimeSeriesTable& t) {
  std::vector<std::string> header{"timestamp"};
  for (const auto& c : t.columns) header.push_back(c.name);
  CsvWriter w(path, header);
  std::vector<std::string> row(header.size());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    row[0] = format_timestamp(t.time[r]);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      row[c + 1] = t.columns[c].missing[r] ? "" : format_number(t.columns[c].values[r]);
    }
    w.row(row);
  }
}

}  // namespace loadcast::preprocess
