#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "loadcast/core/errors.hpp"

namespace loadcast::preprocess {

/// Header plus string cells. Fields are comma separated without quoting.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a required column; throws naming the column otherwise.
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DataError(source + ": missing required column '" + std::string(name) + "'");
  }

  void require(const std::vector<std::string>& names) const {
    for (const auto& n : names) column(n);
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, std::string source) {
  CsvTable t;
  t.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells = detail::split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(t.source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw DataError(t.source + ": empty file, header required");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_csv(in, path);
}

/// Parses a numeric cell; an empty cell or "nan" reads as NaN (missing).
inline double parse_number(const std::string& cell, const CsvTable& t, std::size_t row, std::size_t col) {
  if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw DataError(t.source + ": column '" + t.header[col] + "' row " + std::to_string(row + 1) +
                    ": not a number: '" + cell + "'");
  }
  return v;
}

/// Shortest text that reads back to exactly the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw DataError("cannot write " + path);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\r") != std::string::npos) {
        throw FormatError(path_ + ": cell '" + cells[i] + "' contains a separator");
      }
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw DataError("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace loadcast::preprocess
