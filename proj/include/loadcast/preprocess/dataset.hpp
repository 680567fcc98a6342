#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "loadcast/core/binary_io.hpp"
#include "loadcast/core/windows.hpp"
#include "loadcast/preprocess/encode.hpp"

namespace loadcast::preprocess {

/// Feature ids feeding each branch. The dynamic list starts with the load.
struct FeatureLayout {
  std::vector<int> dynamic;
  std::vector<int> stat;
};

/// Splits retained ids by group; the load history is always the first
/// dynamic column.
inline FeatureLayout layout_for(const TimeSeriesTable& t, const std::vector<int>& retained) {
  FeatureLayout l;
  l.dynamic.push_back(kLoadId);
  for (int id : retained) {
    if (id == kLoadId) continue;
    const Column& c = t.by_id(id);
    (c.group == FeatureGroup::kDynamic ? l.dynamic : l.stat).push_back(id);
  }
  return l;
}

inline std::vector<std::string> column_names(const TimeSeriesTable& t, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(t.by_id(id).name);
  return out;
}

/// Sliding windows with stride 1. Window i holds rows i .. i+T-1 of the
/// dynamic columns, the static columns at the target row i+T-1+horizon, and
/// the load at that row as target.
inline WindowSet make_windows(const TimeSeriesTable& t, const FeatureLayout& layout, std::size_t steps,
                              std::size_t horizon = 1) {
  if (steps == 0 || horizon == 0) throw ConfigError("make_windows: steps and horizon must be positive");
  const std::size_t n = t.rows();
  if (n < steps + horizon) {
    throw DataError("make_windows: " + std::to_string(n) + " rows are too few for T=" + std::to_string(steps) +
                    " and horizon " + std::to_string(horizon));
  }
  auto gather = [&](const std::vector<int>& ids) {
    std::vector<const Column*> cols;
    for (int id : ids) {
      const Column& c = t.by_id(id);
      for (char m : c.missing) {
        if (m) throw DataError("make_windows: column '" + c.name + "' has missing values");
      }
      cols.push_back(&c);
    }
    return cols;
  };
  const auto dyn = gather(layout.dynamic);
  const auto stat = gather(layout.stat);
  const Column& load = t.by_id(kLoadId);
  const std::size_t count = n - steps - horizon + 1;
  WindowSet w{steps, dyn.size(), stat.size(), {}, {}, {}, {}};
  w.dyn.reserve(count * steps * dyn.size());
  w.stat.reserve(count * stat.size());
  std::vector<double> d(steps * dyn.size()), s(stat.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t target_row = i + steps - 1 + horizon;
    for (std::size_t r = 0; r < steps; ++r) {
      for (std::size_t f = 0; f < dyn.size(); ++f) d[r * dyn.size() + f] = dyn[f]->values[i + r];
    }
    for (std::size_t f = 0; f < stat.size(); ++f) s[f] = stat[f]->values[target_row];
    w.push_back(d, s, load.values[target_row], t.time[target_row]);
  }
  return w;
}

struct SplitRatios {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;

  void validate() const {
    if (train <= 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
      throw ConfigError("split ratios must be non-negative, train positive, and sum to 1");
    }
  }
};

inline constexpr int kScalerVersion = 1;

struct Standardizer {
  double mean = 0.0;
  double std = 1.0;

  double apply(double v) const { return (v - mean) / std; }
  double invert(double v) const { return v * std + mean; }
};

/// z-score parameters fitted on the training windows.
struct Scaler {
  std::size_t steps = 0;
  std::vector<std::string> dyn_names;
  std::vector<std::string> stat_names;
  std::vector<Standardizer> dyn;
  std::vector<Standardizer> stat;
  Standardizer target;

  void check(const WindowSet& w) const {
    if (w.steps != steps || w.dyn_features != dyn.size() || w.stat_features != stat.size()) {
      throw DataError("scaler expects T=" + std::to_string(steps) + ", " + std::to_string(dyn.size()) +
                      " dynamic and " + std::to_string(stat.size()) + " static features; windows have T=" +
                      std::to_string(w.steps) + ", " + std::to_string(w.dyn_features) + " and " +
                      std::to_string(w.stat_features));
    }
  }

  void apply(WindowSet& w) const {
    check(w);
    const std::size_t dd = dyn.size();
    for (std::size_t i = 0; i < w.dyn.size(); ++i) w.dyn[i] = dyn[i % dd].apply(w.dyn[i]);
    if (!stat.empty()) {
      for (std::size_t i = 0; i < w.stat.size(); ++i) w.stat[i] = stat[i % stat.size()].apply(w.stat[i]);
    }
    for (auto& y : w.target) y = target.apply(y);
  }

  void invert(WindowSet& w) const {
    check(w);
    const std::size_t dd = dyn.size();
    for (std::size_t i = 0; i < w.dyn.size(); ++i) w.dyn[i] = dyn[i % dd].invert(w.dyn[i]);
    if (!stat.empty()) {
      for (std::size_t i = 0; i < w.stat.size(); ++i) w.stat[i] = stat[i % stat.size()].invert(w.stat[i]);
    }
    for (auto& y : w.target) y = target.invert(y);
  }
};

namespace detail {

// Population mean and standard deviation; a (near) constant column gets the
// identity transform.
inline Standardizer fit_column(const std::vector<double>& v, const std::string& name) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    warn("column '" + name + "' is constant on the training split; left unscaled");
    return {0.0, 1.0};
  }
  return {mean, sd};
}

}  // namespace detail

inline Scaler fit_scaler(const WindowSet& train, const std::vector<std::string>& dyn_names,
                         const std::vector<std::string>& stat_names) {
  if (train.empty()) throw DataError("cannot fit a scaler on an empty training split");
  if (dyn_names.size() != train.dyn_features || stat_names.size() != train.stat_features) {
    throw ShapeError("scaler: feature names do not match the windows");
  }
  Scaler s;
  s.steps = train.steps;
  s.dyn_names = dyn_names;
  s.stat_names = stat_names;
  const std::size_t dd = train.dyn_features, ds = train.stat_features;
  std::vector<double> col;
  for (std::size_t f = 0; f < dd; ++f) {
    col.clear();
    for (std::size_t i = f; i < train.dyn.size(); i += dd) col.push_back(train.dyn[i]);
    s.dyn.push_back(detail::fit_column(col, dyn_names[f]));
  }
  for (std::size_t f = 0; f < ds; ++f) {
    col.clear();
    for (std::size_t i = f; i < train.stat.size(); i += ds) col.push_back(train.stat[i]);
    s.stat.push_back(detail::fit_column(col, stat_names[f]));
  }
  s.target = detail::fit_column(train.target, "target");
  return s;
}

struct SplitData {
  WindowSet train, val, test;
  Scaler scaler;
};

inline std::size_t split_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

/// Contiguous chronological split; the scaler is fitted on the training part
/// and applied to all three.
inline SplitData split_and_normalize(const WindowSet& all, const std::vector<std::string>& dyn_names,
                                     const std::vector<std::string>& stat_names, const SplitRatios& ratios = {}) {
  ratios.validate();
  all.check();
  const std::size_t n = all.size();
  const std::size_t n_train = split_count(ratios.train, n);
  const std::size_t n_val = std::min(n - n_train, split_count(ratios.val, n));
  if (n_train < 2) throw DataError("split leaves fewer than two training windows");
  SplitData out;
  out.train = all.subset(0, n_train);
  out.val = all.subset(n_train, n_train + n_val);
  out.test = all.subset(n_train + n_val, n);
  out.scaler = fit_scaler(out.train, dyn_names, stat_names);
  out.scaler.apply(out.train);
  out.scaler.apply(out.val);
  out.scaler.apply(out.test);
  return out;
}

inline nlohmann::json to_json(const Scaler& s) {
  auto pack = [](const std::vector<Standardizer>& v) {
    nlohmann::json mean = nlohmann::json::array(), sd = nlohmann::json::array();
    for (const auto& z : v) {
      mean.push_back(z.mean);
      sd.push_back(z.std);
    }
    return nlohmann::json{{"mean", mean}, {"std", sd}};
  };
  return {{"format", "loadcast-scaler"},
          {"version", kScalerVersion},
          {"steps", s.steps},
          {"dyn_names", s.dyn_names},
          {"stat_names", s.stat_names},
          {"dyn", pack(s.dyn)},
          {"stat", pack(s.stat)},
          {"target", {{"mean", s.target.mean}, {"std", s.target.std}}}};
}

inline Scaler scaler_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "loadcast-scaler") throw FormatError("not a scaler file");
    const int version = j.at("version").get<int>();
    if (version != kScalerVersion) {
      throw FormatError("scaler format version " + std::to_string(version) + ", expected " +
                        std::to_string(kScalerVersion));
    }
    Scaler s;
    s.steps = j.at("steps").get<std::size_t>();
    s.dyn_names = j.at("dyn_names").get<std::vector<std::string>>();
    s.stat_names = j.at("stat_names").get<std::vector<std::string>>();
    auto unpack = [](const nlohmann::json& o, std::size_t expected) {
      const auto mean = o.at("mean").get<std::vector<double>>();
      const auto sd = o.at("std").get<std::vector<double>>();
      if (mean.size() != expected || sd.size() != expected) throw FormatError("scaler arrays have the wrong length");
      std::vector<Standardizer> v;
      for (std::size_t i = 0; i < expected; ++i) {
        if (!(sd[i] > 0)) throw FormatError("scaler has a non-positive scale");
        v.push_back({mean[i], sd[i]});
      }
      return v;
    };
    s.dyn = unpack(j.at("dyn"), s.dyn_names.size());
    s.stat = unpack(j.at("stat"), s.stat_names.size());
    s.target = {j.at("target").at("mean").get<double>(), j.at("target").at("std").get<double>()};
    if (!(s.target.std > 0)) throw FormatError("scaler has a non-positive target scale");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scaler: ") + e.what());
  }
}

inline void save_scaler(const Scaler& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json(s).dump(2) << '\n';
}

inline Scaler load_scaler(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  try {
    return scaler_from_json(j);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// Window cache layout (little-endian):
//   "LCWN" magic, u32 version, u64 steps, u64 dyn features, u64 static
//   features, u64 count, then dyn, stat and target as f64 arrays, time as
//   i64, and a trailing u64 FNV-1a hash of every preceding byte.
inline constexpr std::uint32_t kWindowCacheVersion = 1;

inline void save_windows(const WindowSet& w, const std::string& path) {
  w.check();
  if (w.time.size() != w.size()) throw ShapeError("window cache needs a timestamp per window");
  std::string out = "LCWN";
  binary::put<std::uint32_t>(out, kWindowCacheVersion);
  binary::put<std::uint64_t>(out, w.steps);
  binary::put<std::uint64_t>(out, w.dyn_features);
  binary::put<std::uint64_t>(out, w.stat_features);
  binary::put<std::uint64_t>(out, w.size());
  binary::put_array(out, w.dyn.data(), w.dyn.size());
  binary::put_array(out, w.stat.data(), w.stat.size());
  binary::put_array(out, w.target.data(), w.target.size());
  binary::put_array(out, w.time.data(), w.time.size());
  binary::put<std::uint64_t>(out, binary::fnv1a(out, out.size()));
  binary::dump(path, out);
}

inline WindowSet load_windows(const std::string& path) {
  const std::string bytes = binary::slurp(path);
  binary::Reader r(bytes, path, "window cache");
  if (r.str(4) != "LCWN") throw FormatError(path + ": not a window cache (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kWindowCacheVersion) {
    throw FormatError(path + ": window cache version " + std::to_string(version) + ", expected " +
                      std::to_string(kWindowCacheVersion));
  }
  WindowSet w;
  w.steps = r.get<std::uint64_t>();
  w.dyn_features = r.get<std::uint64_t>();
  w.stat_features = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  // Guard the allocation against corrupt counts.
  const std::size_t per = (w.steps * w.dyn_features + w.stat_features + 2) * sizeof(double);
  if (per == 0 || n > bytes.size() / per) r.truncated();
  w.dyn.resize(n * w.steps * w.dyn_features);
  w.stat.resize(n * w.stat_features);
  w.target.resize(n);
  w.time.resize(n);
  r.array(w.dyn.data(), w.dyn.size());
  r.array(w.stat.data(), w.stat.size());
  r.array(w.target.data(), w.target.size());
  r.array(w.time.data(), w.time.size());
  const std::size_t body = r.pos();
  if (r.get<std::uint64_t>() != binary::fnv1a(bytes, body)) throw FormatError(path + ": checksum mismatch");
  if (r.pos() != bytes.size()) throw FormatError(path + ": trailing bytes after checksum");
  return w;
}

}  // namespace loadcast::preprocess
