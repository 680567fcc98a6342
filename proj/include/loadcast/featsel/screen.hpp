#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "loadcast/featsel/copula.hpp"
#include "loadcast/featsel/correlation.hpp"
#include "loadcast/featsel/granger.hpp"
#include "loadcast/preprocess/table.hpp"

namespace loadcast::featsel {

struct ScreenOptions {
  double alpha = 0.05;
  double ce_min = std::numeric_limits<double>::quiet_NaN();  // NaN: use the percentile rule
  double ce_percentile = 75.0;
  std::size_t lag = 4;
  std::size_t neighbours = 3;
  double difference_above = 0.99;  // lag-1 autocorrelation that triggers differencing
  std::uint64_t seed = 0x5eed;
};

struct FeatureScore {
  int id = 0;
  std::string name;
  preprocess::FeatureGroup group = preprocess::FeatureGroup::kStatic;
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  double kendall = std::numeric_limits<double>::quiet_NaN();
  double ce_score = std::numeric_limits<double>::quiet_NaN();
  double ce = std::numeric_limits<double>::quiet_NaN();
  double granger_f = std::numeric_limits<double>::quiet_NaN();
  double granger_p = std::numeric_limits<double>::quiet_NaN();
  bool differenced = false;
  bool retained = false;
  std::string error;
};

struct ScreenReport {
  std::vector<FeatureScore> features;  // ordered by feature id
  double alpha = 0.0;
  double ce_min = 0.0;
  std::size_t lag = 0;
  std::size_t neighbours = 0;
  bool target_differenced = false;

  std::vector<int> retained() const {
    std::vector<int> ids;
    for (const auto& f : features) {
      if (f.retained) ids.push_back(f.id);
    }
    return ids;
  }

  const FeatureScore& at(int id) const {
    for (const auto& f : features) {
      if (f.id == id) return f;
    }
    throw DataError("screen report has no feature with id " + std::to_string(id));
  }
};

inline double lag1_autocorrelation(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    den += (v[i] - mean) * (v[i] - mean);
    if (i + 1 < v.size()) num += (v[i] - mean) * (v[i + 1] - mean);
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

/// Linear-interpolated percentile (0-100) of the finite values.
inline double percentile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace detail {

inline std::vector<double> difference(std::span<const double> v) {
  std::vector<double> d(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) d[i - 1] = v[i] - v[i - 1];
  return d;
}

}  // namespace detail

/// Scores every non-target column against the target column and retains
/// features with granger_p < alpha and ce_score >= ce_min. Series whose
/// lag-1 autocorrelation exceeds `difference_above` are differenced once
/// before the Granger test. A failing feature is reported with its error and
/// a warning; it is never retained.
inline ScreenReport screen(const preprocess::TimeSeriesTable& table, int target_id, const ScreenOptions& opt = {}) {
  if (!(opt.alpha >= 0.0 && opt.alpha <= 1.0)) throw ConfigError("screen: alpha must be in [0, 1]");
  if (!(opt.ce_percentile >= 0.0 && opt.ce_percentile <= 100.0)) throw ConfigError("screen: percentile must be in [0, 100]");
  const preprocess::Column& target = table.by_id(target_id);
  for (char m : target.missing) {
    if (m) throw DataError("screen: target column '" + target.name + "' has missing values");
  }
  ScreenReport rep;
  rep.alpha = opt.alpha;
  rep.lag = opt.lag;
  rep.neighbours = opt.neighbours;
  const std::vector<double>& y = target.values;
  rep.target_differenced = y.size() > 1 && lag1_autocorrelation(y) > opt.difference_above;
  const std::vector<double> dy = rep.target_differenced ? detail::difference(y) : y;

  std::vector<const preprocess::Column*> cols;
  for (const auto& c : table.columns) {
    if (c.id != target_id) cols.push_back(&c);
  }
  std::sort(cols.begin(), cols.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto* c : cols) {
    FeatureScore f;
    f.id = c->id;
    f.name = c->name;
    f.group = c->group;
    try {
      for (char m : c->missing) {
        if (m) throw DataError("column has missing values");
      }
      const std::vector<double>& x = c->values;
      f.pearson = pearson(x, y);
      f.spearman = spearman(x, y);
      f.kendall = kendall(x, y);
      const CopulaEntropy ce = copula_entropy(x, y, opt.neighbours, opt.seed);
      f.ce_score = ce.score;
      f.ce = ce.ce;
      f.differenced = lag1_autocorrelation(x) > opt.difference_above;
      std::vector<double> gx = f.differenced ? detail::difference(x) : x;
      if (rep.target_differenced && !f.differenced) gx.erase(gx.begin());
      std::vector<double> gy = dy;
      if (f.differenced && !rep.target_differenced) gy.erase(gy.begin());
      const GrangerResult g = granger_test(gx, gy, opt.lag);
      f.granger_f = g.f;
      f.granger_p = g.p_value;
    } catch (const Error& e) {
      f.error = e.what();
      warn("screen: feature '" + c->name + "' (id " + std::to_string(c->id) + "): " + e.what());
    }
    rep.features.push_back(std::move(f));
  }

  if (std::isnan(opt.ce_min)) {
    std::vector<double> scores;
    for (const auto& f : rep.features) {
      if (f.error.empty()) scores.push_back(f.ce_score);
    }
    rep.ce_min = percentile(scores, opt.ce_percentile);
  } else {
    rep.ce_min = opt.ce_min;
  }
  for (auto& f : rep.features) {
    f.retained = f.error.empty() && f.granger_p < rep.alpha && f.ce_score >= rep.ce_min;
  }
  return rep;
}

/// Adds the best-scoring static features, by ce_score, until at least
/// `min_static` static features are retained.
inline std::vector<int> with_static_floor(const ScreenReport& rep, std::size_t min_static) {
  std::vector<int> ids = rep.retained();
  std::size_t have = 0;
  std::vector<const FeatureScore*> pool;
  for (const auto& f : rep.features) {
    if (f.group != preprocess::FeatureGroup::kStatic) continue;
    if (f.retained) {
      ++have;
    } else if (f.error.empty()) {
      pool.push_back(&f);
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const auto* a, const auto* b) { return a->ce_score > b->ce_score; });
  for (std::size_t i = 0; have < min_static && i < pool.size(); ++i, ++have) ids.push_back(pool[i]->id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline void write_screen_report(const std::string& path, const ScreenReport& rep) {
  using preprocess::format_number;
  auto plain = [](std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
    return s;
  };
  preprocess::CsvWriter w(path, {"id", "name", "pearson", "spearman", "kendall", "ce_score", "granger_F", "granger_p",
                                 "retained", "ce_signed", "differenced", "error"});
  for (const auto& f : rep.features) {
    w.row({std::to_string(f.id), f.name, format_number(f.pearson), format_number(f.spearman),
           format_number(f.kendall), format_number(f.ce_score), format_number(f.granger_f),
           format_number(f.granger_p), f.retained ? "1" : "0", format_number(f.ce), f.differenced ? "1" : "0",
           plain(f.error)});
  }
}

inline void write_screen_thresholds(const std::string& path, const ScreenReport& rep) {
  using preprocess::format_number;
  preprocess::CsvWriter w(path, {"alpha", "ce_min", "lag", "neighbours", "target_differenced"});
  w.row({format_number(rep.alpha), format_number(rep.ce_min), std::to_string(rep.lag), std::to_string(rep.neighbours),
         rep.target_differenced ? "1" : "0"});
}

}  // namespace loadcast::featsel
