#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/errors.hpp"

namespace loadcast::featsel {

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw ShapeError(std::string(what) + ": series lengths differ (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) throw DataError(std::string(what) + ": needs at least 3 samples");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError(std::string(what) + ": non-finite value");
  }
}

inline double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace detail

/// Sample Pearson correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
  if (sxx == syy && std::abs(sxy) == sxx) return sxy > 0.0 ? 1.0 : -1.0;  // y = x or y = -x
  return detail::clamp_unit(sxy / std::sqrt(sxx * syy));
}

/// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) r[order[k]] = avg;
    i = j;
  }
  return r;
}

/// Pearson correlation of average ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y, "spearman");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  try {
    return pearson(rx, ry);
  } catch (const DataError&) {
    throw DataError("spearman: all values tied");
  }
}

namespace detail {

// Number of tied pairs within runs of equal values in a sorted sequence.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq same) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && same(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v by value and returns the number of inversions (swaps).
inline std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace detail

/// Kendall tau-b, O(n log n).
inline double kendall(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y, "kendall");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tie_x = detail::tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  const std::int64_t tie_xy = detail::tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t swaps = detail::merge_count(ys, buf, 0, n);
  const std::int64_t tie_y = detail::tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  if (tie_x == total || tie_y == total) throw DataError("kendall: all values tied");
  const double numer = static_cast<double>(total - tie_x - tie_y + tie_xy - 2 * swaps);
  const double denom = std::sqrt(static_cast<double>(total - tie_x)) * std::sqrt(static_cast<double>(total - tie_y));
  return detail::clamp_unit(numer / denom);
}

}  // namespace loadcast::featsel
