#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/errors.hpp"
#include "loadcast/core/rng.hpp"

namespace loadcast::bounds {

/// Loss matrix of a finite hypothesis class: one row per hypothesis, one
/// column per sample.
using LossMatrix = Eigen::MatrixXd;

inline constexpr std::size_t kMaxExactSamples = 12;

struct RademacherEstimate {
  double value = 0.0;  // Monte Carlo mean
  std::size_t mc_draws = 0;
  double std_error = 0.0;
  std::optional<double> exact;  // mean over all sign vectors, n <= kMaxExactSamples
};

namespace detail {

inline void check_losses(const LossMatrix& losses) {
  if (losses.rows() < 1 || losses.cols() < 1) throw ShapeError("empirical_rademacher: empty loss matrix");
  for (Eigen::Index h = 0; h < losses.rows(); ++h) {
    for (Eigen::Index i = 0; i < losses.cols(); ++i) {
      const double l = losses(h, i);
      if (!(l >= 0.0 && l <= 1.0)) {
        throw DataError("empirical_rademacher: loss " + std::to_string(l) + " at hypothesis " + std::to_string(h) +
                        ", sample " + std::to_string(i) + " is outside [0, 1]");
      }
    }
  }
}

// max and min over hypotheses of sum_i sigma_i * l_{h,i}, sigma_i = +1 where
// bit i of `mask` is set. The complement mask negates every sum exactly.
struct SignedExtremes {
  double max, min;
};

inline SignedExtremes signed_extremes(const LossMatrix& losses, std::uint64_t mask) {
  SignedExtremes e{-INFINITY, INFINITY};
  for (Eigen::Index h = 0; h < losses.rows(); ++h) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < losses.cols(); ++i) {
      s += (mask >> i & 1U) ? losses(h, i) : -losses(h, i);
    }
    e.max = std::max(e.max, s);
    e.min = std::min(e.min, s);
  }
  return e;
}

}  // namespace detail

/// Exact expectation over all 2^n sign vectors of sup_h (1/n) sum_i sigma_i l_{h,i}.
inline double exact_rademacher(const LossMatrix& losses) {
  detail::check_losses(losses);
  const auto n = static_cast<std::size_t>(losses.cols());
  if (n > kMaxExactSamples) {
    throw ConfigError("exact_rademacher: enumeration is limited to " + std::to_string(kMaxExactSamples) + " samples");
  }
  // Pair each sign vector with its negation: sup(sigma) + sup(-sigma) = max - min.
  const std::uint64_t half = std::uint64_t{1} << (n - 1);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < half; ++mask) {
    const auto e = detail::signed_extremes(losses, mask);
    total += e.max - e.min;
  }
  return total / static_cast<double>(2 * half) / static_cast<double>(n);
}

/// Monte Carlo estimate of the empirical Rademacher complexity. Sign vectors
/// depend only on the seed and n, so nested classes share draws.
inline RademacherEstimate empirical_rademacher(const LossMatrix& losses, std::size_t mc_draws, std::uint64_t seed) {
  detail::check_losses(losses);
  if (mc_draws < 2) throw ConfigError("empirical_rademacher: needs at least 2 Monte Carlo draws");
  const Eigen::Index n = losses.cols();
  Rng rng(seed);
  Eigen::VectorXd sigma(n);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t d = 0; d < mc_draws; ++d) {
    std::uint64_t word = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i % 64 == 0) word = rng.next();
      sigma(i) = (word >> (i % 64) & 1U) ? 1.0 : -1.0;
    }
    const double v = (losses * sigma).maxCoeff() / static_cast<double>(n);
    sum += v;
    sum_sq += v * v;
  }
  RademacherEstimate r;
  r.mc_draws = mc_draws;
  const double m = static_cast<double>(mc_draws);
  r.value = sum / m;
  const double var = std::max(0.0, (sum_sq - m * r.value * r.value) / (m - 1.0));
  r.std_error = std::sqrt(var / m);
  if (static_cast<std::size_t>(n) <= kMaxExactSamples) r.exact = exact_rademacher(losses);
  return r;
}

/// 0-1 losses of the one-dimensional threshold classifiers s * sign(x - t)
/// for every threshold t and both orientations s. Labels are +1 or -1.
inline LossMatrix threshold_class_losses(std::span<const double> x, std::span<const int> labels,
                                         std::span<const double> thresholds) {
  if (x.size() != labels.size()) throw ShapeError("threshold_class_losses: inputs and labels differ in length");
  if (x.empty() || thresholds.empty()) throw ShapeError("threshold_class_losses: empty input");
  LossMatrix l(static_cast<Eigen::Index>(2 * thresholds.size()), static_cast<Eigen::Index>(x.size()));
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (labels[i] != 1 && labels[i] != -1) throw DataError("threshold_class_losses: labels must be +1 or -1");
      const int pred = x[i] > thresholds[t] ? 1 : -1;
      const auto row = static_cast<Eigen::Index>(2 * t);
      const auto col = static_cast<Eigen::Index>(i);
      l(row, col) = pred == labels[i] ? 0.0 : 1.0;
      l(row + 1, col) = 1.0 - l(row, col);
    }
  }
  return l;
}

/// Every 0-1 loss pattern on n samples, one per row (2^n rows).
inline LossMatrix all_sign_patterns(std::size_t n) {
  if (n < 1 || n > kMaxExactSamples) throw ConfigError("all_sign_patterns: n must be in [1, 12]");
  const auto rows = static_cast<Eigen::Index>(std::size_t{1} << n);
  LossMatrix l(rows, static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) l(r, i) = (r >> i & 1) ? 1.0 : 0.0;
  }
  return l;
}

}  // namespace loadcast::bounds
