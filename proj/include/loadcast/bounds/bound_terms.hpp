#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/errors.hpp"

namespace loadcast::bounds {

struct BoundTerms {
  double term_L = 0.0;           // sum_m mean(w^m) * mean(l^m)
  double term_C = 0.0;           // sum_m mean(w^m) * complexity_m
  double term_Cov = 0.0;         // sum_m cov(w^m, l^m)
  double confidence_term = 0.0;  // M * sqrt(ln(1/delta) / (2N))
  std::size_t m_sources = 0;
  std::size_t n_samples = 0;
  std::vector<double> source_L, source_C, source_Cov;

  double total() const { return term_L + term_C + term_Cov + confidence_term; }
};

inline double confidence_term(std::size_t m_sources, std::size_t n_samples, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound_terms: delta must be in (0, 1)");
  if (n_samples < 1) throw ConfigError("bound_terms: needs at least one sample");
  return static_cast<double>(m_sources) * std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n_samples)));
}

/// Decomposition of the fused-model bound. Row m of `losses` and `weights`
/// holds the per-sample loss and fusion weight of source m; every column of
/// `weights` must be a convex combination. Covariances use 1/N, so
/// term_L + term_Cov equals the mean weighted loss.
inline BoundTerms bound_terms(const Eigen::MatrixXd& losses, const Eigen::MatrixXd& weights,
                              std::span<const double> complexities, double delta, double tolerance = 1e-9) {
  const Eigen::Index m = losses.rows(), n = losses.cols();
  if (m < 1 || n < 1) throw ShapeError("bound_terms: empty loss matrix");
  if (weights.rows() != m || weights.cols() != n) {
    throw ShapeError("bound_terms: weights are " + std::to_string(weights.rows()) + "x" +
                     std::to_string(weights.cols()) + ", losses are " + std::to_string(m) + "x" + std::to_string(n));
  }
  if (complexities.size() != static_cast<std::size_t>(m)) throw ShapeError("bound_terms: one complexity per source");
  if (!losses.allFinite() || losses.minCoeff() < 0.0) throw DataError("bound_terms: losses must be finite and non-negative");
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = weights.col(j).sum();
    if (!weights.col(j).allFinite() || weights.col(j).minCoeff() < 0.0 || std::abs(s - 1.0) > tolerance) {
      throw DataError("bound_terms: weights at sample " + std::to_string(j) +
                      " are not a convex combination (sum " + std::to_string(s) + ")");
    }
  }
  BoundTerms b;
  b.m_sources = static_cast<std::size_t>(m);
  b.n_samples = static_cast<std::size_t>(n);
  const double nn = static_cast<double>(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    const bool constant = weights.row(r).maxCoeff() == weights.row(r).minCoeff();
    const double wm = constant ? weights(r, 0) : weights.row(r).mean(), lm = losses.row(r).mean();
    double cov = 0.0;
    if (!constant) {
      for (Eigen::Index j = 0; j < n; ++j) cov += (weights(r, j) - wm) * (losses(r, j) - lm);
    }
    b.source_L.push_back(wm * lm);
    b.source_C.push_back(wm * complexities[static_cast<std::size_t>(r)]);
    b.source_Cov.push_back(cov / nn);
    b.term_L += b.source_L.back();
    b.term_C += b.source_C.back();
    b.term_Cov += b.source_Cov.back();
  }
  b.confidence_term = confidence_term(b.m_sources, b.n_samples, delta);
  return b;
}

/// Constant per-source weights broadcast over all samples.
inline BoundTerms bound_terms(const Eigen::MatrixXd& losses, std::span<const double> weights,
                              std::span<const double> complexities, double delta) {
  if (weights.size() != static_cast<std::size_t>(losses.rows())) throw ShapeError("bound_terms: one weight per source");
  Eigen::MatrixXd w(losses.rows(), losses.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r) w.row(r).setConstant(weights[static_cast<std::size_t>(r)]);
  return bound_terms(losses, w, complexities, delta);
}

}  // namespace loadcast::bounds
