#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "loadcast/featsel/special.hpp"

namespace loadcast::featsel {

struct GrangerResult {
  std::size_t lag = 0;
  double rss_restricted = 0.0;
  double rss_unrestricted = 0.0;
  double f = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
};

namespace detail {

inline double least_squares_rss(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const char* model) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < a.cols()) {
    throw DataError(std::string("granger_test: ") + model + " design matrix is rank-deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(a.cols()) + ")");
  }
  const Eigen::VectorXd coef = qr.solve(b);
  return (b - a * coef).squaredNorm();
}

}  // namespace detail

/// F test of whether `lag` lags of x improve an autoregression of y with
/// `lag` lags and an intercept.
inline GrangerResult granger_test(std::span<const double> x, std::span<const double> y, std::size_t lag) {
  if (x.size() != y.size()) throw ShapeError("granger_test: series lengths differ");
  if (lag < 1) throw ConfigError("granger_test: lag must be at least 1");
  const std::size_t n = y.size();
  if (n <= 3 * lag + 3) {
    throw DataError("granger_test: " + std::to_string(n) + " samples are too few for lag " + std::to_string(lag));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("granger_test: non-finite value");
  }
  const std::size_t rows = n - lag;
  const auto p = static_cast<Eigen::Index>(lag);
  Eigen::MatrixXd full(static_cast<Eigen::Index>(rows), 1 + 2 * p);
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + lag;
    const auto ri = static_cast<Eigen::Index>(r);
    target(ri) = y[t];
    full(ri, 0) = 1.0;
    for (std::size_t j = 1; j <= lag; ++j) {
      full(ri, static_cast<Eigen::Index>(j)) = y[t - j];
      full(ri, p + static_cast<Eigen::Index>(j)) = x[t - j];
    }
  }
  GrangerResult g;
  g.lag = lag;
  g.n_effective = rows;
  g.rss_restricted = detail::least_squares_rss(full.leftCols(1 + p), target, "restricted");
  g.rss_unrestricted = detail::least_squares_rss(full, target, "unrestricted");
  // Nested least squares cannot increase the residual; clamp rounding noise.
  g.rss_restricted = std::max(g.rss_restricted, g.rss_unrestricted);
  const double df1 = static_cast<double>(lag);
  const double df2 = static_cast<double>(rows - 2 * lag - 1);
  if (g.rss_unrestricted == 0.0) {
    warn("granger_test: unrestricted model fits exactly; reporting p = 0");
    g.f = std::numeric_limits<double>::infinity();
    g.p_value = 0.0;
    return g;
  }
  g.f = ((g.rss_restricted - g.rss_unrestricted) / df1) / (g.rss_unrestricted / df2);
  g.p_value = f_upper_tail(g.f, df1, df2);
  return g;
}

}  // namespace loadcast::featsel
