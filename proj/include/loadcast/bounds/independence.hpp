#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "loadcast/core/rng.hpp"
#include "loadcast/featsel/copula.hpp"

namespace loadcast::bounds {

struct IndependenceReport {
  std::size_t n = 0;
  double mixing = 0.0;
  double mi_estimate = 0.0;  // nats
  double mi_reference = 0.0;  // closed form for the generating process; infinite at mixing 1
};

/// Two base-learner output channels: h1 = a and h2 = tanh(mixing * a +
/// sqrt(1 - mixing^2) * b) with independent standard normal a, b. The
/// channels share a Gaussian copula with correlation `mixing`.
inline std::pair<std::vector<double>, std::vector<double>> learner_channels(std::size_t n, double mixing,
                                                                           std::uint64_t seed) {
  Rng rng(seed);
  const double rest = std::sqrt(std::max(0.0, 1.0 - mixing * mixing));
  std::vector<double> h1(n), h2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    h1[i] = a;
    h2[i] = std::tanh(mixing * a + rest * b);
  }
  return {std::move(h1), std::move(h2)};
}

inline IndependenceReport independence_demo(std::size_t n, double mixing, std::uint64_t seed, std::size_t k = 3) {
  if (n < 200) throw DataError("independence_demo: needs at least 200 samples, got " + std::to_string(n));
  if (!(mixing >= 0.0 && mixing <= 1.0)) throw ConfigError("independence_demo: mixing must be in [0, 1]");
  const auto [h1, h2] = learner_channels(n, mixing, seed);
  IndependenceReport r;
  r.n = n;
  r.mixing = mixing;
  r.mi_estimate = featsel::copula_entropy(h1, h2, k, seed ^ 0xc0b1a5ULL).score;
  r.mi_reference = mixing < 1.0 ? -0.5 * std::log1p(-mixing * mixing) : std::numeric_limits<double>::infinity();
  return r;
}

struct IndependenceRow {
  double mixing = 0.0;
  double mi_median = 0.0;
  double mi_reference = 0.0;
  std::vector<double> mi_by_seed;
};

/// Median estimate over `seeds` runs (seeds base, base+1, ...) for each
/// mixing level.
inline std::vector<IndependenceRow> independence_grid(std::size_t n, const std::vector<double>& mixing,
                                                      std::size_t seeds, std::uint64_t base_seed) {
  if (seeds < 1) throw ConfigError("independence_grid: needs at least one seed");
  std::vector<IndependenceRow> rows;
  for (double m : mixing) {
    IndependenceRow row;
    row.mixing = m;
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto r = independence_demo(n, m, base_seed + s);
      row.mi_by_seed.push_back(r.mi_estimate);
      row.mi_reference = r.mi_reference;
    }
    std::vector<double> sorted = row.mi_by_seed;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    row.mi_median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace loadcast::bounds
