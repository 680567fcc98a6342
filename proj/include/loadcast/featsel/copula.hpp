#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "loadcast/core/rng.hpp"
#include "loadcast/featsel/special.hpp"

namespace loadcast::featsel {

struct CopulaEntropy {
  double score = 0.0;  // estimated mutual information, nats
  double ce = 0.0;     // copula entropy, the negative of the score
};

/// 0-based ranks forming a permutation. Ties are ordered by a seeded random
/// key so discrete columns still yield distinct copula coordinates.
inline std::vector<std::int64_t> copula_ranks(std::span<const double> v, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint64_t> key(v.size());
  for (auto& k : key) k = rng.next();
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && key[a] < key[b]);
  });
  std::vector<std::int64_t> rank(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<std::int64_t>(i);
  return rank;
}

namespace detail {

// Copula coordinate of each rank: (rank + jitter) / n with a seeded jitter in
// [0, 1) indexed by rank. Coordinates depend on ranks only and are strictly
// increasing, and avoid the distance ties of a bare rank lattice.
inline std::vector<double> copula_grid(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> u(n);
  for (std::size_t r = 0; r < n; ++r) u[r] = (static_cast<double>(r) + rng.uniform()) / static_cast<double>(n);
  return u;
}

// Points of a sorted coordinate list with |sorted[j] - sorted[i]| < d, j != i.
// Searching on the rounded difference matches the distances used for the
// neighbour search exactly.
inline std::int64_t strictly_within(const std::vector<double>& sorted, std::size_t i, double d) {
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(i);
  const double at = sorted[i];
  const auto lo = std::partition_point(sorted.begin(), mid, [&](double v) { return at - v >= d; });
  const auto hi = std::partition_point(mid, sorted.end(), [&](double v) { return v - at < d; });
  return static_cast<std::int64_t>(hi - lo) - 1;
}

}  // namespace detail

/// Mutual information of the empirical copula by the Kraskov k-nearest
/// neighbour estimator (max norm, first variant).
inline CopulaEntropy copula_entropy(std::span<const double> x, std::span<const double> y, std::size_t k = 3,
                                    std::uint64_t seed = 0x5eed) {
  if (x.size() != y.size()) throw ShapeError("copula_entropy: series lengths differ");
  const std::size_t n = x.size();
  if (n < 50) throw DataError("copula_entropy: needs at least 50 samples, got " + std::to_string(n));
  if (k < 1 || k >= n) throw ConfigError("copula_entropy: neighbour count k must be in [1, n)");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("copula_entropy: non-finite value");
  }
  const auto rx = copula_ranks(x, seed);
  const auto ry = copula_ranks(y, seed ^ 0x9e3779b97f4a7c15ULL);
  const auto ux = detail::copula_grid(n, seed + 1), uy = detail::copula_grid(n, seed + 2);
  // v[r] = y coordinate of the point whose x rank is r
  std::vector<double> v(n);
  std::vector<std::size_t> y_rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(rx[i])] = uy[static_cast<std::size_t>(ry[i])];
    y_rank[static_cast<std::size_t>(rx[i])] = static_cast<std::size_t>(ry[i]);
  }

  const auto psi = digamma_table(n + 1);
  double acc = 0.0;
  std::priority_queue<double> best;  // k smallest distances, max on top
  auto offer = [&](double d) {
    if (best.size() < k) {
      best.push(d);
    } else if (d < best.top()) {
      best.pop();
      best.push(d);
    }
  };
  for (std::size_t a = 0; a < n; ++a) {
    best = {};
    // x coordinates grow with rank, so each side stops once its x gap alone
    // reaches the current k-th distance.
    bool left = a > 0, right = a + 1 < n;
    for (std::size_t m = 1; left || right; ++m) {
      if (left) {
        const std::size_t c = a - m;
        const double dx = ux[a] - ux[c];
        if (best.size() == k && dx >= best.top()) {
          left = false;
        } else {
          offer(std::max(dx, std::abs(v[c] - v[a])));
          left = c > 0;
        }
      }
      if (right) {
        const std::size_t c = a + m;
        const double dx = ux[c] - ux[a];
        if (best.size() == k && dx >= best.top()) {
          right = false;
        } else {
          offer(std::max(dx, std::abs(v[c] - v[a])));
          right = c + 1 < n;
        }
      }
    }
    const double eps = best.top();
    const auto nx = detail::strictly_within(ux, a, eps);
    const auto ny = detail::strictly_within(uy, y_rank[a], eps);
    acc += psi[static_cast<std::size_t>(nx + 1)] + psi[static_cast<std::size_t>(ny + 1)];
  }
  const double mi = psi[k] + psi[n] - acc / static_cast<double>(n);
  return {mi, -mi};
}

}  // namespace loadcast::featsel
