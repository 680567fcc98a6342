#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/errors.hpp"
#include "loadcast/core/tensor.hpp"

namespace loadcast {

/// Mini-batch of supervised windows.
struct Batch {
  Tensor dyn;     // [B x T x D_dyn]
  Tensor stat;    // [B x D_stat]; a zero placeholder column when D_stat = 0
  Tensor target;  // [B]

  std::size_t size() const { return target.size(); }
};

/// Row-major storage of N supervised windows: a dynamic block
/// [T x D_dyn], a static vector [D_stat] and a scalar target per sample.
struct WindowSet {
  std::size_t steps = 0;
  std::size_t dyn_features = 0;
  std::size_t stat_features = 0;
  std::vector<double> dyn;          // N * T * D_dyn
  std::vector<double> stat;         // N * D_stat
  std::vector<double> target;       // N
  std::vector<std::int64_t> time;   // N, target timestamp (minutes since epoch)

  std::size_t size() const { return target.size(); }
  bool empty() const { return target.empty(); }

  void check() const {
    const std::size_t n = target.size();
    if (dyn.size() != n * steps * dyn_features || stat.size() != n * stat_features ||
        (!time.empty() && time.size() != n)) {
      throw ShapeError("window set: storage does not match " + std::to_string(n) + " samples");
    }
  }

  void push_back(std::span<const double> d, std::span<const double> s, double y, std::int64_t t) {
    if (d.size() != steps * dyn_features || s.size() != stat_features) {
      throw ShapeError("window set: sample has wrong feature count");
    }
    dyn.insert(dyn.end(), d.begin(), d.end());
    stat.insert(stat.end(), s.begin(), s.end());
    target.push_back(y);
    time.push_back(t);
  }

  Batch gather(std::span<const std::size_t> idx) const {
    if (idx.empty()) throw ShapeError("window set: empty batch");
    const std::size_t b = idx.size(), dd = steps * dyn_features;
    Batch out{Tensor({b, steps, dyn_features}), Tensor({b, stat_features == 0 ? 1 : stat_features}, 0.0),
              Tensor({b})};
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t k = idx[i];
      if (k >= size()) throw ShapeError("window set: index out of range");
      std::copy_n(dyn.data() + k * dd, dd, out.dyn.raw() + i * dd);
      std::copy_n(stat.data() + k * stat_features, stat_features, out.stat.raw() + i * stat_features);
      out.target[i] = target[k];
    }
    return out;
  }

  Batch range(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
    return gather(idx);
  }

  WindowSet subset(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw ShapeError("window set: subset out of range");
    WindowSet out{steps, dyn_features, stat_features, {}, {}, {}, {}};
    const std::size_t dd = steps * dyn_features;
    out.dyn.assign(dyn.begin() + static_cast<std::ptrdiff_t>(begin * dd),
                   dyn.begin() + static_cast<std::ptrdiff_t>(end * dd));
    out.stat.assign(stat.begin() + static_cast<std::ptrdiff_t>(begin * stat_features),
                    stat.begin() + static_cast<std::ptrdiff_t>(end * stat_features));
    out.target.assign(target.begin() + static_cast<std::ptrdiff_t>(begin),
                      target.begin() + static_cast<std::ptrdiff_t>(end));
    if (!time.empty()) {
      out.time.assign(time.begin() + static_cast<std::ptrdiff_t>(begin), time.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
  }
};

}  // namespace loadcast
