#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "loadcast/core/autodiff.hpp"
#include "loadcast/core/rng.hpp"
#include "loadcast/core/tensor.hpp"

namespace loadcast::layers {

/// Named views of a model's trainable weights and non-trainable buffers
/// (batch-norm running statistics). Order is stable and defines the weight
/// file layout.
struct ParamList {
  std::vector<std::pair<std::string, Variable>> trainable;
  std::vector<std::pair<std::string, Tensor*>> buffers;

  void add(std::string name, Variable v) { trainable.emplace_back(std::move(name), std::move(v)); }
  void add_buffer(std::string name, Tensor* t) { buffers.emplace_back(std::move(name), t); }

  std::vector<Variable> variables() const {
    std::vector<Variable> out;
    out.reserve(trainable.size());
    for (const auto& [name, v] : trainable) out.push_back(v);
    return out;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : trainable) n += v.size();
    return n;
  }
};

inline std::string join_name(const std::string& prefix, const std::string& leaf) {
  return prefix.empty() ? leaf : prefix + "." + leaf;
}

/// Glorot uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
inline Variable glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = rng.uniform(-limit, limit);
  return Variable(std::move(t), true);
}

inline Variable zeros(Shape shape) { return Variable(Tensor(std::move(shape), 0.0), true); }

}  // namespace loadcast::layers
