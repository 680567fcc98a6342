#pragma once

#include <string>

#include "loadcast/core/ops.hpp"
#include "loadcast/layers/params.hpp"

namespace loadcast::layers {

enum class Activation { kNone, kRelu };

/// Fully connected layer y = act(x W + b) applied over the last axis.
struct Dense {
  Variable weight;  // [in x out]
  Variable bias;    // [out]
  Activation activation = Activation::kNone;

  Dense() = default;
  Dense(std::size_t in, std::size_t out, Activation act, Rng& rng)
      : weight(glorot({in, out}, in, out, rng)), bias(zeros({out})), activation(act) {}

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  Variable operator()(const Variable& x) const {
    const Shape& s = x.shape();
    if (s.empty() || s.back() != in_features()) {
      throw ShapeError("dense: expected last dim " + std::to_string(in_features()) + ", got " + to_string(s));
    }
    const std::size_t rows = x.size() / in_features();
    Variable y = add(matmul(reshape(x, {rows, in_features()}), weight), bias);
    if (activation == Activation::kRelu) y = relu(y);
    Shape out = s;
    out.back() = out_features();
    return out == y.shape() ? y : reshape(y, std::move(out));
  }

  void collect(ParamList& list, const std::string& prefix) const {
    list.add(join_name(prefix, "weight"), weight);
    list.add(join_name(prefix, "bias"), bias);
  }

  static std::size_t param_count(std::size_t in, std::size_t out) { return in * out + out; }
};

}  // namespace loadcast::layers
