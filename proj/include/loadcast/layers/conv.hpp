#pragma once

#include <string>

#include "loadcast/core/ops.hpp"
#include "loadcast/layers/dense.hpp"
#include "loadcast/layers/params.hpp"

namespace loadcast::layers {

/// 1-D convolution over [B x C_in x L] (or [C_in x L]) with optional ReLU.
struct Conv1d {
  Variable weight;  // [C_out x C_in x K]
  Variable bias;    // [C_out]
  Padding padding = Padding::kSame;
  Activation activation = Activation::kNone;

  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Padding pad, Activation act, Rng& rng)
      : weight(glorot({out_channels, in_channels, kernel}, in_channels * kernel, out_channels * kernel, rng)),
        bias(zeros({out_channels})),
        padding(pad),
        activation(act) {}

  Variable operator()(const Variable& x) const {
    Variable y = conv1d(x, weight, bias, padding);
    return activation == Activation::kRelu ? relu(y) : y;
  }

  void collect(ParamList& list, const std::string& prefix) const {
    list.add(join_name(prefix, "weight"), weight);
    list.add(join_name(prefix, "bias"), bias);
  }

  static std::size_t param_count(std::size_t in, std::size_t out, std::size_t kernel) {
    return out * in * kernel + out;
  }

  /// Output length for an input of length `len`.
  std::size_t out_length(std::size_t len) const {
    const std::size_t k = weight.dim(2);
    if (padding == Padding::kSame) return len;
    if (len < k) throw ShapeError("conv1d: length shorter than kernel");
    return len - k + 1;
  }
};

inline std::size_t pool_length(std::size_t len, std::size_t size, std::size_t stride) {
  if (len < size) {
    throw ShapeError("maxpool1d: length " + std::to_string(len) + " shorter than pool size " + std::to_string(size));
  }
  return (len - size) / stride + 1;
}

}  // namespace loadcast::layers
