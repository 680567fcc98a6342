#pragma once

#include <string>

#include "loadcast/core/ops.hpp"
#include "loadcast/layers/params.hpp"

namespace loadcast::layers {

struct AttentionOutput {
  Variable context;  // [B x F]
  Variable weights;  // [B x M]
};

/// Single-query additive attention over the M rows of [B x M x F]:
/// score_m = v . tanh(W f_m + b), weights = softmax(score), context = sum w_m f_m.
struct Attention {
  Variable weight;  // [F x A]
  Variable bias;    // [A]
  Variable score;   // [A x 1]

  Attention() = default;
  Attention(std::size_t features, std::size_t hidden, Rng& rng)
      : weight(glorot({features, hidden}, features, hidden, rng)),
        bias(zeros({hidden})),
        score(glorot({hidden, 1}, hidden, 1, rng)) {}

  std::size_t features() const { return weight.dim(0); }

  AttentionOutput operator()(const Variable& rows) const {
    const Shape& s = rows.shape();
    if (s.size() != 3 || s[2] != features() || s[1] == 0) {
      throw ShapeError("attention: expected [B x M x " + std::to_string(features()) + "], got " + to_string(s));
    }
    const std::size_t batch = s[0], m = s[1];
    Variable flat = reshape(rows, {batch * m, features()});
    Variable hidden = tanh(add(matmul(flat, weight), bias));
    Variable scores = reshape(matmul(hidden, score), {batch, m});
    Variable w = softmax(scores);
    return {weighted_sum(rows, w), w};
  }

  void collect(ParamList& list, const std::string& prefix) const {
    list.add(join_name(prefix, "weight"), weight);
    list.add(join_name(prefix, "bias"), bias);
    list.add(join_name(prefix, "score"), score);
  }

  static std::size_t param_count(std::size_t features, std::size_t hidden) {
    return features * hidden + hidden + hidden;
  }
};

}  // namespace loadcast::layers
