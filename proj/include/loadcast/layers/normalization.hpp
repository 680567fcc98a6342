#pragma once

#include <string>

#include "loadcast/core/errors.hpp"
#include "loadcast/core/ops.hpp"
#include "loadcast/layers/params.hpp"

namespace loadcast::layers {

enum class Mode { kTrain, kEval };

/// Batch normalization over the feature axis of [B x F].
struct BatchNorm {
  Variable gamma;
  Variable beta;
  BatchNormStats stats;
  double eps = 1e-5;
  double momentum = 0.1;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t features)
      : gamma(Variable(Tensor({features}, 1.0), true)),
        beta(zeros({features})),
        stats{Tensor({features}, 0.0), Tensor({features}, 1.0)} {}

  Variable operator()(const Variable& x, Mode mode) {
    return batch_norm(x, gamma, beta, stats, mode == Mode::kTrain, eps, momentum);
  }

  void collect(ParamList& list, const std::string& prefix) {
    list.add(join_name(prefix, "gamma"), gamma);
    list.add(join_name(prefix, "beta"), beta);
    list.add_buffer(join_name(prefix, "running_mean"), &stats.running_mean);
    list.add_buffer(join_name(prefix, "running_var"), &stats.running_var);
  }

  static std::size_t param_count(std::size_t features) { return 2 * features; }
};

/// Inverted dropout: survivors are scaled by 1 / (1 - rate) in training,
/// identity in evaluation.
inline Variable dropout(const Variable& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
  if (mode == Mode::kEval || rate == 0.0) return x;
  const double keep = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (auto& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep;
  return mul(x, Variable(std::move(mask)));
}

}  // namespace loadcast::layers
