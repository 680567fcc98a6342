#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loadcast/core/autodiff.hpp"
#include "loadcast/core/errors.hpp"
#include "loadcast/core/tensor.hpp"

namespace loadcast {

/// Adam moments plus a step-decay learning-rate schedule: after every
/// `decay_every` completed epochs the rate is multiplied by `decay_factor`.
struct AdamState {
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  double base_lr = 1e-4;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_factor = 0.5;
  int decay_every = 10;

  static AdamState with_lr(double lr) {
    AdamState s;
    s.base_lr = s.lr = lr;
    return s;
  }

  void validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam: beta1 and beta2 must lie in (0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
    if (lr < 0.0) throw ConfigError("adam: learning rate must be non-negative");
    if (decay_every <= 0) throw ConfigError("adam: decay_every must be positive");
  }
};

/// Sets `state.lr` for the epoch that follows `epochs_completed` epochs.
inline void apply_lr_schedule(AdamState& state, int epochs_completed) {
  const int decays = epochs_completed / state.decay_every;
  state.lr = state.base_lr * std::pow(state.decay_factor, decays);
}

/// theta -= lr * m_hat / (sqrt(v_hat) + eps). Gradients are left in place.
inline void adam_step(std::span<Variable> params, AdamState& state) {
  state.validate();
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.shape(), 0.0);
      state.v.emplace_back(p.shape(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i].shape()) {
      throw ShapeError("adam: moment shape " + to_string(state.m[i].shape()) + " does not match parameter " +
                       to_string(params[i].shape()));
    }
    if (!params[i].has_grad()) throw Error("adam: parameter " + std::to_string(i) + " has no gradient");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_value().data();
    auto grad = params[i].grad().data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      theta[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace loadcast
