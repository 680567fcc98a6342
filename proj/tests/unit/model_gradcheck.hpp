#pragma once

// Finite-difference check of a whole network's parameter gradients. Values
// are perturbed in place and the training-mode forward (batch statistics, no
// dropout) is re-evaluated without recording a graph.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "loadcast/models/model.hpp"

namespace loadcast::testing {

struct ModelGradCheck {
  double max_rel_error = 0.0;
  double max_abs_small = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // coordinates skipped because the loss is not smooth there
  std::string worst;

  bool ok(double rel_tol = 1e-4, double abs_tol = 1e-7) const {
    return max_rel_error < rel_tol && max_abs_small < abs_tol;
  }
};

inline WindowSet random_windows(const models::ModelSpec& spec, std::size_t n, Rng& rng) {
  WindowSet w{spec.steps, spec.dyn_features, spec.stat_features, {}, {}, {}, {}};
  std::vector<double> d(spec.steps * spec.dyn_features), s(spec.stat_features);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : d) x = rng.uniform(-1.5, 1.5);
    for (auto& x : s) x = rng.uniform(-1.5, 1.5);
    w.push_back(d, s, rng.uniform(-1, 1), static_cast<std::int64_t>(i));
  }
  return w;
}

/// `per_tensor` caps the probed coordinates of each parameter tensor.
inline ModelGradCheck check_model_gradients(models::ForecastModel& model, const Batch& batch,
                                            std::size_t per_tensor = 6, double h = 1e-5, double small = 1e-8) {
  layers::ParamList list = model.params();
  const Tensor proj_w = [&] {
    Rng rng(77);
    Tensor w({batch.size()});
    for (auto& x : w.data()) x = rng.uniform(-1, 1);
    return w;
  }();
  auto loss_of = [&](const Variable& y) {
    return add(sum(mul(y, Variable(proj_w))), mse_loss(y, Variable(batch.target)));
  };
  Variable loss = loss_of(model.forward_train(batch, nullptr));
  backward(loss);
  ModelGradCheck res;
  auto eval = [&]() {
    NoGradGuard guard;
    return loss_of(model.forward_train(batch, nullptr)).value().item();
  };
  for (auto& [name, var] : list.trainable) {
    const Tensor analytic = var.has_grad() ? var.grad() : Tensor(var.shape(), 0.0);
    Tensor& value = var.mutable_value();
    const std::size_t n = value.size();
    const std::size_t stride = std::max<std::size_t>(1, n / per_tensor);
    for (std::size_t i = (n > per_tensor ? stride / 2 : 0); i < n; i += stride) {
      const double orig = value[i];
      value[i] = orig + h;
      const double up = eval();
      value[i] = orig - h;
      const double down = eval();
      value[i] = orig;
      const double mid = eval();
      const double fd = (up - down) / (2.0 * h);
      // A ReLU or max-pool switch inside the stencil shows up as a jump
      // between the one-sided slopes.
      const double right = (up - mid) / h, left = (mid - down) / h;
      if (std::abs(right - left) > 1e-2 * std::max({std::abs(right), std::abs(left), 1e-4})) {
        ++res.kinks;
        continue;
      }
      const double a = analytic[i];
      ++res.checked;
      if (std::abs(fd) < small) {
        res.max_abs_small = std::max(res.max_abs_small, std::abs(a - fd));
      } else {
        const double err = std::abs(a - fd) / std::max(std::abs(a), std::abs(fd));
        if (err > res.max_rel_error) {
          res.max_rel_error = err;
          std::ostringstream os;
          os << name << "[" << i << "]: analytic " << a << " fd " << fd;
          res.worst = os.str();
        }
      }
    }
    var.zero_grad();
  }
  return res;
}

/// Moves zero-initialized offsets off zero so that dead ReLU inputs do not
/// leave the check sitting exactly on a kink.
inline void jitter_offsets(models::ForecastModel& model, Rng& rng) {
  for (auto& [name, var] : model.params().trainable) {
    const bool offset = name.ends_with("bias") || name.ends_with(".b") || name.ends_with("beta");
    if (!offset) continue;
    for (auto& x : var.mutable_value().data()) x = rng.uniform(-0.2, 0.2);
  }
}

/// Small widths so every architecture can be checked in well under a second.
inline models::ModelSpec tiny_spec(models::Architecture arch) {
  models::ModelSpec s;
  s.architecture = arch;
  s.steps = 4;
  s.dyn_features = 2;
  s.stat_features = 4;
  s.hyper.hidden = 6;
  s.hyper.channels1 = 3;
  s.hyper.channels2 = 4;
  s.hyper.attention_rows = 3;
  s.hyper.dropout = 0.0;
  return s;
}

}  // namespace loadcast::testing
