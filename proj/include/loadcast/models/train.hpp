#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "loadcast/core/optim.hpp"
#include "loadcast/core/windows.hpp"
#include "loadcast/models/model.hpp"

namespace loadcast::models {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_mse = 0.0;  // mean mini-batch loss over the epoch
  double val_mse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::vector<double> batch_losses;
  std::size_t best_val_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();

  bool operator==(const TrainingLog& o) const {
    if (epochs.size() != o.epochs.size() || batch_losses != o.batch_losses || best_val_epoch != o.best_val_epoch) {
      return false;
    }
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      const auto &a = epochs[i], &b = o.epochs[i];
      const bool val_same = (std::isnan(a.val_mse) && std::isnan(b.val_mse)) || a.val_mse == b.val_mse;
      if (a.epoch != b.epoch || a.lr != b.lr || a.train_mse != b.train_mse || !val_same) return false;
    }
    return true;
  }
};

struct TrainOptions {
  std::size_t max_steps = 0;  // 0: run every epoch in full
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Mean squared error of evaluation-mode predictions.
inline double evaluate_mse(const ForecastModel& model, const WindowSet& set) {
  if (set.empty()) throw DataError("evaluate: empty window set");
  const std::vector<double> pred = predict(model, set);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - set.target[i]) * (pred[i] - set.target[i]);
  return acc / static_cast<double>(pred.size());
}

/// Mini-batch Adam on MSE with the step-decay schedule from the spec. Final
/// epoch weights are kept; the best validation epoch is only logged.
inline TrainingLog train(ForecastModel& model, const WindowSet& train_set, const WindowSet& val_set,
                         std::uint64_t seed, const TrainOptions& options = {}) {
  if (train_set.size() < 2) throw DataError("train: need at least two training windows");
  const Hyper& h = model.spec.hyper;
  Rng order_rng(seed);
  Rng dropout_rng = order_rng.split();
  AdamState adam = AdamState::with_lr(h.lr);
  adam.decay_factor = h.lr_decay;
  adam.decay_every = static_cast<int>(h.decay_every);
  layers::ParamList plist = model.params();
  std::vector<Variable> params = plist.variables();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TrainingLog log;
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < h.epochs; ++epoch) {
    apply_lr_schedule(adam, static_cast<int>(epoch));
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t seen = 0, batch_index = 0;
    for (std::size_t begin = 0, end = 0; begin < order.size(); begin = end, ++batch_index) {
      end = std::min(order.size(), begin + h.batch_size);
      if (order.size() - end == 1) end = order.size();  // no singleton batch for batch norm
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Batch batch = train_set.gather(idx);
      double loss_value = 0.0;
      try {
        Variable loss = mse_loss(model.forward_train(batch, &dropout_rng), Variable(batch.target));
        loss_value = loss.value().item();
        backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      adam_step(params, adam);
      for (auto& p : params) p.zero_grad();
      log.batch_losses.push_back(loss_value);
      loss_sum += loss_value * static_cast<double>(idx.size());
      seen += idx.size();
      if (options.max_steps != 0 && ++steps >= options.max_steps) break;
    }
    EpochRecord rec{epoch + 1, adam.lr, loss_sum / static_cast<double>(seen),
                    std::numeric_limits<double>::quiet_NaN()};
    if (!val_set.empty()) {
      rec.val_mse = evaluate_mse(model, val_set);
      if (rec.val_mse < log.best_val_mse) {
        log.best_val_mse = rec.val_mse;
        log.best_val_epoch = rec.epoch;
      }
    }
    log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (options.max_steps != 0 && steps >= options.max_steps) break;
  }
  return log;
}

}  // namespace loadcast::models
