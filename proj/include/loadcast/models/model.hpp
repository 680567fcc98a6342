#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/core/ops.hpp"
#include "loadcast/core/windows.hpp"
#include "loadcast/layers/attention.hpp"
#include "loadcast/layers/conv.hpp"
#include "loadcast/layers/dense.hpp"
#include "loadcast/layers/normalization.hpp"
#include "loadcast/layers/recurrent.hpp"
#include "loadcast/models/spec.hpp"

namespace loadcast::models {

using layers::Activation;
using layers::Mode;

/// Two conv + max-pool stages followed by flattening: [N x C x L] -> [N x C2*L'].
struct ConvStack {
  layers::Conv1d c1;
  layers::Conv1d c2;
  std::size_t pool = 2;
  std::size_t stride = 2;

  ConvStack() = default;
  ConvStack(std::size_t in_channels, const Hyper& h, Rng& rng)
      : c1(in_channels, h.channels1, h.kernel, Padding::kSame, Activation::kRelu, rng),
        c2(h.channels1, h.channels2, h.kernel, Padding::kSame, Activation::kRelu, rng),
        pool(h.pool),
        stride(h.pool_stride) {}

  Variable operator()(const Variable& x) const {
    Variable y = maxpool1d(c2(maxpool1d(c1(x), pool, stride)), pool, stride);
    return reshape(y, {y.dim(0), y.dim(1) * y.dim(2)});
  }

  void collect(layers::ParamList& list, const std::string& prefix) const {
    c1.collect(list, layers::join_name(prefix, "c1"));
    c2.collect(list, layers::join_name(prefix, "c2"));
  }
};

/// Batch norm -> dense(ReLU) -> dropout -> dense(1).
struct Head {
  layers::BatchNorm bn;
  layers::Dense hidden;
  layers::Dense out;
  double dropout = 0.0;

  Head() = default;
  Head(std::size_t in, const Hyper& h, Rng& rng)
      : bn(in), hidden(in, h.hidden, Activation::kRelu, rng), out(h.hidden, 1, Activation::kNone, rng),
        dropout(h.dropout) {
    bn.eps = h.bn_eps;
    bn.momentum = h.bn_momentum;
  }

  // Training mode updates the running statistics.
  Variable train(const Variable& x, Rng* dropout_rng) {
    Variable y = hidden(bn(x, Mode::kTrain));
    if (dropout_rng != nullptr) y = layers::dropout(y, dropout, Mode::kTrain, *dropout_rng);
    return reshape(out(y), {x.dim(0)});
  }

  Variable eval(const Variable& x) const {
    BatchNormStats stats = bn.stats;
    Variable y = hidden(batch_norm(x, bn.gamma, bn.beta, stats, false, bn.eps, bn.momentum));
    return reshape(out(y), {x.dim(0)});
  }

  void collect(layers::ParamList& list, const std::string& prefix) {
    bn.collect(list, layers::join_name(prefix, "bn"));
    hidden.collect(list, layers::join_name(prefix, "hidden"));
    out.collect(list, layers::join_name(prefix, "out"));
  }
};

/// One of the eleven forecasting networks. Which members are populated
/// depends on the architecture:
///   BP        flatten -> dense -> dense -> head
///   CNN       window as [F x T] channels -> conv stack -> dense -> head
///   LSTM...   recurrent stack over the full window -> dense -> head
///   serial    per-step conv stack over the feature axis -> dense -> recurrent -> dense -> reduce -> head
///   parallel  (conv stack on the static vector -> dense) concatenated with
///             (recurrent stack on the dynamic block -> dense) -> reduce -> head
class ForecastModel {
 public:
  ModelSpec spec;
  layers::Dense bp1;
  layers::Dense bp2;
  ConvStack conv;
  layers::Dense conv_dense;
  layers::RecurrentStack rnn;
  layers::Dense rnn_dense;
  layers::Attention attention;
  Head head;

  static ForecastModel build(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ForecastModel m;
    m.spec = spec;
    Rng rng(seed);
    const Hyper& h = spec.hyper;
    const std::size_t F = spec.all_features(), T = spec.steps;
    switch (spec.architecture) {
      case Architecture::kBp:
        m.bp1 = layers::Dense(T * F, h.hidden, Activation::kRelu, rng);
        m.bp2 = layers::Dense(h.hidden, h.hidden, Activation::kRelu, rng);
        break;
      case Architecture::kCnn:
        m.conv = ConvStack(F, h, rng);
        m.conv_dense = layers::Dense(h.channels2 * spec.pooled_length(T), h.hidden, Activation::kRelu, rng);
        break;
      default: break;
    }
    if (spec.fusion() == Fusion::kSerial) {
      m.conv = ConvStack(1, h, rng);
      m.conv_dense = layers::Dense(h.channels2 * spec.pooled_length(F), h.hidden, Activation::kRelu, rng);
    } else if (spec.fusion() == Fusion::kParallel) {
      m.conv = ConvStack(1, h, rng);
      m.conv_dense =
          layers::Dense(h.channels2 * spec.pooled_length(spec.stat_features), h.hidden, Activation::kRelu, rng);
    }
    if (has_recurrent(spec.architecture)) {
      const std::size_t in = spec.fusion() == Fusion::kSerial     ? h.hidden
                             : spec.fusion() == Fusion::kParallel ? spec.dyn_features
                                                                  : F;
      m.rnn = layers::RecurrentStack(spec.cell(), in, h.hidden, h.recurrent_layers, spec.bidirectional(), rng);
      m.rnn_dense = layers::Dense(readout_width(spec), h.hidden, Activation::kRelu, rng);
    }
    if (spec.reduce() == FeatureReduce::kAttention) {
      const std::size_t row = spec.fused_width() / h.attention_rows;
      m.attention = layers::Attention(row, h.attention_hidden == 0 ? row : h.attention_hidden, rng);
    }
    m.head = Head(spec.head_input(), h, rng);
    return m;
  }

  /// Training-mode forward: batch statistics (updated in place) and dropout
  /// when `dropout_rng` is non-null.
  Variable forward_train(const Batch& batch, Rng* dropout_rng) {
    return head.train(features(batch), dropout_rng);
  }

  /// Evaluation-mode forward. Pure: safe to call concurrently.
  Variable forward_eval(const Batch& batch) const { return head.eval(features(batch)); }

  Variable forward(const Batch& batch, Mode mode, Rng* dropout_rng = nullptr) {
    return mode == Mode::kTrain ? forward_train(batch, dropout_rng) : forward_eval(batch);
  }

  /// Attention weights [B x M] for an evaluation batch (SCGA/PCGA only).
  Tensor attention_weights(const Batch& batch) const {
    if (spec.reduce() != FeatureReduce::kAttention) throw ConfigError("model has no attention layer");
    NoGradGuard guard;
    return attention(rows(fused(batch))).weights.value();
  }

  layers::ParamList params() {
    layers::ParamList list;
    switch (spec.architecture) {
      case Architecture::kBp:
        bp1.collect(list, "bp1");
        bp2.collect(list, "bp2");
        break;
      default: break;
    }
    if (spec.architecture == Architecture::kCnn || spec.fusion() != Fusion::kNone) {
      conv.collect(list, "conv");
      conv_dense.collect(list, "conv_dense");
    }
    if (has_recurrent(spec.architecture)) {
      rnn.collect(list, "rnn");
      rnn_dense.collect(list, "rnn_dense");
    }
    if (spec.reduce() == FeatureReduce::kAttention) attention.collect(list, "attention");
    head.collect(list, "head");
    return list;
  }

  std::size_t parameter_count() { return params().count(); }

  /// Deep copy: parameters and running statistics no longer alias this model.
  ForecastModel clone() const {
    ForecastModel copy = build(spec, 0);
    ForecastModel& self = const_cast<ForecastModel&>(*this);
    layers::ParamList src = self.params(), dst = copy.params();
    for (std::size_t i = 0; i < src.trainable.size(); ++i) {
      dst.trainable[i].second.mutable_value() = src.trainable[i].second.value();
    }
    for (std::size_t i = 0; i < src.buffers.size(); ++i) *dst.buffers[i].second = *src.buffers[i].second;
    return copy;
  }

  static std::size_t readout_width(const ModelSpec& spec) {
    const std::size_t dirs = spec.bidirectional() ? 2 : 1;
    const std::size_t per_step = dirs * spec.hyper.hidden;
    return spec.hyper.readout == RecurrentReadout::kFullSequence ? spec.steps * per_step : per_step;
  }

 private:
  void check(const Batch& b) const {
    const std::size_t n = b.target.size();
    if (b.dyn.shape() != Shape{n, spec.steps, spec.dyn_features}) {
      throw ShapeError("model: dynamic block " + to_string(b.dyn.shape()) + " does not match spec [" +
                       std::to_string(n) + ", " + std::to_string(spec.steps) + ", " +
                       std::to_string(spec.dyn_features) + "]");
    }
    if (spec.stat_features > 0 && b.stat.shape() != Shape{n, spec.stat_features}) {
      throw ShapeError("model: static block " + to_string(b.stat.shape()) + " does not match " +
                       std::to_string(spec.stat_features) + " static features");
    }
  }

  // [B x T x (D_dyn + D_stat)] with the static vector repeated at every step.
  Variable full_window(const Batch& b) const {
    Variable dyn(b.dyn);
    if (spec.stat_features == 0) return dyn;
    Variable stat = reshape(Variable(b.stat), {b.size(), 1, spec.stat_features});
    std::vector<Variable> reps(spec.steps, stat);
    return concat({dyn, concat(reps, 1)}, 2);
  }

  Variable recurrent_features(const Variable& seq) const {
    layers::RecurrentOutput out = rnn(seq);
    Variable r = spec.hyper.readout == RecurrentReadout::kFullSequence
                     ? reshape(out.sequence, {seq.dim(0), readout_width(spec)})
                     : out.final;
    return rnn_dense(r);
  }

  // Feature vector before the reduce stage.
  Variable fused(const Batch& b) const {
    check(b);
    const std::size_t B = b.size(), T = spec.steps, F = spec.all_features();
    switch (spec.fusion()) {
      case Fusion::kSerial: {
        Variable per_step = reshape(full_window(b), {B * T, 1, F});
        Variable feats = reshape(conv_dense(conv(per_step)), {B, T, spec.hyper.hidden});
        return recurrent_features(feats);
      }
      case Fusion::kParallel: {
        Variable stat_branch = conv_dense(conv(reshape(Variable(b.stat), {B, 1, spec.stat_features})));
        Variable dyn_branch = recurrent_features(Variable(b.dyn));
        return concat({stat_branch, dyn_branch}, 1);
      }
      case Fusion::kNone: break;
    }
    Variable window = full_window(b);
    switch (spec.architecture) {
      case Architecture::kBp: return bp2(bp1(reshape(window, {B, T * F})));
      case Architecture::kCnn: return conv_dense(conv(transpose_last2(window)));
      default: return recurrent_features(window);
    }
  }

  Variable rows(const Variable& v) const {
    const std::size_t m = spec.hyper.attention_rows;
    return reshape(v, {v.dim(0), m, v.dim(1) / m});
  }

  Variable features(const Batch& b) const {
    Variable v = fused(b);
    switch (spec.reduce()) {
      case FeatureReduce::kFlat: return v;
      case FeatureReduce::kMeanRows: return mean_axis(rows(v), 1);
      case FeatureReduce::kAttention: return attention(rows(v)).context;
    }
    return v;
  }
};

/// Closed-form trainable parameter count implied by a spec.
inline std::size_t expected_parameter_count(const ModelSpec& spec) {
  using layers::Attention;
  using layers::BatchNorm;
  using layers::Conv1d;
  using layers::Dense;
  using layers::RecurrentStack;
  const Hyper& h = spec.hyper;
  const std::size_t F = spec.all_features(), T = spec.steps;
  auto conv_stack = [&](std::size_t in_channels, std::size_t len) {
    return Conv1d::param_count(in_channels, h.channels1, h.kernel) +
           Conv1d::param_count(h.channels1, h.channels2, h.kernel) +
           Dense::param_count(h.channels2 * spec.pooled_length(len), h.hidden);
  };
  std::size_t n = 0;
  if (spec.architecture == Architecture::kBp) n += Dense::param_count(T * F, h.hidden) + Dense::param_count(h.hidden, h.hidden);
  if (spec.architecture == Architecture::kCnn) n += conv_stack(F, T);
  if (spec.fusion() == Fusion::kSerial) n += conv_stack(1, F);
  if (spec.fusion() == Fusion::kParallel) n += conv_stack(1, spec.stat_features);
  if (has_recurrent(spec.architecture)) {
    const std::size_t in = spec.fusion() == Fusion::kSerial     ? h.hidden
                           : spec.fusion() == Fusion::kParallel ? spec.dyn_features
                                                                : F;
    n += RecurrentStack::param_count(spec.cell(), in, h.hidden, h.recurrent_layers, spec.bidirectional());
    n += Dense::param_count(ForecastModel::readout_width(spec), h.hidden);
  }
  if (spec.reduce() == FeatureReduce::kAttention) {
    const std::size_t row = spec.fused_width() / h.attention_rows;
    n += Attention::param_count(row, h.attention_hidden == 0 ? row : h.attention_hidden);
  }
  n += BatchNorm::param_count(spec.head_input()) + Dense::param_count(spec.head_input(), h.hidden) +
       Dense::param_count(h.hidden, 1);
  return n;
}

/// Evaluation-mode predictions for every window, in order.
inline std::vector<double> predict(const ForecastModel& model, const WindowSet& set, std::size_t batch = 256) {
  NoGradGuard guard;
  std::vector<double> out;
  out.reserve(set.size());
  for (std::size_t begin = 0; begin < set.size(); begin += batch) {
    const std::size_t end = std::min(set.size(), begin + batch);
    Tensor y = model.forward_eval(set.range(begin, end)).value();
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return out;
}

}  // namespace loadcast::models
