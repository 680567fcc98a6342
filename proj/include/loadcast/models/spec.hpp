#pragma once

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"
#include "loadcast/core/errors.hpp"
#include "loadcast/layers/recurrent.hpp"

namespace loadcast::models {

enum class Architecture { kBp, kCnn, kLstm, kBiLstm, kGru, kScl, kPcl, kScg, kPcg, kScga, kPcga };

inline constexpr std::array<Architecture, 11> kAllArchitectures = {
    Architecture::kBp,  Architecture::kCnn, Architecture::kLstm, Architecture::kBiLstm,
    Architecture::kGru, Architecture::kScl, Architecture::kPcl,  Architecture::kScg,
    Architecture::kPcg, Architecture::kScga, Architecture::kPcga};

enum class Fusion { kNone, kSerial, kParallel };

/// How the fused feature vector reaches the head: as is, as the mean of its
/// M rows, or through additive attention over the M rows.
enum class FeatureReduce { kFlat, kMeanRows, kAttention };

/// Which recurrent output feeds the dense layer after the recurrent stack.
enum class RecurrentReadout { kFinalStates, kFullSequence };

inline std::string_view name(Architecture a) {
  switch (a) {
    case Architecture::kBp: return "BP";
    case Architecture::kCnn: return "CNN";
    case Architecture::kLstm: return "LSTM";
    case Architecture::kBiLstm: return "BiLSTM";
    case Architecture::kGru: return "GRU";
    case Architecture::kScl: return "SCL";
    case Architecture::kPcl: return "PCL";
    case Architecture::kScg: return "SCG";
    case Architecture::kPcg: return "PCG";
    case Architecture::kScga: return "SCGA";
    case Architecture::kPcga: return "PCGA";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view s) {
  for (Architecture a : kAllArchitectures) {
    if (name(a) == s) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

inline Fusion fusion_of(Architecture a) {
  switch (a) {
    case Architecture::kScl:
    case Architecture::kScg:
    case Architecture::kScga: return Fusion::kSerial;
    case Architecture::kPcl:
    case Architecture::kPcg:
    case Architecture::kPcga: return Fusion::kParallel;
    default: return Fusion::kNone;
  }
}

inline bool has_attention(Architecture a) { return a == Architecture::kScga || a == Architecture::kPcga; }

inline bool has_recurrent(Architecture a) { return a != Architecture::kBp && a != Architecture::kCnn; }

inline layers::CellKind cell_of(Architecture a) {
  switch (a) {
    case Architecture::kLstm:
    case Architecture::kBiLstm:
    case Architecture::kScl:
    case Architecture::kPcl: return layers::CellKind::kLstm;
    default: return layers::CellKind::kGru;
  }
}

/// LSTM, SCL and PCL run one direction; every GRU variant and BiLSTM run both.
inline bool bidirectional_of(Architecture a) {
  return a == Architecture::kBiLstm || cell_of(a) == layers::CellKind::kGru;
}

/// Network widths and training settings. Defaults follow the reference
/// configuration (hidden 150 x 2, channels 64/128, kernel 3, pool 2/2,
/// dropout 0.3, Adam lr 1e-4 halved every 10 epochs, batch 64, 50 epochs).
struct Hyper {
  std::size_t hidden = 150;
  std::size_t recurrent_layers = 2;
  std::size_t channels1 = 64;
  std::size_t channels2 = 128;
  std::size_t kernel = 3;
  std::size_t pool = 2;
  std::size_t pool_stride = 2;
  double dropout = 0.3;
  std::size_t attention_rows = 10;
  std::size_t attention_hidden = 0;  // 0: row width
  FeatureReduce reduce = FeatureReduce::kFlat;  // overridden to attention for SCGA/PCGA
  RecurrentReadout readout = RecurrentReadout::kFinalStates;

  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  double lr_decay = 0.5;
  std::size_t decay_every = 10;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
};

struct ModelSpec {
  Architecture architecture = Architecture::kPcga;
  std::size_t steps = 12;
  std::size_t dyn_features = 1;
  std::size_t stat_features = 0;
  Hyper hyper;

  Fusion fusion() const { return fusion_of(architecture); }
  bool attention() const { return has_attention(architecture); }
  layers::CellKind cell() const { return cell_of(architecture); }
  bool bidirectional() const { return bidirectional_of(architecture); }
  std::size_t all_features() const { return dyn_features + stat_features; }

  FeatureReduce reduce() const { return attention() ? FeatureReduce::kAttention : hyper.reduce; }

  /// Length left after two conv + pool stages on a sequence of `len`.
  std::size_t pooled_length(std::size_t len) const {
    const std::size_t p = hyper.pool, s = hyper.pool_stride;
    if (len < p) return 0;
    const std::size_t once = (len - p) / s + 1;
    if (once < p) return 0;
    return (once - p) / s + 1;
  }

  void validate() const {
    const Hyper& h = hyper;
    if (steps == 0) throw ConfigError("model spec: steps must be positive");
    if (dyn_features == 0) throw ConfigError("model spec: at least one dynamic feature is required");
    if (h.hidden == 0 || h.recurrent_layers == 0 || h.channels1 == 0 || h.channels2 == 0 || h.kernel == 0 ||
        h.pool == 0 || h.pool_stride == 0 || h.batch_size == 0 || h.decay_every == 0) {
      throw ConfigError("model spec: widths, kernel, pool, batch size and decay period must be positive");
    }
    if (h.kernel % 2 == 0) throw ConfigError("model spec: kernel size must be odd for same padding");
    if (!(h.dropout >= 0.0 && h.dropout < 1.0)) throw ConfigError("model spec: dropout must lie in [0, 1)");
    if (!(h.lr >= 0.0)) throw ConfigError("model spec: learning rate must be non-negative");
    const std::string arch(name(architecture));
    if (architecture == Architecture::kCnn && pooled_length(steps) == 0) {
      throw ConfigError(arch + ": " + std::to_string(steps) + " steps are too few for two pooling stages");
    }
    if (fusion() == Fusion::kSerial && pooled_length(all_features()) == 0) {
      throw ConfigError(arch + ": " + std::to_string(all_features()) +
                        " features are too few for the per-step convolution stack");
    }
    if (fusion() == Fusion::kParallel) {
      if (stat_features == 0) throw ConfigError(arch + ": parallel fusion needs static features");
      if (pooled_length(stat_features) == 0) {
        throw ConfigError(arch + ": " + std::to_string(stat_features) +
                          " static features are too few for two pooling stages");
      }
    }
    if (reduce() != FeatureReduce::kFlat) {
      const std::size_t width = fused_width();
      if (h.attention_rows == 0 || width % h.attention_rows != 0) {
        throw ConfigError(arch + ": fused width " + std::to_string(width) + " is not divisible into " +
                          std::to_string(h.attention_rows) + " attention rows");
      }
    }
  }

  /// Width of the vector entering the reduce stage.
  std::size_t fused_width() const { return fusion() == Fusion::kParallel ? 2 * hyper.hidden : hyper.hidden; }

  /// Width of the vector entering the head.
  std::size_t head_input() const {
    return reduce() == FeatureReduce::kFlat ? fused_width() : fused_width() / hyper.attention_rows;
  }
};

// ---- JSON ----

inline nlohmann::json to_json(const ModelSpec& s) {
  const Hyper& h = s.hyper;
  return {
      {"architecture", std::string(name(s.architecture))},
      {"steps", s.steps},
      {"dyn_features", s.dyn_features},
      {"stat_features", s.stat_features},
      {"hyper",
       {{"hidden", h.hidden},
        {"recurrent_layers", h.recurrent_layers},
        {"channels1", h.channels1},
        {"channels2", h.channels2},
        {"kernel", h.kernel},
        {"pool", h.pool},
        {"pool_stride", h.pool_stride},
        {"dropout", h.dropout},
        {"attention_rows", h.attention_rows},
        {"attention_hidden", h.attention_hidden},
        {"reduce", static_cast<int>(h.reduce)},
        {"readout", static_cast<int>(h.readout)},
        {"epochs", h.epochs},
        {"batch_size", h.batch_size},
        {"lr", h.lr},
        {"lr_decay", h.lr_decay},
        {"decay_every", h.decay_every},
        {"bn_eps", h.bn_eps},
        {"bn_momentum", h.bn_momentum}}},
  };
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.architecture = parse_architecture(j.at("architecture").get<std::string>());
    s.steps = j.at("steps").get<std::size_t>();
    s.dyn_features = j.at("dyn_features").get<std::size_t>();
    s.stat_features = j.at("stat_features").get<std::size_t>();
    const auto& h = j.at("hyper");
    Hyper& o = s.hyper;
    o.hidden = h.at("hidden").get<std::size_t>();
    o.recurrent_layers = h.at("recurrent_layers").get<std::size_t>();
    o.channels1 = h.at("channels1").get<std::size_t>();
    o.channels2 = h.at("channels2").get<std::size_t>();
    o.kernel = h.at("kernel").get<std::size_t>();
    o.pool = h.at("pool").get<std::size_t>();
    o.pool_stride = h.at("pool_stride").get<std::size_t>();
    o.dropout = h.at("dropout").get<double>();
    o.attention_rows = h.at("attention_rows").get<std::size_t>();
    o.attention_hidden = h.at("attention_hidden").get<std::size_t>();
    o.reduce = static_cast<FeatureReduce>(h.at("reduce").get<int>());
    o.readout = static_cast<RecurrentReadout>(h.at("readout").get<int>());
    o.epochs = h.at("epochs").get<std::size_t>();
    o.batch_size = h.at("batch_size").get<std::size_t>();
    o.lr = h.at("lr").get<double>();
    o.lr_decay = h.at("lr_decay").get<double>();
    o.decay_every = h.at("decay_every").get<std::size_t>();
    o.bn_eps = h.at("bn_eps").get<double>();
    o.bn_momentum = h.at("bn_momentum").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model spec JSON: ") + e.what());
  }
}

}  // namespace loadcast::models
