#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "loadcast/core/binary_io.hpp"
#include "loadcast/featsel/screen.hpp"
#include "loadcast/harness/synth.hpp"
#include "loadcast/models/spec.hpp"
#include "loadcast/preprocess/clean.hpp"
#include "loadcast/preprocess/dataset.hpp"

namespace loadcast::harness {

/// Everything a run needs. Defaults reproduce the reference configuration.
struct RunConfig {
  // inputs: either the three CSV files (plus optional exogenous series) or a
  // synthetic data set generated from `synth`
  bool use_synth = true;
  std::string load_csv, weather_csv, holiday_csv, exogenous_csv;
  SynthSpec synth;

  std::uint64_t seed = 1;
  std::size_t steps = 12;
  std::size_t horizon = 1;
  std::size_t window_limit = 0;  // 0: keep every window; otherwise the first N
  preprocess::SplitRatios split;
  preprocess::OutlierOptions outliers;

  models::Hyper hyper;
  std::vector<models::Architecture> architectures{models::kAllArchitectures.begin(), models::kAllArchitectures.end()};

  featsel::ScreenOptions screen;
  std::string features = "screen";  // "screen", "default", or a comma-separated id list
  std::size_t min_static = 4;

  std::size_t density_bins = 50;
  std::string output_dir = "loadcast_run";

  void validate() const {
    split.validate();
    if (steps == 0 || horizon == 0) throw ConfigError("config: window.steps and window.horizon must be positive");
    if (!use_synth && (load_csv.empty() || weather_csv.empty() || holiday_csv.empty())) {
      throw ConfigError("config: data.load, data.weather and data.holidays are required unless data.synth = true");
    }
    if (use_synth) synth.validate();
    if (architectures.empty()) throw ConfigError("config: architectures is empty");
    if (density_bins < 2) throw ConfigError("config: report.density_bins must be at least 2");
    if (!(screen.alpha >= 0.0 && screen.alpha <= 1.0)) throw ConfigError("config: screen.alpha must be in [0, 1]");
    if (!(outliers.k > 0.0)) throw ConfigError("config: outlier.k must be positive");
  }
};

namespace detail {

inline std::string format_size(std::size_t v) { return std::to_string(v); }

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config: key '" + key + "': invalid value '" + value + "' (expected " + expected + ")");
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = preprocess::detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace detail

struct ConfigField {
  const char* key;
  const char* doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
};

/// Every configuration key, in file order.
inline const std::vector<ConfigField>& config_fields() {
  using detail::format_size;
  using preprocess::format_number;
  auto size_field = [](const char* key, const char* doc, auto member) {
    return ConfigField{key, doc, [member](const RunConfig& c) { return format_size(member(const_cast<RunConfig&>(c))); },
                       [member](RunConfig& c, const std::string& k, const std::string& v) {
                         member(c) = detail::parse_size(k, v);
                       }};
  };
  auto double_field = [](const char* key, const char* doc, auto member) {
    return ConfigField{key, doc, [member](const RunConfig& c) { return format_number(member(const_cast<RunConfig&>(c))); },
                       [member](RunConfig& c, const std::string& k, const std::string& v) {
                         member(c) = detail::parse_double(k, v);
                       }};
  };
  auto string_field = [](const char* key, const char* doc, auto member) {
    return ConfigField{key, doc, [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); },
                       [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; }};
  };
#define LC_MEMBER(expr) [](RunConfig& c) -> auto& { return c.expr; }
  static const std::vector<ConfigField> fields = {
      string_field("data.load", "load CSV (timestamp,load_kw)", LC_MEMBER(load_csv)),
      string_field("data.weather", "weather CSV (date,tmax_c,...)", LC_MEMBER(weather_csv)),
      string_field("data.holidays", "holiday CSV (date,holiday_type)", LC_MEMBER(holiday_csv)),
      string_field("data.exogenous", "optional exogenous series CSV (timestamp,<name>...)", LC_MEMBER(exogenous_csv)),
      {"data.synth", "generate a synthetic data set instead of reading CSV files",
       [](const RunConfig& c) { return std::string(c.use_synth ? "true" : "false"); },
       [](RunConfig& c, const std::string& k, const std::string& v) { c.use_synth = detail::parse_bool(k, v); }},
      size_field("synth.n_days", "synthetic days", LC_MEMBER(synth.n_days)),
      string_field("synth.start_date", "first synthetic date", LC_MEMBER(synth.start_date)),
      double_field("synth.base_load", "base load, kW", LC_MEMBER(synth.base_load)),
      double_field("synth.trend_slope", "trend, kW per day", LC_MEMBER(synth.trend_slope)),
      double_field("synth.daily_amplitude", "daily cycle amplitude, fraction of base", LC_MEMBER(synth.daily_amplitude)),
      double_field("synth.weekly_dip", "weekend reduction, fraction of base", LC_MEMBER(synth.weekly_dip)),
      double_field("synth.holiday_effect", "holiday reduction, fraction of base", LC_MEMBER(synth.holiday_effect)),
      double_field("synth.weather_coef", "kW per degree beyond the comfort band", LC_MEMBER(synth.weather_coef)),
      double_field("synth.noise_sigma", "noise standard deviation, kW", LC_MEMBER(synth.noise_sigma)),
      {"synth.driver_coefs", "planted driver coefficients, kW per unit",
       [](const RunConfig& c) {
         std::vector<std::string> s;
         for (double v : c.synth.driver_coefs) s.push_back(preprocess::format_number(v));
         return detail::join(s);
       },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.driver_coefs.clear();
         for (const auto& item : detail::split_list(v)) c.synth.driver_coefs.push_back(detail::parse_double(k, item));
       }},
      double_field("synth.driver_phi", "AR(1) coefficient of drivers and distractors", LC_MEMBER(synth.driver_phi)),
      size_field("synth.distractors", "number of distractor series", LC_MEMBER(synth.distractors)),
      {"seed", "seed of every random stream", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = detail::parse_u64(k, v); }},
      size_field("window.steps", "input time steps", LC_MEMBER(steps)),
      size_field("window.horizon", "prediction step", LC_MEMBER(horizon)),
      size_field("window.limit", "keep only the first N windows (0: all)", LC_MEMBER(window_limit)),
      double_field("split.train", "training share", LC_MEMBER(split.train)),
      double_field("split.val", "validation share", LC_MEMBER(split.val)),
      double_field("split.test", "test share", LC_MEMBER(split.test)),
      double_field("outlier.k", "outlier threshold in MADs", LC_MEMBER(outliers.k)),
      {"outlier.window_days", "outlier reference window, days",
       [](const RunConfig& c) { return std::to_string(c.outliers.window_days); },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.outliers.window_days = static_cast<std::int64_t>(detail::parse_size(k, v));
       }},
      size_field("model.hidden", "hidden units per layer", LC_MEMBER(hyper.hidden)),
      size_field("model.recurrent_layers", "stacked recurrent layers", LC_MEMBER(hyper.recurrent_layers)),
      size_field("model.channels1", "first convolution channels", LC_MEMBER(hyper.channels1)),
      size_field("model.channels2", "second convolution channels", LC_MEMBER(hyper.channels2)),
      size_field("model.kernel", "convolution kernel size", LC_MEMBER(hyper.kernel)),
      size_field("model.pool", "pooling size", LC_MEMBER(hyper.pool)),
      size_field("model.pool_stride", "pooling stride", LC_MEMBER(hyper.pool_stride)),
      double_field("model.dropout", "dropout rate", LC_MEMBER(hyper.dropout)),
      size_field("model.attention_rows", "attention rows", LC_MEMBER(hyper.attention_rows)),
      size_field("model.attention_hidden", "attention scoring width (0: row width)", LC_MEMBER(hyper.attention_hidden)),
      size_field("train.epochs", "training epochs", LC_MEMBER(hyper.epochs)),
      size_field("train.batch_size", "mini-batch size", LC_MEMBER(hyper.batch_size)),
      double_field("train.lr", "initial learning rate", LC_MEMBER(hyper.lr)),
      double_field("train.lr_decay", "learning rate factor per decay period", LC_MEMBER(hyper.lr_decay)),
      size_field("train.decay_every", "epochs per decay period", LC_MEMBER(hyper.decay_every)),
      {"architectures", "comma-separated architectures or 'all'",
       [](const RunConfig& c) {
         std::vector<std::string> s;
         for (auto a : c.architectures) s.emplace_back(models::name(a));
         return detail::join(s);
       },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.architectures.clear();
         if (v == "all") {
           c.architectures.assign(models::kAllArchitectures.begin(), models::kAllArchitectures.end());
           return;
         }
         for (const auto& item : detail::split_list(v)) c.architectures.push_back(models::parse_architecture(item));
         if (c.architectures.empty()) detail::bad_value(k, v, "at least one architecture");
       }},
      double_field("screen.alpha", "Granger significance level", LC_MEMBER(screen.alpha)),
      {"screen.ce_min", "copula entropy threshold, nats ('auto': percentile rule)",
       [](const RunConfig& c) {
         return std::isnan(c.screen.ce_min) ? std::string("auto") : preprocess::format_number(c.screen.ce_min);
       },
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.screen.ce_min = v == "auto" ? std::numeric_limits<double>::quiet_NaN() : detail::parse_double(k, v);
       }},
      double_field("screen.ce_percentile", "percentile used when ce_min is auto", LC_MEMBER(screen.ce_percentile)),
      size_field("screen.lag", "Granger lag order", LC_MEMBER(screen.lag)),
      size_field("screen.neighbours", "neighbours of the entropy estimator", LC_MEMBER(screen.neighbours)),
      double_field("screen.difference_above", "lag-1 autocorrelation that triggers differencing",
                   LC_MEMBER(screen.difference_above)),
      string_field("features", "'screen', 'default', or a comma-separated id list", LC_MEMBER(features)),
      size_field("features.min_static", "minimum static features after screening", LC_MEMBER(min_static)),
      size_field("report.density_bins", "error histogram bins", LC_MEMBER(density_bins)),
      string_field("output.dir", "report directory", LC_MEMBER(output_dir)),
  };
#undef LC_MEMBER
  return fields;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields()) {
    if (key == f.key) {
      f.set(c, key, value);
      if (key == "data.load" || key == "data.weather" || key == "data.holidays") {
        if (!value.empty()) c.use_synth = false;
      }
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

/// Applies "key = value" lines; '#' starts a comment.
inline void apply_config_text(RunConfig& c, std::istream& in, const std::string& source) {
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = preprocess::detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(no) + ": expected 'key = value'");
    try {
      set_config_value(c, preprocess::detail::trim(line.substr(0, eq)), preprocess::detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RunConfig c;
  apply_config_text(c, in, path);
  return c;
}

/// Applies "key=value" overrides.
inline void apply_overrides(RunConfig& c, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected key=value");
    set_config_value(c, preprocess::detail::trim(o.substr(0, eq)), preprocess::detail::trim(o.substr(eq + 1)));
  }
}

/// Canonical "key = value" text of every field.
inline std::string config_text(const RunConfig& c) {
  std::string out;
  for (const auto& f : config_fields()) out += std::string(f.key) + " = " + f.get(c) + "\n";
  return out;
}

inline std::string config_hash(const RunConfig& c) {
  const std::string text = config_text(c);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(binary::fnv1a(text, text.size())));
  return buf;
}

inline models::ModelSpec model_spec(const RunConfig& c, models::Architecture a, std::size_t dyn, std::size_t stat) {
  models::ModelSpec s;
  s.architecture = a;
  s.steps = c.steps;
  s.dyn_features = dyn;
  s.stat_features = stat;
  s.hyper = c.hyper;
  return s;
}

}  // namespace loadcast::harness
