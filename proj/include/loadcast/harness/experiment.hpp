#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "loadcast/featsel/screen.hpp"
#include "loadcast/harness/config.hpp"
#include "loadcast/harness/synth.hpp"
#include "loadcast/metrics/metrics.hpp"
#include "loadcast/models/train.hpp"
#include "loadcast/models/weights_io.hpp"
#include "loadcast/preprocess/exogenous.hpp"
#include "loadcast/preprocess/pipeline.hpp"

namespace loadcast::harness {

inline constexpr const char* kToolVersion = "1.0.0";

using Logger = std::function<void(const std::string&)>;

/// Runs `f`, prefixing any library error with the stage name while keeping
/// its type.
template <typename F>
decltype(auto) run_stage(const std::string& stage, F&& f) {
  const std::string tag = "[" + stage + "] ";
  try {
    return f();
  } catch (const ShapeError& e) {
    throw ShapeError(tag + e.what());
  } catch (const NumericError& e) {
    throw NumericError(tag + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const FormatError& e) {
    throw FormatError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const Error& e) {
    throw Error(tag + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(tag + e.what());
  }
}

// ---- inputs ----

struct Inputs {
  preprocess::LoadSeries load;
  preprocess::WeatherTable weather;
  preprocess::HolidayCalendar holidays;
  preprocess::ExogenousTable exogenous;
  std::vector<SynthTruth> truth;  // synthetic runs only
};

/// Reads the configured CSV files, or generates the synthetic set and, when
/// `synth_dir` is not empty, writes it there.
inline Inputs load_inputs(const RunConfig& c, const std::string& synth_dir = "") {
  Inputs in;
  if (c.use_synth) {
    SynthData d = synth_generate(c.synth, c.seed);
    if (!synth_dir.empty()) write_synth(d, synth_dir);
    in.load = std::move(d.load);
    in.weather = std::move(d.weather);
    in.holidays = std::move(d.holidays);
    in.exogenous = std::move(d.exogenous);
    in.truth = std::move(d.truth);
    return in;
  }
  in.load = preprocess::read_load_csv(c.load_csv);
  in.weather = preprocess::read_weather_csv(c.weather_csv);
  in.holidays = preprocess::read_holiday_csv(c.holiday_csv);
  if (!c.exogenous_csv.empty()) in.exogenous = preprocess::read_exogenous_csv(c.exogenous_csv);
  return in;
}

// ---- dataset ----

struct Dataset {
  preprocess::TimeSeriesTable table;
  std::size_t missing_filled = 0;
  std::size_t outliers = 0;
  std::optional<featsel::ScreenReport> screen;
  std::vector<int> retained;
  preprocess::FeatureLayout layout;
  std::vector<std::string> dyn_names, stat_names;
  WindowSet raw;  // unscaled windows, chronological
  preprocess::SplitData split;

  std::size_t train_begin() const { return 0; }
  std::size_t val_begin() const { return split.train.size(); }
  std::size_t test_begin() const { return split.train.size() + split.val.size(); }
};

inline std::vector<int> parse_feature_ids(const std::string& text) {
  std::vector<int> ids;
  for (const auto& item : detail::split_list(text)) {
    int v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || v < 0) {
      throw ConfigError("features: '" + item + "' is not a feature id");
    }
    ids.push_back(v);
  }
  if (ids.empty()) throw ConfigError("features: empty id list");
  return ids;
}

inline preprocess::TimeSeriesTable prepare_inputs(const RunConfig& c, const Inputs& in, std::size_t* missing = nullptr,
                                                  std::size_t* outliers = nullptr) {
  preprocess::PreprocessOptions opt;
  opt.outliers = c.outliers;
  preprocess::PreparedTable p = preprocess::prepare_table(in.load, in.weather, in.holidays, opt);
  if (!in.exogenous.empty()) preprocess::append_exogenous(p.table, in.exogenous);
  if (missing) *missing = p.missing_filled;
  if (outliers) *outliers = p.outliers.size();
  return std::move(p.table);
}

/// Feature ids fed to the models: the screened set topped up to the static
/// floor, the reference list, or an explicit list.
inline std::vector<int> select_features(const RunConfig& c, const preprocess::TimeSeriesTable& t,
                                        std::optional<featsel::ScreenReport>& report) {
  if (c.features == "screen") {
    featsel::ScreenOptions opt = c.screen;
    opt.seed = c.seed;
    report = featsel::screen(t, preprocess::kLoadId, opt);
    return featsel::with_static_floor(*report, c.min_static);
  }
  std::vector<int> ids;
  if (c.features == "default") {
    for (int id : preprocess::kDefaultRetained) {
      bool present = false;
      for (const auto& col : t.columns) present = present || col.id == id;
      if (present) ids.push_back(id);
    }
    return ids;
  }
  ids = parse_feature_ids(c.features);
  for (int id : ids) t.by_id(id);
  return ids;
}

inline Dataset build_dataset(const RunConfig& c, const Inputs& in, const Logger& log = {}) {
  Dataset d;
  run_stage("preprocess", [&] { d.table = prepare_inputs(c, in, &d.missing_filled, &d.outliers); });
  if (log) {
    log("preprocess: " + std::to_string(d.table.rows()) + " rows, " + std::to_string(d.missing_filled) +
        " missing filled, " + std::to_string(d.outliers) + " outliers cleaned");
  }
  run_stage("screen", [&] { d.retained = select_features(c, d.table, d.screen); });
  run_stage("window", [&] {
    d.layout = preprocess::layout_for(d.table, d.retained);
    d.dyn_names = preprocess::column_names(d.table, d.layout.dynamic);
    d.stat_names = preprocess::column_names(d.table, d.layout.stat);
    d.raw = preprocess::make_windows(d.table, d.layout, c.steps, c.horizon);
    if (c.window_limit != 0 && c.window_limit < d.raw.size()) d.raw = d.raw.subset(0, c.window_limit);
    d.split = preprocess::split_and_normalize(d.raw, d.dyn_names, d.stat_names, c.split);
    if (d.split.val.empty() || d.split.test.empty()) throw DataError("validation or test split is empty");
  });
  if (log) {
    log("windows: " + std::to_string(d.raw.size()) + " (" + std::to_string(d.split.train.size()) + " train, " +
        std::to_string(d.split.val.size()) + " val, " + std::to_string(d.split.test.size()) + " test), " +
        std::to_string(d.dyn_names.size()) + " dynamic and " + std::to_string(d.stat_names.size()) +
        " static features");
  }
  return d;
}

// ---- models ----

struct SplitPredictions {
  std::string split;
  std::vector<std::int64_t> time;
  std::vector<double> actual;     // original units
  std::vector<double> predicted;  // original units
  metrics::MetricsReport report;
};

struct ModelResult {
  models::Architecture architecture{};
  std::size_t parameters = 0;
  models::TrainingLog log;
  std::vector<SplitPredictions> splits;  // val, test
  double seconds = 0.0;

  const SplitPredictions& at(const std::string& split) const {
    for (const auto& s : splits) {
      if (s.split == split) return s;
    }
    throw DataError("no predictions for split '" + split + "'");
  }
};

inline const WindowSet& scaled_split(const Dataset& d, const std::string& split) {
  if (split == "train") return d.split.train;
  if (split == "val") return d.split.val;
  if (split == "test") return d.split.test;
  throw ConfigError("unknown split '" + split + "' (expected train, val or test)");
}

inline std::size_t split_offset(const Dataset& d, const std::string& split) {
  if (split == "train") return d.train_begin();
  return split == "val" ? d.val_begin() : d.test_begin();
}

/// Evaluation-mode predictions on one split, in original units.
inline SplitPredictions predict_split(const models::ForecastModel& model, const Dataset& d, const std::string& split) {
  const WindowSet& w = scaled_split(d, split);
  const std::size_t off = split_offset(d, split);
  SplitPredictions p;
  p.split = split;
  p.time = w.time;
  const std::vector<double> scaled = models::predict(model, w);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    p.predicted.push_back(d.split.scaler.target.invert(scaled[i]));
    p.actual.push_back(d.raw.target[off + i]);
  }
  for (double v : p.predicted) {
    if (!std::isfinite(v)) throw NumericError("prediction on the " + split + " split is not finite");
  }
  p.report = metrics::evaluate(p.predicted, p.actual);
  return p;
}

// First and last test days with a full day of samples; the first and last
// days present when none is complete.
inline std::pair<std::int64_t, std::int64_t> report_days(const std::vector<std::int64_t>& time) {
  std::map<std::int64_t, std::size_t> per_day;
  for (auto t : time) ++per_day[preprocess::day_of(t)];
  std::vector<std::int64_t> full;
  for (const auto& [day, count] : per_day) {
    if (count == preprocess::kPointsPerDay) full.push_back(day);
  }
  if (full.empty()) return {per_day.begin()->first, per_day.rbegin()->first};
  return {full.front(), full.back()};
}

inline void write_model_reports(const RunConfig& c, const ModelResult& r, const std::string& dir) {
  using preprocess::format_number;
  std::vector<metrics::MetricsRow> rows;
  std::vector<metrics::DensityRow> dens;
  for (const auto& s : r.splits) {
    rows.push_back({s.split, s.report});
    dens.push_back({s.split, metrics::error_density(s.predicted, s.actual, c.density_bins)});
  }
  metrics::write_metrics_csv(dir + "/metrics.csv", rows);
  metrics::write_error_density_csv(dir + "/error_density.csv", dens);
  {
    preprocess::CsvWriter w(dir + "/predictions.csv", {"split", "timestamp", "actual", "predicted"});
    for (const auto& s : r.splits) {
      for (std::size_t i = 0; i < s.time.size(); ++i) {
        w.row({s.split, preprocess::format_timestamp(s.time[i]), format_number(s.actual[i]),
               format_number(s.predicted[i])});
      }
    }
  }
  {
    const SplitPredictions& test = r.at("test");
    const auto [nearest, farthest] = report_days(test.time);
    preprocess::CsvWriter w(dir + "/test_days.csv", {"day", "timestamp", "actual", "predicted"});
    for (const auto& [label, day] : {std::pair<const char*, std::int64_t>{"nearest", nearest}, {"farthest", farthest}}) {
      for (std::size_t i = 0; i < test.time.size(); ++i) {
        if (preprocess::day_of(test.time[i]) != day) continue;
        w.row({label, preprocess::format_timestamp(test.time[i]), format_number(test.actual[i]),
               format_number(test.predicted[i])});
      }
    }
  }
  {
    preprocess::CsvWriter w(dir + "/training_log.csv", {"epoch", "lr", "train_mse", "val_mse"});
    for (const auto& e : r.log.epochs) {
      w.row({std::to_string(e.epoch), format_number(e.lr), format_number(e.train_mse), format_number(e.val_mse)});
    }
  }
}

/// Builds, trains and evaluates one architecture. With a non-empty `dir`
/// the weights, scaler and per-model reports are written there.
inline ModelResult train_and_evaluate(const RunConfig& c, const Dataset& d, models::Architecture a,
                                      const std::string& dir = "", const Logger& log = {}) {
  const std::string arch(models::name(a));
  return run_stage("train " + arch, [&] {
    const auto start = std::chrono::steady_clock::now();
    const models::ModelSpec spec = model_spec(c, a, d.dyn_names.size(), d.stat_names.size());
    models::ForecastModel model = models::ForecastModel::build(spec, c.seed);
    ModelResult r;
    r.architecture = a;
    r.parameters = model.params().count();
    models::TrainOptions opt;
    if (log) {
      opt.on_epoch = [&](const models::EpochRecord& e) {
        log(arch + " epoch " + std::to_string(e.epoch) + "/" + std::to_string(spec.hyper.epochs) +
            " train_mse " + preprocess::format_number(e.train_mse) + " val_mse " + preprocess::format_number(e.val_mse));
      };
    }
    r.log = models::train(model, d.split.train, d.split.val, c.seed + 1, opt);
    r.splits.push_back(predict_split(model, d, "val"));
    r.splits.push_back(predict_split(model, d, "test"));
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!dir.empty()) {
      std::filesystem::create_directories(dir);
      models::save_weights(model, dir + "/weights.lcw");
      preprocess::save_scaler(d.split.scaler, dir + "/scaler.json");
      write_model_reports(c, r, dir);
    }
    if (log) {
      log(arch + ": test RMSE " + preprocess::format_number(r.at("test").report.rmse) + " (" +
          std::to_string(static_cast<long long>(r.seconds)) + " s)");
    }
    return r;
  });
}

// ---- summary ----

/// (value - baseline) / baseline * 100.
inline double percent_delta(double value, double baseline) { return (value - baseline) / baseline * 100.0 + 0.0; }

inline void write_summary_csv(const std::string& path, const std::vector<ModelResult>& results) {
  using preprocess::format_number;
  static constexpr const char* kMetrics[] = {"MAPE", "MAE", "RMSE", "R2"};
  auto values = [](const metrics::MetricsReport& m) { return std::array<double, 4>{m.mape, m.mae, m.rmse, m.r2}; };
  std::vector<std::string> header{"architecture", "split"};
  for (const char* m : kMetrics) header.emplace_back(m);
  for (const char* base : {"CNN", "GRU"}) {
    for (const char* m : kMetrics) header.push_back(std::string(m) + "_vs_" + base + "_pct");
  }
  preprocess::CsvWriter w(path, header);
  auto find = [&](models::Architecture a) -> const ModelResult* {
    for (const auto& r : results) {
      if (r.architecture == a) return &r;
    }
    return nullptr;
  };
  const ModelResult* cnn = find(models::Architecture::kCnn);
  const ModelResult* gru = find(models::Architecture::kGru);
  for (const char* split : {"val", "test"}) {
    for (const auto& r : results) {
      const auto v = values(r.at(split).report);
      std::vector<std::string> row{std::string(models::name(r.architecture)), split};
      for (double x : v) row.push_back(format_number(x));
      for (const ModelResult* base : {cnn, gru}) {
        for (std::size_t k = 0; k < 4; ++k) {
          row.push_back(base ? format_number(percent_delta(v[k], values(base->at(split).report)[k])) : "nan");
        }
      }
      w.row(row);
    }
  }
}

inline void write_features_csv(const std::string& path, const Dataset& d) {
  preprocess::CsvWriter w(path, {"id", "name", "branch"});
  for (int id : d.layout.dynamic) w.row({std::to_string(id), d.table.by_id(id).name, "dynamic"});
  for (int id : d.layout.stat) w.row({std::to_string(id), d.table.by_id(id).name, "static"});
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline nlohmann::json manifest_json(const RunConfig& c, const Dataset& d, const std::vector<ModelResult>& results) {
  nlohmann::json j;
  j["tool"] = "loadcast";
  j["version"] = kToolVersion;
  j["config_hash"] = config_hash(c);
  j["seed"] = c.seed;
  j["formats"] = {{"scaler", preprocess::kScalerVersion},
                  {"weights", models::kWeightFormatVersion},
                  {"window_cache", preprocess::kWindowCacheVersion}};
  j["windows"] = {{"train", d.split.train.size()}, {"val", d.split.val.size()}, {"test", d.split.test.size()}};
  j["features"] = {{"dynamic", d.dyn_names}, {"static", d.stat_names}};
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : results) {
    models.push_back({{"architecture", std::string(models::name(r.architecture))},
                      {"parameters", r.parameters},
                      {"epochs", r.log.epochs.size()},
                      {"best_val_epoch", r.log.best_val_epoch},
                      {"train_seconds", r.seconds}});
  }
  j["models"] = models;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& f : config_fields()) cfg[f.key] = f.get(c);
  j["config"] = cfg;
  j["created_utc"] = utc_now();
  return j;
}

struct ExperimentResult {
  std::string output_dir;
  std::vector<ModelResult> models;
};

/// preprocess -> screen -> window -> split -> per architecture train and
/// evaluate, then the summary and manifest. Output is assembled in a
/// sibling staging directory and moved into place only on success.
inline ExperimentResult run_experiment(const RunConfig& c, const Logger& log = {}) {
  run_stage("config", [&] { c.validate(); });
  namespace fs = std::filesystem;
  const fs::path out(c.output_dir);
  const fs::path staging = out.string() + ".partial";
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    const Inputs in = run_stage("data", [&] { return load_inputs(c, (staging / "data").string()); });
    const Dataset d = build_dataset(c, in, log);
    run_stage("report", [&] {
      std::ofstream(staging / "config.txt") << config_text(c);
      write_features_csv((staging / "features.csv").string(), d);
      if (d.screen) {
        featsel::write_screen_report((staging / "screen_report.csv").string(), *d.screen);
        featsel::write_screen_thresholds((staging / "screen_thresholds.csv").string(), *d.screen);
      }
    });
    ExperimentResult res;
    for (auto a : c.architectures) {
      res.models.push_back(train_and_evaluate(c, d, a, (staging / std::string(models::name(a))).string(), log));
    }
    run_stage("report", [&] {
      write_summary_csv((staging / "summary.csv").string(), res.models);
      std::ofstream(staging / "manifest.json") << manifest_json(c, d, res.models).dump(2) << '\n';
      fs::remove_all(out);
      fs::rename(staging, out);
    });
    res.output_dir = out.string();
    return res;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace loadcast::harness
