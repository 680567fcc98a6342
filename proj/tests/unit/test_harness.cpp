#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "loadcast/harness/bounds_report.hpp"
#include "loadcast/harness/experiment.hpp"
#include "loadcast/harness/predict.hpp"

using namespace loadcast;
using namespace loadcast::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("loadcast_harness_" + name);
  fs::remove_all(p);
  fs::remove_all(p.string() + ".partial");
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny(const fs::path& out, models::Architecture a = models::Architecture::kGru) {
  RunConfig c;
  c.synth.n_days = 30;
  c.hyper.hidden = 10;
  c.hyper.channels1 = 4;
  c.hyper.channels2 = 4;
  c.hyper.epochs = 2;
  c.hyper.lr = 1e-3;
  c.features = "default";
  c.output_dir = out.string();
  c.architectures = {a};
  return c;
}

SynthSpec quiet_spec() {
  SynthSpec s;
  s.start_date = "2020-12-28";
  s.n_days = 35;
  s.noise_sigma = 0.0;
  s.driver_coefs.clear();
  s.distractors = 0;
  s.trend_slope = 0.0;
  s.weather_coef = 0.0;
  return s;
}

}  // namespace

// ---- config ----

TEST(Config, DefaultsFollowReferenceSettings) {
  const RunConfig c;
  EXPECT_EQ(c.hyper.hidden, 150u);
  EXPECT_EQ(c.hyper.recurrent_layers, 2u);
  EXPECT_EQ(c.hyper.channels1, 64u);
  EXPECT_EQ(c.hyper.channels2, 128u);
  EXPECT_EQ(c.hyper.kernel, 3u);
  EXPECT_EQ(c.hyper.epochs, 50u);
  EXPECT_EQ(c.hyper.batch_size, 64u);
  EXPECT_DOUBLE_EQ(c.hyper.lr, 1e-4);
  EXPECT_DOUBLE_EQ(c.hyper.dropout, 0.3);
  EXPECT_DOUBLE_EQ(c.split.train + c.split.val + c.split.test, 1.0);
  EXPECT_EQ(c.architectures.size(), 11u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesTextWithComments) {
  RunConfig c;
  std::istringstream in("# comment\n\n  model.hidden = 40  \ntrain.lr=0.001 # trailing\narchitectures = GRU, PCGA\n");
  apply_config_text(c, in, "cfg");
  EXPECT_EQ(c.hyper.hidden, 40u);
  EXPECT_DOUBLE_EQ(c.hyper.lr, 0.001);
  ASSERT_EQ(c.architectures.size(), 2u);
  EXPECT_EQ(c.architectures[1], models::Architecture::kPcga);
}

TEST(Config, ErrorsNameKeyAndLine) {
  RunConfig c;
  std::istringstream bad_value("seed = 3\nmodel.hidden = lots\n");
  try {
    apply_config_text(c, bad_value, "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("model.hidden"), std::string::npos) << e.what();
  }
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_THROW(apply_config_text(c, unknown, "cfg"), ConfigError);
  std::istringstream no_eq("seed 3\n");
  EXPECT_THROW(apply_config_text(c, no_eq, "cfg"), ConfigError);
  EXPECT_THROW(apply_overrides(c, {"architectures=GRU,XYZ"}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {"split.train=0.9"}); c.validate(), ConfigError);
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig a;
  apply_overrides(a, {"model.hidden=40", "synth.driver_coefs=1.5,2", "screen.ce_min=0.01", "seed=9"});
  RunConfig b;
  std::istringstream in(config_text(a));
  apply_config_text(b, in, "text");
  EXPECT_EQ(config_text(a), config_text(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  apply_overrides(b, {"seed=10"});
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, FilePathsSwitchOffSynth) {
  RunConfig c;
  apply_overrides(c, {"data.load=a.csv"});
  EXPECT_FALSE(c.use_synth);
  EXPECT_THROW(c.validate(), ConfigError);
}

// ---- synth ----

TEST(Synth, NoiselessLoadIsClosedForm) {
  SynthSpec s = quiet_spec();
  s.trend_slope = 0.7;
  const SynthData d = synth_generate(s, 3);
  const std::int64_t first = preprocess::parse_date(s.start_date);
  ASSERT_EQ(d.load.size(), s.n_days * preprocess::kPointsPerDay);
  EXPECT_TRUE(d.exogenous.empty());
  for (std::size_t i = 0; i < d.load.size(); ++i) {
    const std::int64_t day = preprocess::day_of(d.load.time[i]);
    const double expect = synth_base_signal(s, static_cast<std::size_t>(day - first),
                                            preprocess::minute_of_day(d.load.time[i]),
                                            preprocess::is_weekend_day(day), d.holidays.count(day) > 0);
    ASSERT_EQ(d.load.load[i] - 0.0, expect) << i;
  }
}

TEST(Synth, HolidaysSitBelowAdjacentWorkdays) {
  const SynthSpec s = quiet_spec();
  const SynthData d = synth_generate(s, 1);
  const std::int64_t new_year = preprocess::days_from_civil({2021, 1, 1});  // a Friday
  ASSERT_TRUE(d.holidays.count(new_year));
  auto day_mean = [&](std::int64_t day) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.load.size(); ++i) {
      if (preprocess::day_of(d.load.time[i]) == day) {
        acc += d.load.load[i];
        ++n;
      }
    }
    return acc / static_cast<double>(n);
  };
  EXPECT_NEAR(day_mean(new_year) - day_mean(new_year - 1), -s.holiday_effect * s.base_load, 1e-9);
  EXPECT_NEAR(day_mean(new_year + 1) - day_mean(new_year - 1), -s.weekly_dip * s.base_load, 1e-9);
}

TEST(Synth, SameSeedWritesIdenticalFiles) {
  const SynthSpec s;
  const auto a = write_synth(synth_generate(s, 5), scratch("synth_a").string());
  const auto b = write_synth(synth_generate(s, 5), scratch("synth_b").string());
  const auto c = write_synth(synth_generate(s, 6), scratch("synth_c").string());
  for (auto m : {&SynthPaths::load, &SynthPaths::weather, &SynthPaths::holidays, &SynthPaths::exogenous,
                 &SynthPaths::truth}) {
    EXPECT_EQ(slurp(a.*m), slurp(b.*m)) << a.*m;
  }
  EXPECT_NE(slurp(a.load), slurp(c.load));
}

TEST(Synth, RejectsBadSpec) {
  SynthSpec s;
  s.n_days = 10;
  EXPECT_THROW(synth_generate(s, 0), ConfigError);
  s = SynthSpec{};
  s.noise_sigma = -1.0;
  EXPECT_THROW(synth_generate(s, 0), ConfigError);
}

// ---- experiment ----

TEST(Experiment, SplitsAreChronological) {
  const RunConfig c = tiny(scratch("chrono"));
  const Dataset d = build_dataset(c, load_inputs(c));
  const auto& tr = d.split.train.time;
  const auto& va = d.split.val.time;
  const auto& te = d.split.test.time;
  EXPECT_LT(*std::max_element(tr.begin(), tr.end()), *std::min_element(va.begin(), va.end()));
  EXPECT_LT(*std::max_element(va.begin(), va.end()), *std::min_element(te.begin(), te.end()));
  EXPECT_EQ(d.dyn_names.front(), "load");
}

TEST(Experiment, GruRunWritesReportsAndIsDeterministic) {
  const fs::path out1 = scratch("run1"), out2 = scratch("run2");
  RunConfig c = tiny(out1);
  const auto res = run_experiment(c);
  EXPECT_EQ(res.output_dir, out1.string());
  EXPECT_FALSE(fs::exists(out1.string() + ".partial"));
  for (const char* f : {"summary.csv", "manifest.json", "config.txt", "features.csv", "GRU/metrics.csv",
                        "GRU/error_density.csv", "GRU/predictions.csv", "GRU/test_days.csv", "GRU/weights.lcw",
                        "GRU/scaler.json", "GRU/training_log.csv", "data/load.csv"}) {
    EXPECT_TRUE(fs::exists(out1 / f)) << f;
  }
  const auto metrics = preprocess::read_csv((out1 / "GRU/metrics.csv").string());
  EXPECT_EQ(metrics.header, (std::vector<std::string>{"split", "MAPE", "MAE", "RMSE", "R2"}));
  ASSERT_EQ(metrics.rows.size(), 2u);
  EXPECT_EQ(metrics.rows[0][0], "val");
  EXPECT_EQ(metrics.rows[1][0], "test");

  c.output_dir = out2.string();
  run_experiment(c);
  for (const char* f : {"summary.csv", "GRU/metrics.csv", "GRU/predictions.csv", "GRU/error_density.csv",
                        "GRU/weights.lcw", "features.csv"}) {
    EXPECT_EQ(slurp(out1 / f), slurp(out2 / f)) << f;
  }
}

TEST(Experiment, FailureIsStageTaggedAndLeavesNothing) {
  const fs::path out = scratch("fail");
  RunConfig c = tiny(out);
  apply_overrides(c, {"data.load=/nonexistent/load.csv", "data.weather=/nonexistent/w.csv",
                      "data.holidays=/nonexistent/h.csv"});
  try {
    run_experiment(c);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("[data]"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(out.string() + ".partial"));
}

TEST(Experiment, SummaryDeltasAgainstBothBaselines) {
  auto result = [](models::Architecture a, double mape, double mae, double rmse, double r2) {
    ModelResult r;
    r.architecture = a;
    for (const char* split : {"val", "test"}) {
      SplitPredictions p;
      p.split = split;
      p.report.mape = mape;
      p.report.mae = mae;
      p.report.rmse = rmse;
      p.report.r2 = r2;
      r.splits.push_back(p);
    }
    return r;
  };
  const std::vector<ModelResult> rs = {result(models::Architecture::kCnn, 4.0, 2.0, 2.0, 0.8),
                                       result(models::Architecture::kGru, 2.0, 1.0, 1.6, 0.9),
                                       result(models::Architecture::kPcga, 1.5, 0.5, 1.5, 0.96)};
  const fs::path dir = scratch("summary");
  fs::create_directories(dir);
  write_summary_csv((dir / "summary.csv").string(), rs);
  const auto t = preprocess::read_csv((dir / "summary.csv").string());
  ASSERT_EQ(t.rows.size(), 6u);
  const auto& pcga = t.rows[5];
  ASSERT_EQ(pcga[0], "PCGA");
  ASSERT_EQ(pcga[1], "test");
  auto at = [&](const char* col) { return std::stod(pcga[t.column(col)]); };
  EXPECT_DOUBLE_EQ(at("MAPE_vs_CNN_pct"), -62.5);
  EXPECT_DOUBLE_EQ(at("MAE_vs_CNN_pct"), -75.0);
  EXPECT_DOUBLE_EQ(at("RMSE_vs_CNN_pct"), -25.0);
  EXPECT_DOUBLE_EQ(at("R2_vs_CNN_pct"), 20.0);
  EXPECT_DOUBLE_EQ(at("MAPE_vs_GRU_pct"), -25.0);
  EXPECT_DOUBLE_EQ(at("MAE_vs_GRU_pct"), -50.0);
  EXPECT_NEAR(at("RMSE_vs_GRU_pct"), -6.25, 1e-12);
  EXPECT_NEAR(at("R2_vs_GRU_pct"), 6.0 / 0.9 * 100.0 / 100.0, 1e-12);
  EXPECT_EQ(t.rows[0][t.column("RMSE_vs_CNN_pct")], "0");
}

TEST(Experiment, ReportDaysPreferCompleteDays) {
  std::vector<std::int64_t> t;
  const std::int64_t d0 = preprocess::parse_date("2021-03-01");
  for (std::int64_t m = 600; m < 3 * preprocess::kMinutesPerDay; m += preprocess::kLoadCadence) {
    t.push_back(d0 * preprocess::kMinutesPerDay + m);
  }
  const auto [nearest, farthest] = report_days(t);
  EXPECT_EQ(nearest, d0 + 1);
  EXPECT_EQ(farthest, d0 + 2);
}

// ---- predict ----

TEST(Predict, WindowFileReproducesEvaluationBitExactly) {
  const fs::path dir = scratch("predict");
  RunConfig c = tiny(dir, models::Architecture::kPcga);
  const Dataset d = build_dataset(c, load_inputs(c));
  const ModelResult r = train_and_evaluate(c, d, models::Architecture::kPcga, dir.string());
  const std::string weights = (dir / "weights.lcw").string(), scaler = (dir / "scaler.json").string();

  const std::size_t off = d.val_begin();
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, d.split.val.size() - 1}) {
    const fs::path w = dir / ("val_" + std::to_string(i) + ".csv");
    write_window_csv(w.string(), d.split.scaler, d.raw.subset(off, off + d.split.val.size()), i);
    EXPECT_EQ(predict_from_files(weights, scaler, w.string()), r.at("val").predicted[i]) << i;
  }

  // a training window against the batched evaluation of the training split
  const models::ForecastModel model = models::load_weights(weights);
  const auto train_pred = predict_raw(model, preprocess::load_scaler(scaler), d.raw.subset(0, d.split.train.size()));
  const fs::path w = dir / "train_5.csv";
  write_window_csv(w.string(), d.split.scaler, d.raw, 5);
  EXPECT_EQ(predict_from_files(weights, scaler, w.string()), train_pred[5]);
}

TEST(Predict, MalformedWindowNamesTheProblem) {
  preprocess::Scaler s;
  s.steps = 2;
  s.dyn_names = {"load", "temp"};
  s.stat_names = {"hour"};
  s.dyn.resize(2);
  s.stat.resize(1);
  auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return parse_window_csv(preprocess::parse_csv(in, "w.csv"), s);
  };
  const WindowSet ok = parse("row,load,temp,hour\n1,1,2,\n2,3,4,\nstatic,,,5\n");
  EXPECT_EQ(ok.dyn, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(ok.stat, (std::vector<double>{5}));
  const WindowSet reordered = parse("hour,temp,row,load\n,2,1,1\n,4,2,3\n5,,static,\n");
  EXPECT_EQ(reordered.dyn, ok.dyn);

  auto message = [&](const std::string& text) {
    try {
      parse(text);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("row,load,hour\n1,1,\n2,3,\nstatic,,5\n").find("missing column 'temp'"), std::string::npos);
  EXPECT_NE(message("row,load,temp,hour,wind\n1,1,2,,\n2,3,4,,\nstatic,,,5,\n").find("unexpected column 'wind'"),
            std::string::npos);
  EXPECT_NE(message("row,load,temp,hour\n1,1,,\n2,3,4,\nstatic,,,5\n").find("column 'temp' row 1 is empty"),
            std::string::npos);
  EXPECT_NE(message("row,load,temp,hour\n1,1,x,\n2,3,4,\nstatic,,,5\n").find("column 'temp'"), std::string::npos);
  EXPECT_NE(message("row,load,temp,hour\n1,1,2,\nstatic,,,5\n").find("2 history rows"), std::string::npos);
}

TEST(Predict, RefusesStaleScalerWithBothVersions) {
  const fs::path dir = scratch("stale");
  RunConfig c = tiny(dir);
  const Dataset d = build_dataset(c, load_inputs(c));
  fs::create_directories(dir);
  const std::string path = (dir / "scaler.json").string();
  preprocess::save_scaler(d.split.scaler, path);
  auto j = nlohmann::json::parse(slurp(path));
  j["version"] = 7;
  std::ofstream(path) << j.dump();
  try {
    preprocess::load_scaler(path);
    FAIL();
  } catch (const FormatError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find('7'), std::string::npos) << m;
    EXPECT_NE(m.find(std::to_string(preprocess::kScalerVersion)), std::string::npos) << m;
  }
}

TEST(Predict, RejectsScalerForOtherLayout) {
  models::ModelSpec spec;
  spec.architecture = models::Architecture::kGru;
  spec.steps = 12;
  spec.dyn_features = 3;
  spec.stat_features = 4;
  preprocess::Scaler s;
  s.steps = 12;
  s.dyn.resize(3);
  s.stat.resize(5);
  EXPECT_THROW(check_compatible(spec, s), DataError);
  s.stat.resize(4);
  EXPECT_NO_THROW(check_compatible(spec, s));
}

// ---- bounds report ----

TEST(BoundsReport, SectionsAndSigns) {
  BoundsOptions opt;
  opt.mc_draws = 2000;
  opt.independence_n = 500;
  opt.independence_seeds = 3;
  const auto rows = bounds_report(opt);
  auto find = [&](const std::string& section, const std::string& item) -> const BoundsRow& {
    for (const auto& r : rows) {
      if (r.section == section && r.item == item) return r;
    }
    throw std::runtime_error("missing row " + section + "/" + item);
  };
  EXPECT_EQ(*find("rademacher", "singleton").exact, 0.0);
  EXPECT_NEAR(*find("rademacher", "sign_patterns_n4").exact, 0.5, 1e-15);
  EXPECT_EQ(find("bound_terms_equal", "term_Cov").value, 0.0);
  EXPECT_LT(find("bound_terms_adaptive", "total").value, find("bound_terms_equal", "total").value);
  EXPECT_GT(find("independence", "mixing=1").value, find("independence", "mixing=0").value);
  const fs::path dir = scratch("bounds");
  fs::create_directories(dir);
  write_bounds_report((dir / "b.csv").string(), rows);
  const auto t = preprocess::read_csv((dir / "b.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"section", "item", "value", "std_error", "exact", "reference"}));
  EXPECT_EQ(t.rows.size(), rows.size());
}
