// loadcast command-line entry point.
//
// Exit codes: 0 success, 2 configuration error, 3 data or format error,
// 4 numeric failure, 1 anything else.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loadcast/harness/bounds_report.hpp"
#include "loadcast/harness/experiment.hpp"
#include "loadcast/harness/predict.hpp"

namespace lc = loadcast;
namespace h = loadcast::harness;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  bool synth = false;
  std::string out;

  void attach(CLI::App* cmd, const std::string& out_help) {
    cmd->add_option("-c,--config", config_path, "Configuration file (key = value lines)");
    cmd->add_option("-s,--set", overrides, "Override a configuration key, key=value (repeatable)");
    cmd->add_flag("--synth", synth, "Use the synthetic data set regardless of data.* keys");
    cmd->add_option("-o,--out", out, out_help);
  }

  h::RunConfig resolve() const {
    h::RunConfig c = config_path.empty() ? h::RunConfig{} : h::load_config(config_path);
    h::apply_overrides(c, overrides);
    if (synth) c.use_synth = true;
    if (!out.empty()) c.output_dir = out;
    c.validate();
    return c;
  }
};

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::string ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const lc::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const lc::NumericError*>(&e)) return 4;
  if (dynamic_cast<const lc::DataError*>(&e) || dynamic_cast<const lc::FormatError*>(&e) ||
      dynamic_cast<const lc::ShapeError*>(&e)) {
    return 3;
  }
  return 1;
}

std::vector<lc::models::Architecture> parse_architectures(const std::vector<std::string>& names) {
  std::vector<lc::models::Architecture> out;
  for (const auto& n : names) out.push_back(lc::models::parse_architecture(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loadcast: short-term load forecasting with fused static and dynamic features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", h::kToolVersion);

  ConfigArgs synth_args, pre_args, screen_args, train_args, eval_args, run_args;

  auto* synth = app.add_subcommand("synth", "Write a synthetic load, weather, holiday and exogenous data set");
  synth_args.attach(synth, "Directory for the CSV files");

  auto* pre = app.add_subcommand("preprocess", "Write the processed feature table and the window cache");
  pre_args.attach(pre, "Output directory");

  auto* scr = app.add_subcommand("screen", "Run the Granger and copula-entropy feature screen");
  screen_args.attach(scr, "Output directory");

  std::string train_arch = "PCGA";
  auto* trn = app.add_subcommand("train", "Train one architecture and write its weights, scaler and reports");
  train_args.attach(trn, "Output directory");
  trn->add_option("-a,--arch", train_arch, "Architecture (BP, CNN, LSTM, BiLSTM, GRU, SCL, PCL, SCG, PCG, SCGA, PCGA)");

  std::string eval_weights, eval_scaler, eval_split = "test";
  long long export_window = -1;
  auto* evl = app.add_subcommand("evaluate", "Evaluate saved weights on one split of the configured data");
  eval_args.attach(evl, "Output directory");
  evl->add_option("-w,--weights", eval_weights, "Weights file")->required();
  evl->add_option("--scaler", eval_scaler, "Scaler file")->required();
  evl->add_option("--split", eval_split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  evl->add_option("--export-window", export_window, "Also write window <i> of the split as window_<i>.csv");

  std::string pred_weights, pred_scaler, pred_window;
  auto* prd = app.add_subcommand("predict", "Forecast the next point from one window CSV");
  prd->add_option("-w,--weights", pred_weights, "Weights file")->required();
  prd->add_option("--scaler", pred_scaler, "Scaler file")->required();
  prd->add_option("--window", pred_window, "Window CSV (row,<dynamic...>,<static...>)")->required();

  h::BoundsOptions bopt;
  std::string bounds_out = "bounds_report.csv";
  auto* bnd = app.add_subcommand("bounds", "Rademacher, bound-term and independence diagnostics");
  bnd->add_option("-o,--out", bounds_out, "Report CSV path");
  bnd->add_option("--seed", bopt.seed, "Seed");
  bnd->add_option("--draws", bopt.mc_draws, "Monte Carlo sign draws")->check(CLI::Range(2, 100000000));
  bnd->add_option("--samples", bopt.samples, "Samples n of the toy classes")->check(CLI::Range(1, 64));
  bnd->add_option("--hypotheses", bopt.hypotheses, "Size of the random class")->check(CLI::Range(1, 4096));
  bnd->add_option("--mi-samples", bopt.independence_n, "Samples per independence estimate");
  bnd->add_option("--mi-seeds", bopt.independence_seeds, "Seeds per mixing level");
  bnd->add_option("--delta", bopt.delta, "Confidence parameter");

  std::vector<std::string> run_archs;
  auto* run = app.add_subcommand("run", "Full pipeline over the configured architectures");
  run_args.attach(run, "Report directory");
  run->add_option("-a,--arch", run_archs, "Restrict to these architectures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const h::RunConfig c = synth_args.resolve();
      const std::string dir = synth_args.out.empty() ? "synth_data" : synth_args.out;
      const auto paths = h::write_synth(h::synth_generate(c.synth, c.seed), dir);
      for (const auto& p : {paths.load, paths.weather, paths.holidays, paths.exogenous, paths.truth}) {
        if (!p.empty()) std::cout << p << '\n';
      }
    } else if (*pre) {
      const h::RunConfig c = pre_args.resolve();
      const std::string dir = ensure_dir(c.output_dir);
      const h::Inputs in = h::run_stage("data", [&] { return h::load_inputs(c); });
      const h::Dataset d = h::build_dataset(c, in, log_line);
      lc::preprocess::write_table_csv(dir + "/table.csv", d.table);
      lc::preprocess::save_windows(d.raw, dir + "/windows.bin");
      h::write_features_csv(dir + "/features.csv", d);
      std::cout << dir << '\n';
    } else if (*scr) {
      const h::RunConfig c = screen_args.resolve();
      const std::string dir = ensure_dir(c.output_dir);
      const h::Inputs in = h::run_stage("data", [&] { return h::load_inputs(c); });
      const auto table = h::run_stage("preprocess", [&] { return h::prepare_inputs(c, in); });
      const auto rep = h::run_stage("screen", [&] {
        lc::featsel::ScreenOptions opt = c.screen;
        opt.seed = c.seed;
        return lc::featsel::screen(table, lc::preprocess::kLoadId, opt);
      });
      lc::featsel::write_screen_report(dir + "/screen_report.csv", rep);
      lc::featsel::write_screen_thresholds(dir + "/screen_thresholds.csv", rep);
      lc::preprocess::CsvWriter w(dir + "/features.csv", {"id", "name"});
      for (int id : lc::featsel::with_static_floor(rep, c.min_static)) w.row({std::to_string(id), table.by_id(id).name});
      std::cout << dir << '\n';
    } else if (*trn) {
      const h::RunConfig c = train_args.resolve();
      const auto arch = h::run_stage("config", [&] { return lc::models::parse_architecture(train_arch); });
      const h::Inputs in = h::run_stage("data", [&] { return h::load_inputs(c); });
      const h::Dataset d = h::build_dataset(c, in, log_line);
      h::train_and_evaluate(c, d, arch, ensure_dir(c.output_dir), log_line);
      std::cout << c.output_dir << '\n';
    } else if (*evl) {
      const h::RunConfig c = eval_args.resolve();
      const std::string dir = ensure_dir(c.output_dir);
      const auto model = h::run_stage("load", [&] { return lc::models::load_weights(eval_weights); });
      const auto scaler = h::run_stage("load", [&] { return lc::preprocess::load_scaler(eval_scaler); });
      h::run_stage("load", [&] { h::check_compatible(model.spec, scaler); });
      const h::Inputs in = h::run_stage("data", [&] { return h::load_inputs(c); });
      const h::Dataset d = h::build_dataset(c, in, log_line);
      h::run_stage("evaluate", [&] {
        const std::size_t off = h::split_offset(d, eval_split);
        const std::size_t len = h::scaled_split(d, eval_split).size();
        const lc::WindowSet raw = d.raw.subset(off, off + len);
        h::SplitPredictions p;
        p.split = eval_split;
        p.time = raw.time;
        p.actual = raw.target;
        p.predicted = h::predict_raw(model, scaler, raw);
        p.report = lc::metrics::evaluate(p.predicted, p.actual);
        lc::metrics::write_metrics_csv(dir + "/metrics.csv", {{eval_split, p.report}});
        lc::metrics::write_error_density_csv(
            dir + "/error_density.csv", {{eval_split, lc::metrics::error_density(p.predicted, p.actual, c.density_bins)}});
        lc::preprocess::CsvWriter w(dir + "/predictions.csv", {"split", "timestamp", "actual", "predicted"});
        for (std::size_t i = 0; i < p.time.size(); ++i) {
          w.row({eval_split, lc::preprocess::format_timestamp(p.time[i]), lc::preprocess::format_number(p.actual[i]),
                 lc::preprocess::format_number(p.predicted[i])});
        }
        if (export_window >= 0) {
          const auto i = static_cast<std::size_t>(export_window);
          const std::string path = dir + "/window_" + std::to_string(i) + ".csv";
          h::write_window_csv(path, scaler, raw, i);
          std::cout << path << ' ' << lc::preprocess::format_number(p.predicted.at(i)) << '\n';
        }
        std::cout << "MAPE " << lc::preprocess::format_number(p.report.mape) << " MAE "
                  << lc::preprocess::format_number(p.report.mae) << " RMSE "
                  << lc::preprocess::format_number(p.report.rmse) << " R2 "
                  << lc::preprocess::format_number(p.report.r2) << '\n';
      });
    } else if (*prd) {
      const double y =
          h::run_stage("predict", [&] { return h::predict_from_files(pred_weights, pred_scaler, pred_window); });
      std::cout << lc::preprocess::format_number(y) << '\n';
    } else if (*bnd) {
      const auto rows = h::run_stage("bounds", [&] { return h::bounds_report(bopt); });
      h::write_bounds_report(bounds_out, rows);
      std::cout << bounds_out << '\n';
    } else if (*run) {
      h::RunConfig c = run_args.resolve();
      if (!run_archs.empty()) c.architectures = h::run_stage("config", [&] { return parse_architectures(run_archs); });
      const auto res = h::run_experiment(c, log_line);
      std::cout << res.output_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
