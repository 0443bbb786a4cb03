// Command-line front end for the DaTscan classification pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "datscan/config.hpp"
#include "datscan/model/checkpoint.hpp"
#include "datscan/pipeline.hpp"

namespace {

using datscan::PipelineConfig;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> data_root;
  std::optional<std::string> output_root;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "pipeline config file (dotted keys)");
  cmd->add_option("-s,--set", o.sets, "override a config key, e.g. --set train.epochs=30");
  cmd->add_option("--data-root", o.data_root, "volume directory (paths.data_root)");
  cmd->add_option("--out", o.output_root, "output directory (paths.output_root)");
  cmd->add_flag("-v,--verbose", o.verbose, "log every epoch");
}

/// Defaults, then the config file, then the environment, then flags.
PipelineConfig resolve(const CommonOptions& o, const PipelineConfig::KeyValues& flag_values) {
  PipelineConfig cfg;
  if (!o.config_file.empty()) cfg.apply(datscan::read_config_file(o.config_file));
  if (const char* env = std::getenv(datscan::kDataRootEnv); env && *env) cfg.data_root = env;
  PipelineConfig::KeyValues kv = flag_values;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw datscan::ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (o.data_root) kv["paths.data_root"] = *o.data_root;
  if (o.output_root) kv["paths.output_root"] = *o.output_root;
  if (o.verbose) kv["report.verbose"] = "true";
  cfg.apply(kv);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DaTscan SPECT PD/control classification pipeline"};
  app.require_subcommand(1);

  CommonOptions common;
  PipelineConfig::KeyValues flags;

  auto* synth = app.add_subcommand("synth", "generate labelled synthetic striatal phantoms");
  add_common(synth, common);
  std::optional<std::size_t> n_control, n_pd;
  std::optional<double> pd_factor;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--n-control", n_control, "number of CONTROL subjects");
  synth->add_option("--n-pd", n_pd, "number of PD subjects");
  synth->add_option("--pd-uptake-factor", pd_factor, "putamen uptake multiplier for PD");
  synth->add_option("--seed", synth_seed, "phantom seed");

  auto* preprocess = app.add_subcommand("preprocess", "convert volumes to slice-triplet PNGs");
  add_common(preprocess, common);

  auto* split = app.add_subcommand("split", "write the k-fold plan and the stratified holdout trees");
  add_common(split, common);

  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  add_common(crossval, common);
  std::optional<int> only_fold;
  bool merge = false;
  crossval->add_option("--fold", only_fold, "run a single fold (0-based) and write its row file");
  crossval->add_flag("--merge", merge, "aggregate existing per-fold row files");

  auto* train = app.add_subcommand("train", "train the final model on the holdout split and score its test set");
  add_common(train, common);
  std::optional<int> epochs;
  train->add_option("--epochs", epochs, "training epochs");

  auto* evaluate = app.add_subcommand("evaluate", "recompute every metric from a predictions file");
  std::string predictions;
  std::optional<std::string> eval_out;
  double threshold = 0.5;
  bool no_plots = false;
  evaluate->add_option("predictions", predictions, "CSV of subject_id,score,truth")->required();
  evaluate->add_option("--threshold", threshold, "decision threshold (score >= threshold is PD)");
  evaluate->add_option("--out", eval_out, "also write metrics and curves here");
  evaluate->add_flag("--no-plots", no_plots, "skip PNG curve rendering");

  auto* report = app.add_subcommand("report", "markdown report with curves from predictions and/or crossval rows");
  std::optional<std::string> report_preds, report_cv;
  std::string report_out = "report";
  report->add_option("--predictions", report_preds, "predictions CSV");
  report->add_option("--crossval", report_cv, "crossval report.csv");
  report->add_option("--threshold", threshold, "decision threshold");
  report->add_option("--out", report_out, "output directory");
  report->add_flag("--no-plots", no_plots, "skip PNG curve rendering");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? datscan::kExitOk : datscan::kExitUsage;
  }

  std::ostream& log = std::cerr;
  try {
    if (*synth) {
      if (n_control) flags["synth.n_control"] = std::to_string(*n_control);
      if (n_pd) flags["synth.n_pd"] = std::to_string(*n_pd);
      if (pd_factor) flags["synth.pd_uptake_factor"] = std::to_string(*pd_factor);
      if (synth_seed) flags["synth.seed"] = std::to_string(*synth_seed);
      const auto m = datscan::cmd_synth(resolve(common, flags), log);
      std::cout << "manifest: " << m.size() << " subjects, " << m.count(datscan::Label::Control) << " CONTROL, "
                << m.count(datscan::Label::PD) << " PD\n";
    } else if (*preprocess) {
      const auto s = datscan::cmd_preprocess(resolve(common, flags), log);
      std::cout << "images: " << s.written << '\n';
    } else if (*split) {
      datscan::cmd_split(resolve(common, flags), log);
    } else if (*crossval) {
      const auto rep = datscan::cmd_crossval(resolve(common, flags), log, only_fold, merge);
      std::cout << datscan::format_crossval(rep);
    } else if (*train) {
      if (epochs) flags["train.epochs"] = std::to_string(*epochs);
      const auto r = datscan::cmd_train_final(resolve(common, flags), log);
      std::cout << datscan::format_evaluation(r.test);
    } else if (*evaluate) {
      const auto r = datscan::cmd_evaluate(predictions, threshold,
                                           eval_out ? std::optional<std::filesystem::path>(*eval_out) : std::nullopt,
                                           !no_plots, log);
      std::cout << datscan::format_evaluation(r);
    } else if (*report) {
      auto as_path = [](const std::optional<std::string>& s) {
        return s ? std::optional<std::filesystem::path>(*s) : std::nullopt;
      };
      std::cout << datscan::cmd_report(as_path(report_preds), as_path(report_cv), threshold, report_out, !no_plots, log);
    }
  } catch (const datscan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return datscan::kExitUsage;
  } catch (const datscan::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return datscan::kExitTraining;
  } catch (const datscan::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return datscan::kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return datscan::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return datscan::kExitData;
  }
  return datscan::kExitOk;
}
