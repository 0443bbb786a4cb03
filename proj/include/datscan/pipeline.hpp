#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/config.hpp"
#include "datscan/manifest.hpp"
#include "datscan/metrics.hpp"
#include "datscan/model/model.hpp"
#include "datscan/splits.hpp"

namespace datscan {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitTraining = 3 };

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed locations below the configured roots.
struct PipelineLayout {
  std::filesystem::path volume_manifest;  // <data>/manifest.csv
  std::filesystem::path images;           // <out>/images
  std::filesystem::path image_manifest;   // <out>/images/manifest.csv
  std::filesystem::path splits;           // <out>/splits
  std::filesystem::path crossval;         // <out>/crossval
  std::filesystem::path final_dir;        // <out>/final

  static PipelineLayout of(const PipelineConfig& cfg);
};

DatasetManifest cmd_synth(const PipelineConfig& cfg, std::ostream& log);

struct PreprocessSummary {
  std::size_t written = 0;
  std::vector<std::string> failures;  // "<subject_id>: <reason>"
};
/// Throws DataError listing every failed subject after processing the rest.
PreprocessSummary cmd_preprocess(const PipelineConfig& cfg, std::ostream& log);

struct SplitSummary {
  FoldAssignment folds;
  HoldoutSplit holdout;
};
SplitSummary cmd_split(const PipelineConfig& cfg, std::ostream& log);

struct FoldRow {
  int fold = 0;
  std::size_t size = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct CrossValReport {
  std::vector<FoldRow> rows;
  double mean_train_loss = 0.0, mean_train_accuracy = 0.0, mean_val_loss = 0.0, mean_val_accuracy = 0.0;
  /// Population standard deviation across folds (the convention behind the
  /// +/- figures of a Table-1 style summary) and the n-1 variant.
  double sd_train_accuracy = 0.0, sd_val_accuracy = 0.0;
  double sample_sd_train_accuracy = 0.0, sample_sd_val_accuracy = 0.0;
};

/// Weighted means (weights = fold sizes) and dispersions of the rows.
CrossValReport aggregate_crossval(std::vector<FoldRow> rows);
std::string format_crossval(const CrossValReport& r);
void write_crossval_csv(const CrossValReport& r, const std::filesystem::path& file);
std::vector<FoldRow> read_crossval_rows(const std::filesystem::path& file);

/// Trains and validates every fold (or just `only_fold`) and writes
/// `<out>/crossval/fold_<i>.csv`; with all folds also `report.csv` and
/// `report.txt`. `merge_only` aggregates existing fold files without training.
CrossValReport cmd_crossval(const PipelineConfig& cfg, std::ostream& log, std::optional<int> only_fold = std::nullopt,
                            bool merge_only = false);

/// Every number of a Table-2 style summary. Ratios whose denominator is zero
/// are left empty.
struct EvaluationReport {
  std::size_t n = 0;
  double threshold = 0.5;
  ConfusionMatrix cm;
  double loss = 0.0;
  std::optional<double> accuracy, sensitivity, specificity, precision, roc_auc, pr_auc;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

EvaluationReport evaluate_predictions(std::span<const ScoredPrediction> preds, double threshold = 0.5);
std::string format_evaluation(const EvaluationReport& r);

/// Writes metrics.txt, roc.csv, pr.csv and (when `plots`) roc.png / pr.png.
void write_evaluation(std::span<const ScoredPrediction> preds, const EvaluationReport& r,
                      const std::filesystem::path& dir, bool plots, std::ostream& log);

struct FinalRunResult {
  EvaluationReport test;
  std::vector<ScoredPrediction> predictions;
  TrainHistory history;
  std::filesystem::path checkpoint;
};

/// Holdout split -> class-per-directory trees -> train -> predict the test
/// tree -> metrics, curves, checkpoint, predictions and config under
/// `<out>/final`.
FinalRunResult cmd_train_final(const PipelineConfig& cfg, std::ostream& log);

EvaluationReport cmd_evaluate(const std::filesystem::path& predictions, double threshold,
                              const std::optional<std::filesystem::path>& out_dir, bool plots, std::ostream& log);

/// Markdown summary from a predictions file and/or a crossval CSV.
std::string cmd_report(const std::optional<std::filesystem::path>& predictions,
                       const std::optional<std::filesystem::path>& crossval_csv, double threshold,
                       const std::filesystem::path& out_dir, bool plots, std::ostream& log);

}  // namespace datscan
