#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/label.hpp"

namespace datscan {

struct ScoredPrediction {
  std::string subject_id;
  double score = 0.0;  // P(PD)
  Label truth = Label::Control;
};

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Raised when a metric's denominator is zero.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// score >= threshold predicts PD.
ConfusionMatrix confusion(std::span<const ScoredPrediction> preds, double threshold = 0.5);

double sensitivity(const ConfusionMatrix& cm);
double specificity(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

enum class CurveKind { ROC, PR };

/// Points in sweep order (threshold descending). ROC: (FPR, TPR), starting
/// at (0, 0) for the +inf sentinel. PR: (recall, precision), starting at
/// (0, 1) for the +inf sentinel.
struct Curve {
  CurveKind kind = CurveKind::ROC;
  std::vector<double> thresholds;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

Curve roc_curve(std::span<const ScoredPrediction> preds);
/// Trapezoidal area under roc_curve; equals the Mann-Whitney statistic with
/// ties counted as 1/2.
double roc_auc(std::span<const ScoredPrediction> preds);

Curve pr_curve(std::span<const ScoredPrediction> preds);
/// Average precision: sum over sweep steps of delta-recall times precision.
double pr_auc(std::span<const ScoredPrediction> preds);

/// Mean binary crossentropy of the scores, clipped at `eps`.
double mean_bce(std::span<const ScoredPrediction> preds, double eps = 1e-7);

double weighted_mean(std::span<const double> values, std::span<const double> weights);
double sample_stddev(std::span<const double> values);
double population_stddev(std::span<const double> values);

/// `subject_id,score,truth` with a header line.
void write_predictions(std::span<const ScoredPrediction> preds, const std::filesystem::path& file);

class PredictionsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Errors carry the offending line number.
std::vector<ScoredPrediction> read_predictions(const std::filesystem::path& file);

/// `threshold,x,y` with a header line; the +inf sentinel is written as `inf`.
void write_curve_csv(const Curve& c, const std::filesystem::path& file);

}  // namespace datscan
