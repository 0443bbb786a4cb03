#include "datscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace datscan {

ConfusionMatrix confusion(std::span<const ScoredPrediction> preds, double threshold) {
  if (preds.empty()) throw std::invalid_argument("confusion matrix of an empty prediction set");
  ConfusionMatrix cm;
  for (const auto& p : preds) {
    const bool positive = p.score >= threshold;
    if (p.truth == Label::PD) {
      (positive ? cm.tp : cm.fn)++;
    } else {
      (positive ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den, const char* name) {
  if (den == 0) throw UndefinedMetric(std::string(name) + " is undefined: zero denominator");
  return static_cast<double>(num) / static_cast<double>(den);
}

struct Counts {
  std::size_t pos = 0, neg = 0;
};

Counts class_counts(std::span<const ScoredPrediction> preds) {
  Counts c;
  for (const auto& p : preds) (p.truth == Label::PD ? c.pos : c.neg)++;
  return c;
}

/// Cumulative (tp, fp) after each distinct-score group, scores descending.
struct SweepStep {
  double threshold;
  std::size_t tp, fp;
};

std::vector<SweepStep> sweep(std::span<const ScoredPrediction> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<SweepStep> steps;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = preds[order[i]].score;
    for (; i < order.size() && preds[order[i]].score == s; ++i) (preds[order[i]].truth == Label::PD ? tp : fp)++;
    steps.push_back({s, tp, fp});
  }
  return steps;
}

}  // namespace

double sensitivity(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn, "sensitivity"); }
double specificity(const ConfusionMatrix& cm) { return ratio(cm.tn, cm.tn + cm.fp, "specificity"); }
double precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp, "precision"); }
double accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total(), "accuracy"); }

Curve roc_curve(std::span<const ScoredPrediction> preds) {
  const Counts n = class_counts(preds);
  if (n.pos == 0 || n.neg == 0) throw UndefinedMetric("ROC curve needs both classes");
  Curve c;
  c.kind = CurveKind::ROC;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.x.push_back(0.0);
  c.y.push_back(0.0);
  for (const auto& s : sweep(preds)) {
    c.thresholds.push_back(s.threshold);
    c.x.push_back(static_cast<double>(s.fp) / static_cast<double>(n.neg));
    c.y.push_back(static_cast<double>(s.tp) / static_cast<double>(n.pos));
  }
  return c;
}

double roc_auc(std::span<const ScoredPrediction> preds) {
  const Curve c = roc_curve(preds);
  double area = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) area += (c.x[i] - c.x[i - 1]) * (c.y[i] + c.y[i - 1]) * 0.5;
  return area;
}

Curve pr_curve(std::span<const ScoredPrediction> preds) {
  const Counts n = class_counts(preds);
  if (n.pos == 0) throw UndefinedMetric("PR curve needs at least one positive");
  Curve c;
  c.kind = CurveKind::PR;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.x.push_back(0.0);
  c.y.push_back(1.0);
  for (const auto& s : sweep(preds)) {
    c.thresholds.push_back(s.threshold);
    c.x.push_back(static_cast<double>(s.tp) / static_cast<double>(n.pos));
    c.y.push_back(static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp));
  }
  return c;
}

double pr_auc(std::span<const ScoredPrediction> preds) {
  const Curve c = pr_curve(preds);
  double ap = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) ap += (c.x[i] - c.x[i - 1]) * c.y[i];
  return ap;
}

double mean_bce(std::span<const ScoredPrediction> preds, double eps) {
  if (preds.empty()) throw std::invalid_argument("loss of an empty prediction set");
  double sum = 0.0;
  for (const auto& p : preds) {
    const double q = std::clamp(p.score, eps, 1.0 - eps);
    sum -= p.truth == Label::PD ? std::log(q) : std::log(1.0 - q);
  }
  return sum / static_cast<double>(preds.size());
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw std::invalid_argument("weighted_mean: values and weights differ in length");
  if (values.empty()) throw std::invalid_argument("weighted_mean of an empty list");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("weighted_mean: weights must be positive");
    num += weights[i] * values[i];
    den += weights[i];
  }
  return num / den;
}

namespace {

double sum_sq_dev(std::span<const double> values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss;
}

}  // namespace

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample_stddev needs at least 2 values");
  return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size() - 1));
}

double population_stddev(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("population_stddev of an empty list");
  return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size()));
}

void write_predictions(std::span<const ScoredPrediction> preds, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "subject_id,score,truth\n";
  char buf[64];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof buf, "%.17g", p.score);
    out << p.subject_id << ',' << buf << ',' << to_string(p.truth) << '\n';
  }
}

std::vector<ScoredPrediction> read_predictions(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw PredictionsFormatError("predictions file not found: " + file.string());
  std::vector<ScoredPrediction> preds;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw PredictionsFormatError(file.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("subject_id", 0) == 0) continue;

    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (cells.size() != 3) fail("expected 3 fields 'subject_id,score,truth'");

    ScoredPrediction p;
    p.subject_id = cells[0];
    std::size_t used = 0;
    try {
      p.score = std::stod(cells[1], &used);
    } catch (const std::exception&) {
      fail("score '" + cells[1] + "' is not a number");
    }
    if (used != cells[1].size()) fail("score '" + cells[1] + "' is not a number");
    if (!(p.score >= 0.0 && p.score <= 1.0)) fail("score " + cells[1] + " outside [0, 1]");
    const auto truth = try_parse_label(cells[2]);
    if (!truth) fail("unknown truth label '" + cells[2] + "'");
    p.truth = *truth;
    preds.push_back(std::move(p));
  }
  if (preds.empty()) throw PredictionsFormatError(file.string() + ": no predictions");
  return preds;
}

void write_curve_csv(const Curve& c, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "threshold," << (c.kind == CurveKind::ROC ? "fpr,tpr" : "recall,precision") << '\n';
  char buf[128];
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::isinf(c.thresholds[i])) {
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g", c.x[i], c.y[i]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", c.thresholds[i], c.x[i], c.y[i]);
    }
    out << buf << '\n';
  }
}

}  // namespace datscan
