#include <doctest.h>

#include <cmath>

#include <fstream>

#include "datscan/metrics.hpp"
#include "datscan/rng.hpp"
#include "test_util.hpp"

using namespace datscan;
using datscan::testing::TempDir;

namespace {

std::vector<ScoredPrediction> preds_of(std::vector<double> scores, std::vector<int> truths) {
  std::vector<ScoredPrediction> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.push_back({"p" + std::to_string(i), scores[i], truths[i] ? Label::PD : Label::Control});
  return out;
}

/// Fraction of (positive, negative) pairs ranked correctly, ties worth 1/2.
double pairwise_auc(const std::vector<ScoredPrediction>& p) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& a : p)
    for (const auto& b : p)
      if (a.truth == Label::PD && b.truth == Label::Control) {
        ++pairs;
        wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
      }
  return wins / static_cast<double>(pairs);
}

std::vector<ScoredPrediction> random_preds(SplitMix64& rng, std::size_t n) {
  std::vector<ScoredPrediction> p;
  const int levels = static_cast<int>(rng.between(2, 30));  // coarse grid forces ties
  for (std::size_t i = 0; i < n; ++i)
    p.push_back({"r" + std::to_string(i), static_cast<double>(rng.below(levels + 1)) / levels,
                 rng.below(2) ? Label::PD : Label::Control});
  p[0].truth = Label::PD;
  p[1].truth = Label::Control;
  return p;
}

}  // namespace

TEST_CASE("confusion counts from 132 held-out predictions") {
  std::vector<ScoredPrediction> p;
  for (int i = 0; i < 88; ++i) p.push_back({"tp", 0.9, Label::PD});
  p.push_back({"fn", 0.2, Label::PD});
  for (int i = 0; i < 42; ++i) p.push_back({"tn", 0.1, Label::Control});
  p.push_back({"fp", 0.7, Label::Control});
  const ConfusionMatrix cm = confusion(p);
  CHECK(cm == ConfusionMatrix{88, 1, 42, 1});
  CHECK(std::abs(sensitivity(cm) - 0.9888) <= 5e-5);
  CHECK(std::abs(specificity(cm) - 0.9767) <= 5e-5);
  CHECK(std::abs(precision(cm) - 0.9888) <= 5e-5);
  CHECK(std::abs(accuracy(cm) - 0.9848) <= 5e-5);
  CHECK(accuracy(cm) == doctest::Approx(130.0 / 132.0));
}

TEST_CASE("confusion boundary rules") {
  const auto p = preds_of({1.0, 1.0, 1.0}, {1, 1, 1});
  CHECK(confusion(p) == ConfusionMatrix{3, 0, 0, 0});
  const auto q = preds_of({0.0, 0.2, 0.5, 0.49}, {0, 1, 0, 1});
  CHECK(confusion(q, 0.0) == ConfusionMatrix{2, 2, 0, 0});
  CHECK(confusion(q, 0.5) == ConfusionMatrix{0, 1, 1, 2});  // 0.5 >= 0.5 is positive
  CHECK_THROWS_AS(confusion(std::vector<ScoredPrediction>{}), std::invalid_argument);

  SplitMix64 rng(1);
  const auto r = random_preds(rng, 50);
  for (double t : {0.0, 0.1, 0.33, 0.5, 0.9, 1.0, 1.1}) CHECK(confusion(r, t).total() == 50);
}

TEST_CASE("ratios on a perfect matrix and zero denominators") {
  const ConfusionMatrix ones{1, 0, 1, 0};
  CHECK(sensitivity(ones) == 1.0);
  CHECK(specificity(ones) == 1.0);
  CHECK(precision(ones) == 1.0);
  CHECK(accuracy(ones) == 1.0);

  CHECK_THROWS_AS(sensitivity(ConfusionMatrix{0, 3, 2, 0}), UndefinedMetric);
  CHECK_THROWS_AS(specificity(ConfusionMatrix{3, 0, 0, 2}), UndefinedMetric);
  CHECK_THROWS_AS(precision(ConfusionMatrix{0, 0, 4, 1}), UndefinedMetric);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), UndefinedMetric);
}

TEST_CASE("ROC AUC examples") {
  CHECK(roc_auc(preds_of({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})) == doctest::Approx(0.75));
  CHECK(roc_auc(preds_of({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})) == 1.0);
  CHECK(roc_auc(preds_of({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(roc_auc(preds_of({0.1, 0.9}, {1, 1})), UndefinedMetric);
  CHECK_THROWS_AS(roc_auc(preds_of({0.1, 0.9}, {0, 0})), UndefinedMetric);
}

TEST_CASE("ROC curve shape") {
  const Curve c = roc_curve(preds_of({0.1, 0.4, 0.35, 0.8, 0.4}, {0, 0, 1, 1, 1}));
  CHECK(c.kind == CurveKind::ROC);
  REQUIRE(c.size() == 5);  // sentinel + four distinct scores
  CHECK(std::isinf(c.thresholds.front()));
  CHECK(c.x.front() == 0.0);
  CHECK(c.y.front() == 0.0);
  CHECK(c.x.back() == 1.0);
  CHECK(c.y.back() == 1.0);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c.thresholds[i] < c.thresholds[i - 1]);
    CHECK(c.x[i] >= c.x[i - 1]);
    CHECK(c.y[i] >= c.y[i - 1]);
  }
}

TEST_CASE("average precision examples") {
  CHECK(pr_auc(preds_of({0.9, 0.8, 0.7}, {1, 0, 1})) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
  CHECK(pr_auc(preds_of({0.9, 0.8, 0.7}, {1, 0, 1})) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(pr_auc(preds_of({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})) == 1.0);
  CHECK(pr_auc(preds_of({0.99, 0.5, 0.4, 0.3, 0.2}, {1, 0, 0, 0, 0})) == 1.0);
  CHECK_THROWS_AS(pr_auc(preds_of({0.1, 0.9}, {0, 0})), UndefinedMetric);

  const Curve c = pr_curve(preds_of({0.9, 0.8, 0.7}, {1, 0, 1}));
  CHECK(c.kind == CurveKind::PR);
  REQUIRE(c.size() == 4);
  CHECK(c.x.front() == 0.0);
  CHECK(c.y.front() == 1.0);
  CHECK(c.x[2] == doctest::Approx(0.5));
  CHECK(c.y[2] == doctest::Approx(0.5));
}

TEST_CASE("ROC AUC equals the pairwise statistic on random tied sets") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_preds(rng, static_cast<std::size_t>(rng.between(2, 120)));
    CHECK(std::abs(roc_auc(p) - pairwise_auc(p)) <= 1e-9);
  }
}

TEST_CASE("ROC AUC is invariant under monotone transforms and complementation") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_preds(rng, static_cast<std::size_t>(rng.between(2, 80)));
    auto q = p;
    for (auto& x : q) x.score = std::pow(x.score, 3.0) / 2.0 + 0.1;
    CHECK(std::abs(roc_auc(q) - roc_auc(p)) <= 1e-12);
    auto r = p;
    for (auto& x : r) {
      x.score = 1.0 - x.score;
      x.truth = x.truth == Label::PD ? Label::Control : Label::PD;
    }
    CHECK(std::abs(roc_auc(r) - roc_auc(p)) <= 1e-12);
  }
}

TEST_CASE("metric ratios stay within the unit interval") {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_preds(rng, 40);
    const ConfusionMatrix cm = confusion(p, rng.uniform());
    for (auto f : {sensitivity, specificity, precision, accuracy}) {
      try {
        const double v = f(cm);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      } catch (const UndefinedMetric&) {
      }
    }
  }
}

TEST_CASE("weighted mean and standard deviations") {
  const std::vector<double> acc{0.98, 0.98, 0.94, 0.98, 0.96, 0.96, 0.96, 0.96, 0.96, 0.9796};
  std::vector<double> w(9, 66.0);
  w.push_back(65.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    num += acc[i] * w[i];
    den += w[i];
  }
  CHECK(weighted_mean(acc, w) == doctest::Approx(num / den).epsilon(1e-15));

  const std::vector<double> v{1.0, 2.0, 6.0};
  CHECK(weighted_mean(v, std::vector<double>{1.0, 1.0, 1.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(weighted_mean(v, std::vector<double>{1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_mean(v, std::vector<double>{1.0, 0.0, 1.0}), std::invalid_argument);

  CHECK(sample_stddev(std::vector<double>{4.0, 4.0, 4.0}) == 0.0);
  CHECK(sample_stddev(std::vector<double>{0.0, 1.0}) == doctest::Approx(std::sqrt(0.5)));
  CHECK(population_stddev(std::vector<double>{0.0, 1.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(sample_stddev(std::vector<double>{1.0}), std::invalid_argument);

  // The reported dispersion of the fold accuracies matches the n convention.
  CHECK(std::abs(population_stddev(acc) - 0.0128) < 5e-5);
  CHECK(std::abs(sample_stddev(acc) - 0.0128) > 5e-4);
}

TEST_CASE("mean_bce clips and averages") {
  CHECK(mean_bce(preds_of({0.5, 0.5}, {1, 0})) == doctest::Approx(std::log(2.0)));
  CHECK(mean_bce(preds_of({1.0}, {1})) <= 1.1e-7);
  CHECK(std::isfinite(mean_bce(preds_of({0.0}, {1}))));
}

TEST_CASE("predictions file round-trip and errors") {
  TempDir dir("pred");
  const auto p = preds_of({0.125, 1.0 / 3.0, 0.0, 1.0}, {1, 0, 0, 1});
  write_predictions(p, dir / "p.csv");
  const auto back = read_predictions(dir / "p.csv");
  REQUIRE(back.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(back[i].subject_id == p[i].subject_id);
    CHECK(back[i].score == p[i].score);
    CHECK(back[i].truth == p[i].truth);
  }

  auto error_of = [&](const std::string& body) -> std::string {
    {
      std::ofstream out(dir / "bad.csv");
      out << body;
    }
    try {
      read_predictions(dir / "bad.csv");
    } catch (const PredictionsFormatError& e) {
      return e.what();
    }
    return "";
  };
  CHECK_FALSE(error_of("").empty());
  CHECK(error_of("subject_id,score,truth\na,0.5,PD\nb,zz,PD\n").find(":3:") != std::string::npos);
  CHECK(error_of("subject_id,score,truth\na,1.5,PD\n").find(":2:") != std::string::npos);
  CHECK(error_of("subject_id,score,truth\na,0.5,maybe\n").find(":2:") != std::string::npos);
  CHECK(error_of("subject_id,score,truth\na,0.5\n").find(":2:") != std::string::npos);
  CHECK_THROWS(read_predictions(dir / "nope.csv"));
}

TEST_CASE("curve CSV export") {
  TempDir dir("curve");
  write_curve_csv(roc_curve(preds_of({0.2, 0.8}, {0, 1})), dir / "roc.csv");
  std::ifstream in(dir / "roc.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "threshold,fpr,tpr");
  CHECK(first.rfind("inf,0,0", 0) == 0);
}
