#include <doctest.h>

#include <cmath>

#include "datscan/model/checkpoint.hpp"
#include "datscan/model/model.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace datscan;
using datscan::testing::TempDir;

namespace {

/// 16x16 images: PD has a dim right-hand bar, controls a bright one.
std::vector<LabeledImage> toy_set(int n_per_class, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LabeledImage> out;
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const Label l = i < n_per_class ? Label::Control : Label::PD;
    TripletImage t(16, 16);
    t.subject_id = "toy-" + std::to_string(i);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        for (int ch = 0; ch < 3; ++ch) {
          const bool bar = c >= 8 && r >= 4 && r < 12;
          const int base = bar ? (l == Label::PD ? 60 : 220) : 30;
          t.at(r, c, ch) = static_cast<std::uint8_t>(base + rng.below(20));
        }
    out.push_back({std::move(t), l});
  }
  return out;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.input_rows = 16;
  cfg.input_cols = 16;
  cfg.backbone_widths = {4, 4, 8};
  cfg.head_units = 16;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("step decay values") {
  const StepDecaySchedule s;
  CHECK(lr_at(s, 0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(lr_at(s, 124) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(lr_at(s, 125) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(s, 375) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(lr_at(s, 499) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(s, -1), std::invalid_argument);

  const auto trace = lr_trace(s, 500);
  REQUIRE(trace.size() == 500);
  for (std::size_t e = 1; e < trace.size(); ++e) CHECK(trace[e] <= trace[e - 1]);
  for (double lr : trace) {
    CHECK(lr >= s.final_lr);
    CHECK(lr <= s.initial_lr);
  }

  StepDecaySchedule bad;
  bad.drop_period = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("binary crossentropy values") {
  CHECK(nn::bce_loss(1, 0.5) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(nn::bce_loss(1, 1.0) <= 1.1e-7);
  CHECK(nn::bce_loss(0, 0.9) == doctest::Approx(2.302585).epsilon(1e-6));
  CHECK(std::isfinite(nn::bce_loss(1, 0.0)));
  CHECK(nn::bce_logit_grad(1, 0.25) == doctest::Approx(-0.75));
  CHECK(nn::bce_logit_grad(0, 1.0) == 0.0);
}

TEST_CASE("sigmoid is bounded and monotone") {
  SplitMix64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const double z = rng.uniform(-30.0, 30.0);
    const double p = nn::sigmoid(z);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(nn::sigmoid(z + 0.01) > p);
  }
  CHECK(nn::sigmoid(0.0) == 0.5);
}

TEST_CASE("zeroed head outputs one half") {
  TrainConfig cfg = toy_config();
  auto model = nn::make_classifier<float>(cfg);
  for (auto* p : model.head().parameters()) p->value.setZero();
  for (const auto& li : toy_set(3, 1)) CHECK(model.forward(li.image) == 0.5f);
  TripletImage big(109, 91);  // resized to the native input
  CHECK(model.forward(big) == 0.5f);
}

TEST_CASE("duplicate images score identically") {
  const auto model = nn::make_classifier<float>(toy_config());
  const auto set = toy_set(2, 2);
  const std::vector<TripletImage> batch{set[0].image, set[3].image, set[0].image};
  const auto p = model.forward(std::span<const TripletImage>(batch));
  CHECK(p[0] == p[2]);
  for (float x : p) {
    CHECK(x >= 0.0f);
    CHECK(x <= 1.0f);
  }
}

TEST_CASE("global average pooling of a constant map") {
  nn::ClassifierHead<double> head(4, 3, 0.0);
  nn::FeatureMap<double> f(4, 5, 6);
  f.data.setConstant(2.5);
  const auto t = head.forward(f, nullptr);
  CHECK(t.pooled.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(t.pooled(i) == doctest::Approx(2.5));
  CHECK_THROWS_AS(head.forward(nn::FeatureMap<double>(3, 2, 2), nullptr), std::invalid_argument);
}

TEST_CASE("dropout is inverted and inactive at inference") {
  nn::ClassifierHead<double> head(2, 200, 0.5);
  SplitMix64 rng(4);
  head.init(rng);
  nn::FeatureMap<double> f(2, 2, 2);
  f.data.setConstant(1.0);
  SplitMix64 drop(5);
  const auto t = head.forward(f, &drop);
  int zeros = 0;
  for (int i = 0; i < t.keep.size(); ++i) {
    CHECK((t.keep(i) == 0.0 || t.keep(i) == 2.0));
    zeros += t.keep(i) == 0.0;
  }
  CHECK(zeros > 60);
  CHECK(zeros < 140);
  const auto inf = head.forward(f, nullptr);
  CHECK(inf.keep.isOnes());
}

TEST_CASE("head gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = datscan::testing::head_gradient_check(seed);
    CHECK(r.entries == 5 * 7 + 7 + 7 + 1);
    CHECK(r.relative_error <= 1e-4);
  }
}

TEST_CASE("full network gradients match central differences") {
  TrainConfig cfg = toy_config();
  cfg.backbone_widths = {2, 3, 4};
  cfg.head_units = 5;
  cfg.dropout = 0.0;
  auto model = nn::make_classifier<double>(cfg);
  const auto set = toy_set(1, 9);
  const nn::FeatureMap<double> x = model.prepare(set[1].image);
  const int y = 1;

  auto loss = [&] {
    return nn::bce_loss(y, model.head().forward(model.backbone().forward(x, nullptr), nullptr).prob);
  };
  for (auto* p : model.parameters()) p->zero_grad();
  std::unique_ptr<nn::FeatureExtractor<double>::Trace> trace;
  const auto features = model.backbone().forward(x, &trace);
  const auto ht = model.head().forward(features, nullptr);
  const auto g = model.head().backward(nn::bce_logit_grad(y, ht.prob), ht, features.rows, features.cols);
  model.backbone().backward(g, *trace);

  SplitMix64 pick(10);
  const double h = 1e-6;
  for (auto* p : model.parameters()) {
    for (int k = 0; k < 12; ++k) {
      const auto i = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(p->value.size())));
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      INFO(p->name << "[" << i << "]");
      CHECK(std::abs(analytic - numeric) <= 1e-6 + 1e-4 * std::max(std::abs(analytic), std::abs(numeric)));
    }
  }
}

TEST_CASE("frozen backbone on a fixed batch lowers the loss") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 50;
  cfg.batch_size = 8;  // one step per epoch over the whole batch
  cfg.dropout = 0.0;
  cfg.backbone_mode = BackboneMode::Frozen;
  const auto set = toy_set(4, 6);
  auto model = nn::make_classifier<float>(cfg);
  std::vector<std::vector<float>> before;
  for (const auto* p : std::as_const(model.backbone()).parameters())
    before.emplace_back(p->value.data(), p->value.data() + p->value.size());

  const auto h = nn::train(model, std::span<const LabeledImage>(set), {}, cfg, AugmentationConfig::identity(),
                           StepDecaySchedule{});
  REQUIRE(h.epochs.size() == 50);
  std::vector<double> smooth;
  for (std::size_t e = 4; e < h.epochs.size(); ++e) {
    double s = 0.0;
    for (std::size_t j = e - 4; j <= e; ++j) s += h.epochs[j].train_loss;
    smooth.push_back(s / 5.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] < smooth[i - 1]);

  const auto after = std::as_const(model.backbone()).parameters();
  for (std::size_t k = 0; k < after.size(); ++k)
    CHECK(std::equal(before[k].begin(), before[k].end(), after[k]->value.data()));
}

TEST_CASE("history records the schedule and training is reproducible") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 6;
  StepDecaySchedule s;
  s.drop_period = 2;
  const auto set = toy_set(5, 7);
  const auto val = toy_set(2, 8);

  auto run = [&] {
    auto model = nn::make_classifier<float>(cfg);
    auto h = nn::train(model, std::span<const LabeledImage>(set), std::span<const LabeledImage>(val), cfg,
                       AugmentationConfig{}, s);
    return std::make_pair(std::move(h), nn::predict(model, std::span<const LabeledImage>(val)));
  };
  const auto [h1, p1] = run();
  const auto [h2, p2] = run();
  REQUIRE(h1.epochs.size() == 6);
  for (int e = 0; e < 6; ++e) {
    CHECK(h1.epochs[e].lr == lr_at(s, e));
    CHECK(h1.epochs[e].train_loss == h2.epochs[e].train_loss);
    CHECK(h1.epochs[e].train_accuracy == h2.epochs[e].train_accuracy);
  }
  REQUIRE(h1.val_loss.has_value());
  REQUIRE(h1.val_accuracy.has_value());
  CHECK(*h1.val_loss == *h2.val_loss);
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].score == p2[i].score);
}

TEST_CASE("training rejects degenerate inputs") {
  const TrainConfig cfg = toy_config();
  auto model = nn::make_classifier<float>(cfg);
  auto set = toy_set(3, 1);
  set.resize(3);  // controls only
  CHECK_THROWS_AS(nn::train(model, std::span<const LabeledImage>(set), {}, cfg, AugmentationConfig{}, StepDecaySchedule{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(nn::train(model, std::span<const LabeledImage>(), {}, cfg, AugmentationConfig{}, StepDecaySchedule{}),
                  std::invalid_argument);
  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint round-trip preserves predictions") {
  TempDir dir("ckpt");
  TrainConfig cfg = toy_config();
  cfg.epochs = 2;
  const auto set = toy_set(3, 4);
  auto model = nn::make_classifier<float>(cfg);
  nn::train(model, std::span<const LabeledImage>(set), {}, cfg, AugmentationConfig{}, StepDecaySchedule{});
  save_checkpoint(model, cfg, StepDecaySchedule{}, 2, dir / "m.json");

  const Checkpoint ck = load_checkpoint(dir / "m.json");
  CHECK(ck.epochs_completed == 2);
  CHECK(ck.config.head_units == cfg.head_units);
  CHECK(ck.config.backbone_widths == cfg.backbone_widths);
  CHECK(ck.schedule.drop_period == 125);
  for (const auto& li : set) CHECK(ck.model->forward(li.image) == model.forward(li.image));

  TrainConfig other = cfg;
  other.seed = 99;
  auto fresh = nn::make_classifier<float>(other);
  transfer_backbone(fresh, dir / "m.json");
  const auto a = std::as_const(fresh.backbone()).parameters();
  const auto b = std::as_const(model.backbone()).parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);

  TrainConfig wide = cfg;
  wide.backbone_widths = {4, 4, 16};
  auto mismatched = nn::make_classifier<float>(wide);
  CHECK_THROWS_AS(transfer_backbone(mismatched, dir / "m.json"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), CheckpointError);
}
