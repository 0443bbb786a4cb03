#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "datscan/augment.hpp"
#include "datscan/label.hpp"
#include "datscan/manifest.hpp"
#include "datscan/metrics.hpp"
#include "datscan/model/adam.hpp"
#include "datscan/model/backbone.hpp"
#include "datscan/model/head.hpp"
#include "datscan/model/schedule.hpp"

namespace datscan {

struct LabeledImage {
  TripletImage image;
  Label label = Label::Control;
};

/// Reads every manifest image; failures name the offending path.
std::vector<LabeledImage> load_labeled_images(const DatasetManifest& m);

enum class BackboneMode { FineTune, Frozen };

struct TrainConfig {
  int epochs = 500;
  int batch_size = 16;
  nn::AdamParams adam{};
  std::uint64_t seed = 0;
  BackboneMode backbone_mode = BackboneMode::FineTune;
  int head_units = 1024;
  double dropout = 0.5;
  double threshold = 0.5;
  int input_rows = 109;
  int input_cols = 91;
  std::vector<int> backbone_widths{8, 16, 32};
  /// Checkpoint whose backbone weights seed this model (transfer learning).
  std::string backbone_weights;

  void validate() const;
};

struct EpochRecord {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
};

namespace nn {

/// Backbone plus binary head. Inputs are resized bilinearly to the
/// backbone's native size.
template <typename Scalar>
class Classifier {
 public:
  Classifier(std::unique_ptr<FeatureExtractor<Scalar>> backbone, ClassifierHead<Scalar> head)
      : backbone_(std::move(backbone)), head_(std::move(head)) {
    if (backbone_->output_channels() != head_.channels()) {
      throw std::invalid_argument("backbone emits " + std::to_string(backbone_->output_channels()) +
                                  " channels but head expects " + std::to_string(head_.channels()));
    }
  }

  FeatureMap<Scalar> prepare(const TripletImage& img) const {
    if (img.rows < 1 || img.cols < 1 || img.pixels.size() != static_cast<std::size_t>(img.rows) * img.cols * 3) {
      throw std::invalid_argument("image '" + img.subject_id + "' has an invalid shape");
    }
    return resize_bilinear(to_feature_map<Scalar>(img), backbone_->input_rows(), backbone_->input_cols());
  }

  /// Inference-mode probability (no dropout).
  Scalar forward(const TripletImage& img) const {
    return head_.forward(backbone_->forward(prepare(img), nullptr), nullptr).prob;
  }

  std::vector<Scalar> forward(std::span<const TripletImage> batch) const {
    std::vector<Scalar> out;
    out.reserve(batch.size());
    for (const auto& img : batch) out.push_back(forward(img));
    return out;
  }

  std::vector<Parameter<Scalar>*> parameters() {
    auto ps = backbone_->parameters();
    for (auto* p : head_.parameters()) ps.push_back(p);
    return ps;
  }

  std::vector<const Parameter<Scalar>*> parameters() const {
    auto ps = std::as_const(*backbone_).parameters();
    for (const auto* p : head_.parameters()) ps.push_back(p);
    return ps;
  }

  FeatureExtractor<Scalar>& backbone() { return *backbone_; }
  const FeatureExtractor<Scalar>& backbone() const { return *backbone_; }
  ClassifierHead<Scalar>& head() { return head_; }
  const ClassifierHead<Scalar>& head() const { return head_; }

 private:
  std::unique_ptr<FeatureExtractor<Scalar>> backbone_;
  ClassifierHead<Scalar> head_;
};

/// Fresh small-cnn classifier initialised from cfg.seed.
template <typename Scalar>
Classifier<Scalar> make_classifier(const TrainConfig& cfg) {
  SplitMix64 rng(mix_seed(cfg.seed, 0x1417));
  auto cnn = std::make_unique<SmallCnn<Scalar>>(cfg.input_rows, cfg.input_cols, cfg.backbone_widths);
  cnn->init(rng);
  ClassifierHead<Scalar> head(cnn->output_channels(), cfg.head_units, cfg.dropout);
  head.init(rng);
  return Classifier<Scalar>(std::move(cnn), std::move(head));
}

template <typename Scalar>
std::vector<ScoredPrediction> predict(const Classifier<Scalar>& model, std::span<const LabeledImage> images) {
  std::vector<ScoredPrediction> out;
  out.reserve(images.size());
  for (const auto& li : images) out.push_back({li.image.subject_id, static_cast<double>(model.forward(li.image)), li.label});
  return out;
}

using EpochCallback = std::function<void(int epoch, const EpochRecord&)>;

/// Trains `model` in place: epochs x ceil(N / batch) Adam steps, per-epoch
/// seeded shuffling, on-the-fly augmentation and dropout on training samples
/// only. Training loss/accuracy are means over the augmented samples seen in
/// each epoch; validation metrics use the final weights in inference mode.
template <typename Scalar>
TrainHistory train(Classifier<Scalar>& model, std::span<const LabeledImage> train_set,
                   std::span<const LabeledImage> val_set, const TrainConfig& cfg, const AugmentationConfig& aug,
                   const StepDecaySchedule& schedule, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  aug.validate();
  schedule.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  bool seen[2] = {false, false};
  for (const auto& li : train_set) seen[as_target(li.label)] = true;
  if (!seen[0] || !seen[1]) throw std::invalid_argument("training set contains a single class");

  const bool tune_backbone = cfg.backbone_mode == BackboneMode::FineTune;
  model.backbone().set_trainable(tune_backbone);
  auto params = model.parameters();
  Adam<Scalar> adam(cfg.adam);

  std::vector<std::size_t> order(train_set.size());
  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffler(mix_seed(cfg.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), shuffler);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto inv_batch = static_cast<Scalar>(1.0 / static_cast<double>(end - start));
      for (auto* p : params) p->zero_grad();

      for (std::size_t i = start; i < end; ++i) {
        const LabeledImage& li = train_set[order[i]];
        const std::string& id = li.image.subject_id;
        SplitMix64 aug_rng = sample_stream(cfg.seed, id, static_cast<std::uint64_t>(epoch));
        const FeatureMap<Scalar> x = model.prepare(augment(li.image, aug, aug_rng));

        std::unique_ptr<typename FeatureExtractor<Scalar>::Trace> trace;
        const FeatureMap<Scalar> features = model.backbone().forward(x, tune_backbone ? &trace : nullptr);
        SplitMix64 dropout_rng(mix_seed(cfg.seed, hash_string(id), static_cast<std::uint64_t>(epoch), 0xd0));
        const auto ht = model.head().forward(features, &dropout_rng);

        const int y = as_target(li.label);
        loss_sum += static_cast<double>(bce_loss(y, ht.prob));
        correct += (static_cast<double>(ht.prob) >= cfg.threshold) == (y == 1);

        const Scalar dlogit = bce_logit_grad(y, ht.prob) * inv_batch;
        const FeatureMap<Scalar> gfeat = model.head().backward(dlogit, ht, features.rows, features.cols);
        if (tune_backbone) model.backbone().backward(gfeat, *trace);
      }
      adam.step(params, lr);
    }

    const EpochRecord rec{loss_sum / static_cast<double>(order.size()),
                          static_cast<double>(correct) / static_cast<double>(order.size()), lr};
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, rec);
  }

  if (!val_set.empty()) {
    const auto preds = predict(model, val_set);
    history.val_loss = mean_bce(preds);
    history.val_accuracy = accuracy(confusion(preds, cfg.threshold));
  }
  return history;
}

}  // namespace nn
}  // namespace datscan
