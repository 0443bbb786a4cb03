#pragma once

#include <memory>
#include <string>
#include <vector>

#include "datscan/model/layers.hpp"

namespace datscan::nn {

/// Maps an image to a spatial feature map of fixed shape. Implementations
/// accumulate parameter gradients in backward() and never update weights
/// themselves.
template <typename Scalar>
class FeatureExtractor {
 public:
  /// Per-call activations needed by backward().
  struct Trace {
    virtual ~Trace() = default;
  };

  virtual ~FeatureExtractor() = default;

  virtual std::string kind() const = 0;
  virtual int input_rows() const = 0;
  virtual int input_cols() const = 0;
  virtual int output_channels() const = 0;
  virtual int output_rows() const = 0;
  virtual int output_cols() const = 0;

  /// `x` must already have the native input size. A trace is recorded only
  /// when `trace` is non-null.
  virtual FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, std::unique_ptr<Trace>* trace) const = 0;
  virtual void backward(const FeatureMap<Scalar>& grad_out, const Trace& trace) = 0;

  virtual std::vector<Parameter<Scalar>*> parameters() = 0;
  virtual std::vector<const Parameter<Scalar>*> parameters() const = 0;

  void set_trainable(bool on) {
    for (auto* p : parameters()) p->trainable = on;
    trainable_ = on;
  }
  bool trainable() const { return trainable_; }

 private:
  bool trainable_ = true;
};

/// Three conv3x3 -> ReLU -> maxpool2 blocks.
template <typename Scalar>
class SmallCnn final : public FeatureExtractor<Scalar> {
 public:
  using typename FeatureExtractor<Scalar>::Trace;

  SmallCnn(int input_rows, int input_cols, std::vector<int> widths = {8, 16, 32})
      : rows_(input_rows), cols_(input_cols), widths_(std::move(widths)) {
    if (widths_.size() != 3) throw std::invalid_argument("small-cnn takes exactly three block widths");
    if (input_rows < 8 || input_cols < 8) throw std::invalid_argument("small-cnn input must be at least 8x8");
    int in = 3;
    for (std::size_t i = 0; i < widths_.size(); ++i) {
      if (widths_[i] < 1) throw std::invalid_argument("block widths must be positive");
      convs_.emplace_back("conv" + std::to_string(i + 1), in, widths_[i]);
      in = widths_[i];
    }
  }

  void init(SplitMix64& rng) {
    for (auto& c : convs_) c.init_he(rng);
  }

  std::string kind() const override { return "small-cnn"; }
  int input_rows() const override { return rows_; }
  int input_cols() const override { return cols_; }
  int output_channels() const override { return widths_.back(); }
  int output_rows() const override { return rows_ / 8; }
  int output_cols() const override { return cols_ / 8; }
  const std::vector<int>& widths() const { return widths_; }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, std::unique_ptr<Trace>* trace) const override {
    if (x.rows != rows_ || x.cols != cols_) {
      throw std::invalid_argument("small-cnn expects " + std::to_string(rows_) + "x" + std::to_string(cols_) + " input, got " +
                                  std::to_string(x.rows) + "x" + std::to_string(x.cols));
    }
    auto t = trace ? std::make_unique<CnnTrace>() : nullptr;
    FeatureMap<Scalar> h = x;
    for (const auto& conv : convs_) {
      Matrix<Scalar> cols = conv.im2col(h);
      FeatureMap<Scalar> a = conv.forward(cols, h.rows, h.cols);
      a.data = a.data.cwiseMax(Scalar(0));
      std::vector<int> argmax;
      FeatureMap<Scalar> pooled = MaxPool2<Scalar>::forward(a, t ? &argmax : nullptr);
      if (t) t->blocks.push_back({std::move(cols), std::move(a), std::move(argmax)});
      h = std::move(pooled);
    }
    if (trace) *trace = std::move(t);
    return h;
  }

  void backward(const FeatureMap<Scalar>& grad_out, const Trace& trace) override {
    const auto& t = dynamic_cast<const CnnTrace&>(trace);
    FeatureMap<Scalar> g = grad_out;
    for (std::size_t i = convs_.size(); i-- > 0;) {
      const auto& b = t.blocks[i];
      g = MaxPool2<Scalar>::backward(g, b.argmax, b.activation.rows, b.activation.cols);
      g.data = (b.activation.data.array() > Scalar(0)).select(g.data, Scalar(0));
      g = convs_[i].backward(g, b.cols, i > 0);
    }
  }

  std::vector<Parameter<Scalar>*> parameters() override {
    std::vector<Parameter<Scalar>*> ps;
    for (auto& c : convs_) {
      ps.push_back(&c.weight());
      ps.push_back(&c.bias());
    }
    return ps;
  }

  std::vector<const Parameter<Scalar>*> parameters() const override {
    std::vector<const Parameter<Scalar>*> ps;
    for (const auto& c : convs_) {
      ps.push_back(&c.weight());
      ps.push_back(&c.bias());
    }
    return ps;
  }

 private:
  struct CnnTrace final : Trace {
    struct Block {
      Matrix<Scalar> cols;
      FeatureMap<Scalar> activation;  // post-ReLU, pre-pool
      std::vector<int> argmax;
    };
    std::vector<Block> blocks;
  };

  int rows_;
  int cols_;
  std::vector<int> widths_;
  std::vector<Conv3x3<Scalar>> convs_;
};

}  // namespace datscan::nn
