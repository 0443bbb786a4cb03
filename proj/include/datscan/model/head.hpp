#pragma once

#include <cmath>
#include <optional>

#include "datscan/model/layers.hpp"

namespace datscan::nn {

inline constexpr double kProbabilityClip = 1e-7;

/// Binary crossentropy of one prediction with p clipped to [eps, 1 - eps].
template <typename Scalar>
Scalar bce_loss(int y, Scalar p, double eps = kProbabilityClip) {
  const Scalar q = std::clamp(p, static_cast<Scalar>(eps), static_cast<Scalar>(1.0 - eps));
  return y == 1 ? -std::log(q) : -std::log(Scalar(1) - q);
}

/// d(bce)/d(logit) for p = sigmoid(logit). Zero while p sits on a clip bound,
/// matching the derivative of the clipped loss.
template <typename Scalar>
Scalar bce_logit_grad(int y, Scalar p, double eps = kProbabilityClip) {
  if (p < static_cast<Scalar>(eps) || p > static_cast<Scalar>(1.0 - eps)) return Scalar(0);
  return p - static_cast<Scalar>(y);
}

/// Global average pooling -> dense(U, ReLU) -> dropout -> dense(1, sigmoid).
template <typename Scalar>
class ClassifierHead {
 public:
  struct Trace {
    Vector<Scalar> pooled;
    Vector<Scalar> hidden;  // post-ReLU, post-dropout
    Vector<Scalar> keep;    // dropout multiplier per unit (0 or 1/(1-r)); ones at inference
    Vector<Scalar> pre;     // dense1 pre-activation
    Scalar logit = 0;
    Scalar prob = 0;
    int pixels = 0;
  };

  ClassifierHead(int channels, int units, double dropout)
      : dropout_(dropout),
        w1_("head.dense1.weight", Matrix<Scalar>::Zero(units, channels)),
        b1_("head.dense1.bias", Matrix<Scalar>::Zero(units, 1)),
        w2_("head.dense2.weight", Matrix<Scalar>::Zero(1, units)),
        b2_("head.dense2.bias", Matrix<Scalar>::Zero(1, 1)) {
    if (channels < 1 || units < 1) throw std::invalid_argument("head sizes must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }

  /// Glorot-uniform weights, zero biases.
  void init(SplitMix64& rng) {
    auto glorot = [&](Matrix<Scalar>& w) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
    };
    glorot(w1_.value);
    glorot(w2_.value);
    b1_.value.setZero();
    b2_.value.setZero();
  }

  /// `dropout_rng` non-null enables training-mode dropout.
  Trace forward(const FeatureMap<Scalar>& features, SplitMix64* dropout_rng) const {
    if (features.channels() != channels()) {
      throw std::invalid_argument("head expects " + std::to_string(channels()) + " feature channels, got " +
                                  std::to_string(features.channels()));
    }
    Trace t;
    t.pixels = features.pixels();
    t.pooled = features.data.rowwise().mean();
    t.pre = w1_.value * t.pooled + b1_.value.col(0);
    t.keep = Vector<Scalar>::Ones(units());
    if (dropout_rng && dropout_ > 0.0) {
      const auto scale = static_cast<Scalar>(1.0 / (1.0 - dropout_));
      for (int i = 0; i < units(); ++i) t.keep(i) = dropout_rng->uniform() < dropout_ ? Scalar(0) : scale;
    }
    t.hidden = t.pre.cwiseMax(Scalar(0)).cwiseProduct(t.keep);
    t.logit = (w2_.value * t.hidden)(0, 0) + b2_.value(0, 0);
    t.prob = sigmoid(t.logit);
    return t;
  }

  /// Accumulates head gradients for d(loss)/d(logit) and returns d(loss)/d(features).
  FeatureMap<Scalar> backward(Scalar dlogit, const Trace& t, int feature_rows, int feature_cols) {
    w2_.grad += dlogit * t.hidden.transpose();
    b2_.grad(0, 0) += dlogit;
    const Vector<Scalar> dhidden = dlogit * w2_.value.row(0).transpose();
    const Vector<Scalar> dpre =
        (t.pre.array() > Scalar(0)).select(dhidden.cwiseProduct(t.keep), Scalar(0)).matrix();
    w1_.grad += dpre * t.pooled.transpose();
    b1_.grad.col(0) += dpre;
    const Vector<Scalar> dpooled = w1_.value.transpose() * dpre;

    FeatureMap<Scalar> g(channels(), feature_rows, feature_cols);
    g.data.colwise() = dpooled / static_cast<Scalar>(t.pixels);
    return g;
  }

  std::vector<Parameter<Scalar>*> parameters() { return {&w1_, &b1_, &w2_, &b2_}; }
  std::vector<const Parameter<Scalar>*> parameters() const { return {&w1_, &b1_, &w2_, &b2_}; }

  int channels() const { return static_cast<int>(w1_.value.cols()); }
  int units() const { return static_cast<int>(w1_.value.rows()); }
  double dropout() const { return dropout_; }

 private:
  double dropout_;
  Parameter<Scalar> w1_, b1_, w2_, b2_;
};

}  // namespace datscan::nn
