#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/rng.hpp"
#include "datscan/triplet.hpp"

namespace datscan::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Channels x pixels; column r*cols + c holds the channel vector of (r, c).
template <typename Scalar>
struct FeatureMap {
  int rows = 0;
  int cols = 0;
  Matrix<Scalar> data;

  FeatureMap() = default;
  FeatureMap(int channels, int h, int w) : rows(h), cols(w), data(Matrix<Scalar>::Zero(channels, h * w)) {}

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return rows * cols; }
};

/// A named tensor with its gradient accumulator.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool trainable = true;

  Parameter(std::string n, Matrix<Scalar> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

/// Pixels scaled to [-1, 1], the Inception-style input convention.
template <typename Scalar>
FeatureMap<Scalar> to_feature_map(const TripletImage& img) {
  FeatureMap<Scalar> x(3, img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c)
      for (int ch = 0; ch < 3; ++ch) x.data(ch, r * img.cols + c) = static_cast<Scalar>(img.at(r, c, ch)) / Scalar(127.5) - Scalar(1);
  return x;
}

/// Bilinear resampling with half-pixel centres and edge clamping.
template <typename Scalar>
FeatureMap<Scalar> resize_bilinear(const FeatureMap<Scalar>& in, int rows, int cols) {
  if (in.rows == rows && in.cols == cols) return in;
  FeatureMap<Scalar> out(in.channels(), rows, cols);
  const double sy = static_cast<double>(in.rows) / rows;
  const double sx = static_cast<double>(in.cols) / cols;
  for (int r = 0; r < rows; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(in.rows - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, in.rows - 1);
    const auto wy = static_cast<Scalar>(fy - y0);
    for (int c = 0; c < cols; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(in.cols - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, in.cols - 1);
      const auto wx = static_cast<Scalar>(fx - x0);
      out.data.col(r * cols + c) =
          (Scalar(1) - wy) * ((Scalar(1) - wx) * in.data.col(y0 * in.cols + x0) + wx * in.data.col(y0 * in.cols + x1)) +
          wy * ((Scalar(1) - wx) * in.data.col(y1 * in.cols + x0) + wx * in.data.col(y1 * in.cols + x1));
    }
  }
  return out;
}

/// 3x3 convolution, stride 1, zero "same" padding, computed as one GEMM over
/// an im2col matrix whose row index is in_channel*9 + ky*3 + kx.
template <typename Scalar>
class Conv3x3 {
 public:
  Conv3x3(std::string name, int in_channels, int out_channels)
      : in_(in_channels),
        weight_(name + ".weight", Matrix<Scalar>::Zero(out_channels, in_channels * 9)),
        bias_(name + ".bias", Matrix<Scalar>::Zero(out_channels, 1)) {}

  void init_he(SplitMix64& rng) {
    const double stddev = std::sqrt(2.0 / (in_ * 9));
    for (Eigen::Index i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = static_cast<Scalar>(stddev * rng.normal());
    bias_.value.setZero();
  }

  Matrix<Scalar> im2col(const FeatureMap<Scalar>& x) const {
    if (x.channels() != in_) throw std::invalid_argument("conv input has " + std::to_string(x.channels()) + " channels, expected " + std::to_string(in_));
    Matrix<Scalar> cols = Matrix<Scalar>::Zero(in_ * 9, x.pixels());
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx)
        for (int r = 0; r < x.rows; ++r) {
          const int sr = r + ky - 1;
          if (sr < 0 || sr >= x.rows) continue;
          for (int c = 0; c < x.cols; ++c) {
            const int sc = c + kx - 1;
            if (sc < 0 || sc >= x.cols) continue;
            for (int ci = 0; ci < in_; ++ci) cols(ci * 9 + ky * 3 + kx, r * x.cols + c) = x.data(ci, sr * x.cols + sc);
          }
        }
    return cols;
  }

  FeatureMap<Scalar> forward(const Matrix<Scalar>& cols, int rows, int ncols) const {
    FeatureMap<Scalar> y;
    y.rows = rows;
    y.cols = ncols;
    y.data.noalias() = weight_.value * cols;
    y.data.colwise() += bias_.value.col(0);
    return y;
  }

  /// Accumulates parameter gradients; returns d(input) unless `need_input_grad` is false.
  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& grad_out, const Matrix<Scalar>& cols, bool need_input_grad) {
    weight_.grad.noalias() += grad_out.data * cols.transpose();
    bias_.grad.col(0) += grad_out.data.rowwise().sum();
    FeatureMap<Scalar> gin;
    if (!need_input_grad) return gin;
    const Matrix<Scalar> gcols = weight_.value.transpose() * grad_out.data;
    gin = FeatureMap<Scalar>(in_, grad_out.rows, grad_out.cols);
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx)
        for (int r = 0; r < gin.rows; ++r) {
          const int sr = r + ky - 1;
          if (sr < 0 || sr >= gin.rows) continue;
          for (int c = 0; c < gin.cols; ++c) {
            const int sc = c + kx - 1;
            if (sc < 0 || sc >= gin.cols) continue;
            for (int ci = 0; ci < in_; ++ci) gin.data(ci, sr * gin.cols + sc) += gcols(ci * 9 + ky * 3 + kx, r * gin.cols + c);
          }
        }
    return gin;
  }

  int in_channels() const { return in_; }
  int out_channels() const { return static_cast<int>(weight_.value.rows()); }
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }
  const Parameter<Scalar>& weight() const { return weight_; }
  const Parameter<Scalar>& bias() const { return bias_; }

 private:
  int in_;
  Parameter<Scalar> weight_;
  Parameter<Scalar> bias_;
};

/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
template <typename Scalar>
struct MaxPool2 {
  static FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, std::vector<int>* argmax) {
    FeatureMap<Scalar> y(x.channels(), x.rows / 2, x.cols / 2);
    if (argmax) argmax->assign(static_cast<std::size_t>(y.data.size()), 0);
    for (int r = 0; r < y.rows; ++r)
      for (int c = 0; c < y.cols; ++c) {
        const int o = r * y.cols + c;
        const int cand[4] = {2 * r * x.cols + 2 * c, 2 * r * x.cols + 2 * c + 1, (2 * r + 1) * x.cols + 2 * c,
                             (2 * r + 1) * x.cols + 2 * c + 1};
        for (int ch = 0; ch < x.channels(); ++ch) {
          int best = cand[0];
          for (int k = 1; k < 4; ++k)
            if (x.data(ch, cand[k]) > x.data(ch, best)) best = cand[k];
          y.data(ch, o) = x.data(ch, best);
          if (argmax) (*argmax)[static_cast<std::size_t>(o) * x.channels() + ch] = best;
        }
      }
    return y;
  }

  static FeatureMap<Scalar> backward(const FeatureMap<Scalar>& grad_out, const std::vector<int>& argmax, int in_rows,
                                     int in_cols) {
    FeatureMap<Scalar> gin(grad_out.channels(), in_rows, in_cols);
    for (int o = 0; o < grad_out.pixels(); ++o)
      for (int ch = 0; ch < grad_out.channels(); ++ch)
        gin.data(ch, argmax[static_cast<std::size_t>(o) * grad_out.channels() + ch]) += grad_out.data(ch, o);
    return gin;
  }
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

}  // namespace datscan::nn
