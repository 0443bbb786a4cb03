#pragma once

#include <cmath>
#include <vector>

#include "datscan/model/layers.hpp"

namespace datscan::nn {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with bias correction. Moment buffers are keyed by position in the
/// parameter list passed to step(), which must not change between calls.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamParams p = {}) : p_(p) {}

  void step(const std::vector<Parameter<Scalar>*>& params, double lr) {
    if (m_.empty()) {
      for (auto* prm : params) {
        m_.push_back(Matrix<Scalar>::Zero(prm->value.rows(), prm->value.cols()));
        v_.push_back(Matrix<Scalar>::Zero(prm->value.rows(), prm->value.cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(p_.beta1), b2 = static_cast<Scalar>(p_.beta2);
    const auto step_size = static_cast<Scalar>(lr / c1);
    const auto eps = static_cast<Scalar>(p_.epsilon);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto* prm = params[i];
      if (!prm->trainable) continue;
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * prm->grad;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * prm->grad.cwiseAbs2();
      prm->value.array() -= step_size * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  AdamParams p_;
  long t_ = 0;
  std::vector<Matrix<Scalar>> m_, v_;
};

}  // namespace datscan::nn
