#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace datscan {

/// Piecewise-constant decay from initial_lr, floored at final_lr.
struct StepDecaySchedule {
  double initial_lr = 1e-3;
  double final_lr = 1e-6;
  double drop_factor = 0.1;
  int drop_period = 125;

  void validate() const {
    if (!(initial_lr > 0.0 && final_lr > 0.0 && final_lr <= initial_lr)) {
      throw std::invalid_argument("schedule requires 0 < final_lr <= initial_lr");
    }
    if (!(drop_factor > 0.0 && drop_factor <= 1.0)) throw std::invalid_argument("drop_factor must lie in (0, 1]");
    if (drop_period < 1) throw std::invalid_argument("drop_period must be >= 1");
  }
};

/// max(final_lr, initial_lr * drop_factor^floor(epoch / drop_period)).
inline double lr_at(const StepDecaySchedule& s, int epoch) {
  if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
  return std::max(s.final_lr, s.initial_lr * std::pow(s.drop_factor, epoch / s.drop_period));
}

inline std::vector<double> lr_trace(const StepDecaySchedule& s, int epochs) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(epochs, 0)));
  for (int e = 0; e < epochs; ++e) out.push_back(lr_at(s, e));
  return out;
}

}  // namespace datscan
