#pragma once

#include <cstdint>
#include <string>

#include "datscan/rng.hpp"
#include "datscan/triplet.hpp"

namespace datscan {

struct AugmentationConfig {
  double width_shift_frac = 0.1;
  double height_shift_frac = 0.1;
  double brightness_lo = 0.8;
  double brightness_hi = 1.2;
  double hflip_prob = 0.5;

  /// Shifts 0, brightness (1, 1), no flips.
  static AugmentationConfig identity() { return {0.0, 0.0, 1.0, 1.0, 0.0}; }

  void validate() const;
};

/// Mirrors columns: column c moves to cols-1-c.
TripletImage hflip(const TripletImage& img);

/// Translates content by (dx, dy) pixels (positive = right, down). Vacated
/// pixels are 0.
TripletImage shift(const TripletImage& img, int dx, int dy);

/// Multiplies every channel by b, rounding half up and clamping to [0, 255].
TripletImage scale_brightness(const TripletImage& img, double b);

/// Flip (with hflip_prob), then integer shift, then brightness, all drawn
/// from `rng` in that order.
TripletImage augment(const TripletImage& img, const AugmentationConfig& cfg, SplitMix64& rng);

/// Stream for one sample in one epoch; independent of worker count.
inline SplitMix64 sample_stream(std::uint64_t seed, const std::string& subject_id, std::uint64_t epoch) {
  return SplitMix64(mix_seed(seed, hash_string(subject_id), epoch));
}

}  // namespace datscan
