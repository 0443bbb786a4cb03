#include "datscan/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace datscan {

void AugmentationConfig::validate() const {
  auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in_range(width_shift_frac, 0.0, 0.5) || !in_range(height_shift_frac, 0.0, 0.5)) {
    throw std::invalid_argument("shift fractions must lie in [0, 0.5]");
  }
  if (!(brightness_lo > 0.0 && brightness_lo <= brightness_hi)) {
    throw std::invalid_argument("brightness range must satisfy 0 < lo <= hi");
  }
  if (!in_range(hflip_prob, 0.0, 1.0)) throw std::invalid_argument("hflip_prob must lie in [0, 1]");
}

TripletImage hflip(const TripletImage& img) {
  TripletImage out = img;
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, img.cols - 1 - c, ch) = img.at(r, c, ch);
  return out;
}

TripletImage shift(const TripletImage& img, int dx, int dy) {
  TripletImage out = img;
  std::fill(out.pixels.begin(), out.pixels.end(), std::uint8_t{0});
  for (int r = std::max(0, dy); r < std::min(img.rows, img.rows + dy); ++r)
    for (int c = std::max(0, dx); c < std::min(img.cols, img.cols + dx); ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r - dy, c - dx, ch);
  return out;
}

TripletImage scale_brightness(const TripletImage& img, double b) {
  TripletImage out = img;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(std::clamp(std::floor(p * b + 0.5), 0.0, 255.0));
  return out;
}

TripletImage augment(const TripletImage& img, const AugmentationConfig& cfg, SplitMix64& rng) {
  TripletImage out = img;
  if (rng.uniform() < cfg.hflip_prob) out = hflip(out);

  const auto max_dx = static_cast<std::int64_t>(std::floor(img.cols * cfg.width_shift_frac));
  const auto max_dy = static_cast<std::int64_t>(std::floor(img.rows * cfg.height_shift_frac));
  const auto dx = static_cast<int>(rng.between(-max_dx, max_dx));
  const auto dy = static_cast<int>(rng.between(-max_dy, max_dy));
  if (dx != 0 || dy != 0) out = shift(out, dx, dy);

  const double b = rng.uniform(cfg.brightness_lo, cfg.brightness_hi);
  if (b != 1.0) out = scale_brightness(out, b);
  return out;
}

}  // namespace datscan
