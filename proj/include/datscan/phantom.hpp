#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "datscan/manifest.hpp"
#include "datscan/volume.hpp"

namespace datscan {

struct PhantomParams {
  double noise_sigma = 5.0;
  double control_uptake = 100.0;
  double pd_uptake_factor = 0.4;
  double asymmetry_factor = 0.8;
  std::uint64_t rng_seed = 42;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Striatal hotspot placement for one subject. Each hemisphere has a
/// caudate-like ellipsoid and a putamen-like tail running posterolaterally
/// from it; both fall off as truncated Gaussians centred near z = 41.
struct PhantomLayout {
  struct Ellipsoid {
    double cx, cy, cz;
    double sx, sy, sz;
    double peak;
  };
  struct Tail {
    double x0, y0, x1, y1, cz;
    double s_plane, sz;
    double peak;
  };
  Ellipsoid caudate[2];
  Tail putamen[2];
  int reduced_hemisphere = 0;  // 0 = left (x below midline), 1 = right
};

/// Normalized radius beyond which a hotspot contributes exactly zero.
inline constexpr double kHotspotCutoff = 3.0;

PhantomLayout phantom_layout(Label label, const PhantomParams& params, const std::string& subject_id);

/// 91x109x91 volume: clamped Gaussian background noise plus the hotspots.
/// PD scales both putamen tails by pd_uptake_factor and the reduced
/// hemisphere by asymmetry_factor. Deterministic in all three arguments.
Volume synth_volume(Label label, const PhantomParams& params, const std::string& subject_id);

enum class PhantomRegion { Caudate, Putamen, AnyHotspot };

/// 1 where the region's hotspot support covers the voxel.
std::vector<std::uint8_t> region_mask(const PhantomLayout& layout, PhantomRegion region, Dims dims = kMniDims);

/// Mean voxel value over a mask.
double masked_mean(const Volume& v, const std::vector<std::uint8_t>& mask);

/// Writes `<out_dir>/volumes/<id>.{hdr,raw}` and `<out_dir>/manifest.csv`.
/// Controls take ids sub-0001.. first, PD subjects follow.
DatasetManifest synth_dataset(std::size_t n_control, std::size_t n_pd, const PhantomParams& params,
                              const std::filesystem::path& out_dir);

}  // namespace datscan
