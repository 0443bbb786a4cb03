#include "datscan/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "datscan/rng.hpp"

namespace datscan {
namespace fs = std::filesystem;

void PhantomParams::validate() const {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(control_uptake > 0.0)) throw std::invalid_argument("control_uptake must be > 0");
  if (!(pd_uptake_factor > 0.0 && pd_uptake_factor < 1.0)) throw std::invalid_argument("pd_uptake_factor must lie in (0, 1)");
  if (!(asymmetry_factor > 0.0 && asymmetry_factor <= 1.0)) throw std::invalid_argument("asymmetry_factor must lie in (0, 1]");
}

namespace {

constexpr double kMidline = 45.0;
constexpr double kStriatumZ = 41.0;
constexpr double kPutamenRelativePeak = 0.9;

double ellipsoid_r2(const PhantomLayout::Ellipsoid& e, double x, double y, double z) {
  const double dx = (x - e.cx) / e.sx, dy = (y - e.cy) / e.sy, dz = (z - e.cz) / e.sz;
  return dx * dx + dy * dy + dz * dz;
}

double tail_r2(const PhantomLayout::Tail& t, double x, double y, double z) {
  const double vx = t.x1 - t.x0, vy = t.y1 - t.y0;
  const double s = std::clamp(((x - t.x0) * vx + (y - t.y0) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  const double px = x - (t.x0 + s * vx), py = y - (t.y0 + s * vy);
  const double dz = (z - t.cz) / t.sz;
  return (px * px + py * py) / (t.s_plane * t.s_plane) + dz * dz;
}

double falloff(double r2) {
  return r2 > kHotspotCutoff * kHotspotCutoff ? 0.0 : std::exp(-0.5 * r2);
}

struct Box {
  int x0, x1, y0, y1, z0, z1;
};

Box clip(double xlo, double xhi, double ylo, double yhi, double zlo, double zhi, Dims d) {
  auto lo = [](double v) { return std::max(0, static_cast<int>(std::floor(v))); };
  auto hi = [](double v, int n) { return std::min(n - 1, static_cast<int>(std::ceil(v))); };
  return {lo(xlo), hi(xhi, d.x), lo(ylo), hi(yhi, d.y), lo(zlo), hi(zhi, d.z)};
}

Box bounds(const PhantomLayout::Ellipsoid& e, Dims d) {
  const double k = kHotspotCutoff;
  return clip(e.cx - k * e.sx, e.cx + k * e.sx, e.cy - k * e.sy, e.cy + k * e.sy, e.cz - k * e.sz, e.cz + k * e.sz, d);
}

Box bounds(const PhantomLayout::Tail& t, Dims d) {
  const double k = kHotspotCutoff;
  return clip(std::min(t.x0, t.x1) - k * t.s_plane, std::max(t.x0, t.x1) + k * t.s_plane,
              std::min(t.y0, t.y1) - k * t.s_plane, std::max(t.y0, t.y1) + k * t.s_plane, t.cz - k * t.sz,
              t.cz + k * t.sz, d);
}

template <typename Fn>
void for_box(const Box& b, Fn&& fn) {
  for (int z = b.z0; z <= b.z1; ++z)
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x) fn(x, y, z);
}

}  // namespace

PhantomLayout phantom_layout(Label label, const PhantomParams& params, const std::string& subject_id) {
  params.validate();
  SplitMix64 jitter(mix_seed(params.rng_seed, hash_string(subject_id), 0x6a));
  const double dx = jitter.uniform(-2.0, 2.0);
  const double dy = jitter.uniform(-2.0, 2.0);
  const double dz = jitter.uniform(-2.0, 2.0);
  const double gain = jitter.uniform(0.95, 1.05);
  const int reduced = static_cast<int>(jitter() & 1u);

  const double peak = params.control_uptake * gain;
  PhantomLayout layout{};
  layout.reduced_hemisphere = reduced;
  for (int h = 0; h < 2; ++h) {
    const double side = h == 0 ? -1.0 : 1.0;
    double hemi = 1.0;
    double putamen_scale = kPutamenRelativePeak;
    if (label == Label::PD) {
      putamen_scale *= params.pd_uptake_factor;
      if (h == reduced) hemi = params.asymmetry_factor;
    }
    layout.caudate[h] = {kMidline + side * 11.0 + dx, 64.0 + dy, kStriatumZ + dz, 3.5, 5.0, 3.5, peak * hemi};
    layout.putamen[h] = {kMidline + side * 17.0 + dx, 58.0 + dy, kMidline + side * 23.0 + dx, 44.0 + dy,
                         kStriatumZ + dz, 3.0, 3.5, peak * hemi * putamen_scale};
  }
  return layout;
}

Volume synth_volume(Label label, const PhantomParams& params, const std::string& subject_id) {
  const PhantomLayout layout = phantom_layout(label, params, subject_id);
  Volume v(subject_id, kMniDims, label);

  if (params.noise_sigma > 0.0) {
    SplitMix64 noise(mix_seed(params.rng_seed, hash_string(subject_id), static_cast<std::uint64_t>(label) + 1));
    for (auto& voxel : v.voxels) voxel = static_cast<float>(std::max(0.0, params.noise_sigma * noise.normal()));
  }

  for (int h = 0; h < 2; ++h) {
    const auto& c = layout.caudate[h];
    for_box(bounds(c, v.dims), [&](int x, int y, int z) { v.at(x, y, z) += static_cast<float>(c.peak * falloff(ellipsoid_r2(c, x, y, z))); });
    const auto& t = layout.putamen[h];
    for_box(bounds(t, v.dims), [&](int x, int y, int z) { v.at(x, y, z) += static_cast<float>(t.peak * falloff(tail_r2(t, x, y, z))); });
  }
  return v;
}

std::vector<std::uint8_t> region_mask(const PhantomLayout& layout, PhantomRegion region, Dims dims) {
  std::vector<std::uint8_t> mask(dims.count(), 0);
  auto mark = [&](int x, int y, int z) {
    mask[static_cast<std::size_t>(x) + static_cast<std::size_t>(dims.x) * (y + static_cast<std::size_t>(dims.y) * z)] = 1;
  };
  const double cut2 = kHotspotCutoff * kHotspotCutoff;
  for (int h = 0; h < 2; ++h) {
    if (region != PhantomRegion::Putamen) {
      const auto& c = layout.caudate[h];
      for_box(bounds(c, dims), [&](int x, int y, int z) {
        if (ellipsoid_r2(c, x, y, z) <= cut2) mark(x, y, z);
      });
    }
    if (region != PhantomRegion::Caudate) {
      const auto& t = layout.putamen[h];
      for_box(bounds(t, dims), [&](int x, int y, int z) {
        if (tail_r2(t, x, y, z) <= cut2) mark(x, y, z);
      });
    }
  }
  return mask;
}

double masked_mean(const Volume& v, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != v.voxels.size()) throw std::invalid_argument("mask size does not match volume");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) {
      sum += v.voxels[i];
      ++n;
    }
  if (n == 0) throw std::invalid_argument("empty mask");
  return sum / static_cast<double>(n);
}

DatasetManifest synth_dataset(std::size_t n_control, std::size_t n_pd, const PhantomParams& params,
                              const fs::path& out_dir) {
  params.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw std::runtime_error("cannot create output directory " + out_dir.string());

  DatasetManifest m;
  m.root = out_dir;
  const std::size_t total = n_control + n_pd;
  if (total > 0) fs::create_directories(out_dir / "volumes");
  for (std::size_t i = 0; i < total; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "sub-%04zu", i + 1);
    const Label label = i < n_control ? Label::Control : Label::PD;
    const Volume v = synth_volume(label, params, id);
    const fs::path header = save_volume(v, out_dir / "volumes");
    m.entries.push_back({id, fs::relative(header, out_dir), label});
  }
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

}  // namespace datscan
