#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/label.hpp"

namespace datscan {

/// Grid extents, X fastest-varying, Z slowest.
struct Dims {
  int x = 91;
  int y = 109;
  int z = 91;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

inline constexpr Dims kMniDims{91, 109, 91};

/// A registered SPECT volume with its subject identity.
struct Volume {
  std::string subject_id;
  Dims dims;
  std::vector<float> voxels;  // size dims.count(), index x + X*(y + Y*z)
  std::optional<Label> label;

  Volume() = default;
  Volume(std::string id, Dims d, std::optional<Label> lbl = std::nullopt)
      : subject_id(std::move(id)), dims(d), voxels(d.count(), 0.0f), label(lbl) {}

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims.x) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.y) * static_cast<std::size_t>(z));
  }
  float& at(int x, int y, int z) { return voxels[index(x, y, z)]; }
  float at(int x, int y, int z) const { return voxels[index(x, y, z)]; }
};

class VolumeError : public std::runtime_error {
 public:
  enum class Kind { MissingFile, MalformedHeader, SizeMismatch, NonFinite, Io };

  VolumeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads a volume from its text header (`*.hdr`). The header names a raw
/// payload of little-endian float32 voxels relative to its own directory:
///
///     format: datscan-volume 1
///     dims: 91 109 91
///     dtype: float32le
///     order: xyz
///     subject_id: sub-0001
///     label: PD
///     payload: sub-0001.raw
Volume load_volume(const std::filesystem::path& header_path);

/// Writes `<stem>.hdr` and `<stem>.raw` into `dir`; returns the header path.
std::filesystem::path save_volume(const Volume& v, const std::filesystem::path& dir);

}  // namespace datscan
