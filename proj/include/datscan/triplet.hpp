#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/volume.hpp"

namespace datscan {

/// Three consecutive slices packed as an 8-bit RGB image, row-major HWC.
struct TripletImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // rows * cols * 3
  std::array<int, 3> source_slices{0, 1, 2};
  std::string subject_id;

  TripletImage() = default;
  TripletImage(int h, int w) : rows(h), cols(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t& at(int r, int c, int ch) { return pixels[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }
  std::uint8_t at(int r, int c, int ch) const { return pixels[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }

  bool same_shape(const TripletImage& o) const { return rows == o.rows && cols == o.cols; }
};

/// Slicing axis. Axial slices index Z and lie in the X-Y plane.
enum class Axis { Sagittal = 0, Coronal = 1, Axial = 2 };

Axis parse_axis(const std::string& s);
std::string to_string(Axis a);

/// Packs slices z0, z0+1, z0+2 along `axis` into R, G, B. Intensities are
/// min-max normalized jointly over the three slices to [0, 255] with
/// round-half-up; a constant triplet maps to all zeros.
///
/// Image layout per axis (rows x cols): axial Y x X, coronal Z x X,
/// sagittal Z x Y.
TripletImage extract_triplet(const Volume& v, int z0 = 40, Axis axis = Axis::Axial);

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit RGB PNG, no alpha.
void write_image(const TripletImage& t, const std::filesystem::path& path);

/// Reads any PNG, converted to 8-bit RGB. subject_id is the file stem.
TripletImage read_image(const std::filesystem::path& path);

}  // namespace datscan
