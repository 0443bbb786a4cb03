#include "datscan/triplet.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace datscan {

Axis parse_axis(const std::string& s) {
  if (s == "axial" || s == "z") return Axis::Axial;
  if (s == "coronal" || s == "y") return Axis::Coronal;
  if (s == "sagittal" || s == "x") return Axis::Sagittal;
  throw std::invalid_argument("unknown axis '" + s + "'");
}

std::string to_string(Axis a) {
  switch (a) {
    case Axis::Axial: return "axial";
    case Axis::Coronal: return "coronal";
    case Axis::Sagittal: return "sagittal";
  }
  return "axial";
}

namespace {

struct PlaneGeometry {
  int rows;
  int cols;
  int depth;
};

PlaneGeometry plane_of(const Dims& d, Axis axis) {
  switch (axis) {
    case Axis::Axial: return {d.y, d.x, d.z};
    case Axis::Coronal: return {d.z, d.x, d.y};
    case Axis::Sagittal: return {d.z, d.y, d.x};
  }
  return {d.y, d.x, d.z};
}

float sample(const Volume& v, Axis axis, int slice, int r, int c) {
  switch (axis) {
    case Axis::Axial: return v.at(c, r, slice);
    case Axis::Coronal: return v.at(c, slice, r);
    case Axis::Sagittal: return v.at(slice, c, r);
  }
  return 0.0f;
}

}  // namespace

TripletImage extract_triplet(const Volume& v, int z0, Axis axis) {
  const auto g = plane_of(v.dims, axis);
  if (z0 < 0 || z0 + 2 >= g.depth) {
    throw std::out_of_range("slice triplet starting at " + std::to_string(z0) + " exceeds " + to_string(axis) +
                            " extent " + std::to_string(g.depth));
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        const double s = sample(v, axis, z0 + ch, r, c);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }

  TripletImage t(g.rows, g.cols);
  t.source_slices = {z0, z0 + 1, z0 + 2};
  t.subject_id = v.subject_id;
  if (!(hi > lo)) return t;

  const double scale = 255.0 / (hi - lo);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const double q = std::floor((sample(v, axis, z0 + ch, r, c) - lo) * scale + 0.5);
        t.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
      }
  return t;
}

void write_image(const TripletImage& t, const std::filesystem::path& path) {
  if (t.pixels.size() != static_cast<std::size_t>(t.rows) * t.cols * 3) {
    throw ImageIoError("image buffer does not match its shape");
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(t.cols);
  img.height = static_cast<png_uint_32>(t.rows);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, t.pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError("cannot write " + path.string() + ": " + msg);
  }
}

TripletImage read_image(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw ImageIoError("cannot read " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  TripletImage t(static_cast<int>(img.height), static_cast<int>(img.width));
  if (!png_image_finish_read(&img, nullptr, t.pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError("cannot decode " + path.string() + ": " + msg);
  }
  t.subject_id = path.stem().string();
  return t;
}

}  // namespace datscan
