#include "datscan/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace datscan {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

struct Canvas {
  TripletImage img;
  int margin;
  int span;

  void put(int x, int y, Rgb color) {
    if (x < 0 || y < 0 || x >= img.cols || y >= img.rows) return;
    for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = color[static_cast<std::size_t>(ch)];
  }

  int px(double u) const { return margin + static_cast<int>(std::lround(u * span)); }
  int py(double v) const { return margin + span - static_cast<int>(std::lround(v * span)); }

  void line(int x0, int y0, int x1, int y1, Rgb color, int thickness = 1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      for (int ox = -(thickness / 2); ox <= thickness / 2; ++ox)
        for (int oy = -(thickness / 2); oy <= thickness / 2; ++oy) put(x0 + ox, y0 + oy, color);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

constexpr Rgb kFrame{90, 90, 90};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kChance{190, 190, 190};
constexpr Rgb kCurve{31, 119, 180};

}  // namespace

TripletImage render_curve(const Curve& c, int size) {
  Canvas cv{TripletImage(size, size), size / 10, size - 2 * (size / 10)};
  std::fill(cv.img.pixels.begin(), cv.img.pixels.end(), std::uint8_t{255});

  for (int i = 1; i < 10; ++i) {
    const double t = i / 10.0;
    cv.line(cv.px(t), cv.py(0), cv.px(t), cv.py(1), kGrid);
    cv.line(cv.px(0), cv.py(t), cv.px(1), cv.py(t), kGrid);
  }
  if (c.kind == CurveKind::ROC) cv.line(cv.px(0), cv.py(0), cv.px(1), cv.py(1), kChance);
  cv.line(cv.px(0), cv.py(0), cv.px(1), cv.py(0), kFrame);
  cv.line(cv.px(0), cv.py(1), cv.px(1), cv.py(1), kFrame);
  cv.line(cv.px(0), cv.py(0), cv.px(0), cv.py(1), kFrame);
  cv.line(cv.px(1), cv.py(0), cv.px(1), cv.py(1), kFrame);

  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c.kind == CurveKind::PR) {
      // Step: recall advances at the new precision.
      cv.line(cv.px(c.x[i - 1]), cv.py(c.y[i]), cv.px(c.x[i]), cv.py(c.y[i]), kCurve, 2);
      cv.line(cv.px(c.x[i - 1]), cv.py(c.y[i - 1]), cv.px(c.x[i - 1]), cv.py(c.y[i]), kCurve, 2);
    } else {
      cv.line(cv.px(c.x[i - 1]), cv.py(c.y[i - 1]), cv.px(c.x[i]), cv.py(c.y[i]), kCurve, 2);
    }
  }
  return cv.img;
}

void write_curve_png(const Curve& c, const std::filesystem::path& file, int size) {
  write_image(render_curve(c, size), file);
}

}  // namespace datscan
