#pragma once

#include <filesystem>

#include "datscan/metrics.hpp"
#include "datscan/triplet.hpp"

namespace datscan {

/// Rasterizes a curve on the unit square: white background, grey frame and
/// grid, the curve in blue and (for ROC) the chance diagonal in light grey.
TripletImage render_curve(const Curve& c, int size = 400);

void write_curve_png(const Curve& c, const std::filesystem::path& file, int size = 400);

}  // namespace datscan
