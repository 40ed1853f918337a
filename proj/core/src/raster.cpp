#include "adsel/raster.hpp"

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel {
namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(fmt::format("degenerate raster {}x{}", width, height));
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dims(width, height);
  rgb_.resize(3 * pixel_count());
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    rgb_[3 * i] = fill.r;
    rgb_[3 * i + 1] = fill.g;
    rgb_[3 * i + 2] = fill.b;
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  check_dims(width, height);
  if (rgb_.size() != 3 * pixel_count()) {
    throw Error(fmt::format("raster {}x{} needs {} bytes, got {}", width, height, 3 * pixel_count(), rgb_.size()));
  }
}

RasterImage RasterImage::rotated90() const {
  RasterImage out(height_, width_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      out.set(height_ - 1 - y, x, at(x, y));
    }
  }
  return out;
}

}  // namespace adsel
