#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adsel {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit RGB raster. Always at least 1x1.
class RasterImage {
 public:
  RasterImage(int width, int height, Rgb fill = {});
  // `rgb` holds width*height interleaved triples.
  RasterImage(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &rgb_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &rgb_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const { return rgb_; }

  // Quarter turn clockwise; the result is height x width.
  RasterImage rotated90() const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> rgb_;
};

}  // namespace adsel
