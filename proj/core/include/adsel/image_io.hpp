#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "adsel/raster.hpp"

namespace adsel {

// Binary PPM: magic "P6", whitespace-separated width, height and maxval (which
// must be 255), exactly one whitespace byte, then width*height RGB triples.
// '#' comments are accepted in the header.
RasterImage read_ppm(std::istream& in, const std::string& source = "<ppm>");
void write_ppm(std::ostream& out, const RasterImage& image);

RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& image);

// Dispatches on the file signature, not the extension.
RasterImage read_image(const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);

}  // namespace adsel
