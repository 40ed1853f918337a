#include "adsel/image_io.hpp"

#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <fmt/format.h>
#include <png.h>

#include "adsel/error.hpp"

namespace adsel {
namespace {

// Reads one unsigned decimal header token, skipping whitespace and comments.
int read_header_int(std::istream& in, const std::string& source) {
  int c = in.get();
  while (true) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (c != EOF && std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw ParseError(source, 0, "malformed PPM header");
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > (1 << 24)) throw ParseError(source, 0, "PPM dimension out of range");
    c = in.get();
  }
  if (c == EOF || !std::isspace(c)) throw ParseError(source, 0, "malformed PPM header");
  // The single whitespace byte after the token has been consumed.
  return static_cast<int>(value);
}

}  // namespace

RasterImage read_ppm(std::istream& in, const std::string& source) {
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '6') {
    throw ParseError(source, 0, "not a binary PPM (missing P6 magic)");
  }
  int width = read_header_int(in, source);
  int height = read_header_int(in, source);
  int maxval = read_header_int(in, source);
  if (maxval != 255) throw ParseError(source, 0, fmt::format("unsupported PPM maxval {}", maxval));
  if (width < 1 || height < 1) throw ParseError(source, 0, fmt::format("degenerate PPM {}x{}", width, height));
  std::vector<std::uint8_t> rgb(3 * static_cast<std::size_t>(width) * height);
  if (!in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()))) {
    throw ParseError(source, 0, "truncated PPM pixel data");
  }
  return RasterImage(width, height, std::move(rgb));
}

void write_ppm(std::ostream& out, const RasterImage& image) {
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  auto bytes = image.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RasterImage read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ParseError(path.string(), 0, fmt::format("PNG read failed: {}", msg));
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width < 1 || img.height < 1) {
    png_image_free(&img);
    throw ParseError(path.string(), 0, "degenerate PNG");
  }
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ParseError(path.string(), 0, fmt::format("PNG decode failed: {}", msg));
  }
  int w = static_cast<int>(img.width);
  int h = static_cast<int>(img.height);
  png_image_free(&img);
  return RasterImage(w, h, std::move(rgb));
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.bytes().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(fmt::format("{}: PNG write failed: {}", path.string(), msg));
  }
}

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open image");
  std::array<char, 8> sig{};
  in.read(sig.data(), sig.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  static constexpr std::array<unsigned char, 8> kPngSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (got == 8 && std::memcmp(sig.data(), kPngSig.data(), 8) == 0) {
    in.close();
    return read_png(path);
  }
  if (got >= 2 && sig[0] == 'P' && sig[1] == '6') {
    in.clear();
    in.seekg(0);
    return read_ppm(in, path.string());
  }
  throw ParseError(path.string(), 0, "unrecognized image format");
}

bool is_image_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".ppm";
}

}  // namespace adsel
