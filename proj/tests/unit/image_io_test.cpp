#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "adsel/error.hpp"
#include "adsel/image_io.hpp"
#include "adsel/rng.hpp"
#include "test_support.hpp"

using namespace adsel;
using adsel::testing::TempDir;

namespace {

RasterImage gradient(int w, int h) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(x * 7), static_cast<std::uint8_t>(y * 11), static_cast<std::uint8_t>(x ^ y)});
  return img;
}

RasterImage parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_ppm(in);
}

}  // namespace

TEST(Ppm, RoundTrip) {
  RasterImage img = gradient(13, 7);
  std::ostringstream out;
  write_ppm(out, img);
  EXPECT_EQ(out.str().substr(0, 11), "P6\n13 7\n255");
  EXPECT_EQ(parse(out.str()), img);
}

TEST(Ppm, AcceptsCommentsAndArbitraryWhitespace) {
  std::string body = "\x01\x02\x03\x04\x05\x06";
  RasterImage img = parse("P6 # made by hand\n2\t1\r\n# maxval next\n255\n" + body);
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.height(), 1);
  EXPECT_EQ(img.at(1, 0), (Rgb{4, 5, 6}));
}

TEST(Ppm, PixelDataMayStartWithWhitespaceBytes) {
  std::string body = "\n\n\n \t ";
  RasterImage img = parse("P6\n2 1\n255\n" + body);
  EXPECT_EQ(img.at(0, 0), (Rgb{'\n', '\n', '\n'}));
  EXPECT_EQ(img.at(1, 0), (Rgb{' ', '\t', ' '}));
}

TEST(Ppm, RejectsMalformedInput) {
  EXPECT_THROW(parse("P3\n1 1\n255\n\x01\x02\x03"), ParseError);
  EXPECT_THROW(parse("P6\n1 1\n65535\n\x01\x02\x03"), ParseError);
  EXPECT_THROW(parse("P6\n1 1\n127\n\x01\x02\x03"), ParseError);
  EXPECT_THROW(parse("P6\n0 1\n255\n"), ParseError);
  EXPECT_THROW(parse("P6\n2 2\n255\n\x01\x02\x03"), ParseError);
  EXPECT_THROW(parse("P6\nx 2\n255\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(Png, RoundTripThroughFile) {
  TempDir dir;
  RasterImage img = gradient(21, 9);
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_png(dir / "a.png"), img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
}

TEST(Png, CorruptFileIsAnError) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.png", std::ios::binary);
    out << "\x89PNG\r\n\x1a\n" << "garbage that is not a chunk stream";
  }
  EXPECT_THROW(read_image(dir / "bad.png"), Error);
  {
    std::ofstream out(dir / "empty.png", std::ios::binary);
  }
  EXPECT_THROW(read_image(dir / "empty.png"), Error);
  EXPECT_THROW(read_image(dir / "missing.png"), Error);
}

TEST(ReadImage, DispatchesOnSignatureNotExtension) {
  TempDir dir;
  RasterImage img = gradient(4, 4);
  {
    std::ofstream out(dir / "really_ppm.png", std::ios::binary);
    write_ppm(out, img);
  }
  EXPECT_EQ(read_image(dir / "really_ppm.png"), img);
  write_png(dir / "really_png.ppm", img);
  EXPECT_EQ(read_image(dir / "really_png.ppm"), img);
}

TEST(ReadImage, RecognisesImageExtensions) {
  EXPECT_TRUE(is_image_path("a/b.png"));
  EXPECT_TRUE(is_image_path("x.PPM"));
  EXPECT_FALSE(is_image_path("notes.txt"));
  EXPECT_FALSE(is_image_path("png"));
}

TEST(Raster, QuarterTurnClockwise) {
  RasterImage img = gradient(3, 2);
  RasterImage r = img.rotated90();
  ASSERT_EQ(r.width(), 2);
  ASSERT_EQ(r.height(), 3);
  // Top-left goes to top-right.
  EXPECT_EQ(r.at(1, 0), img.at(0, 0));
  EXPECT_EQ(r.at(0, 0), img.at(0, 1));
  EXPECT_EQ(img.rotated90().rotated90().rotated90().rotated90(), img);
}
