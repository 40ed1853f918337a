#include "adsel/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel {
namespace {

std::vector<std::string> make_names() {
  std::vector<std::string> names = {"n_keypoints",
                                    "avg_brightness",
                                    "brightness_rms",
                                    "avg_perceived_brightness",
                                    "perceived_brightness_rms",
                                    "contrast"};
  for (std::size_t i = 1; i <= kHistogramBins; ++i) names.push_back(fmt::format("edge_length{}", i));
  for (std::size_t i = 1; i <= kHistogramBins; ++i) names.push_back(fmt::format("edge_angle{}", i));
  names.push_back("area_by_perim");
  names.push_back("aspect_ratio");
  for (std::size_t i = 1; i <= kHistogramBins; ++i) names.push_back(fmt::format("hue{}", i));
  return names;
}

const std::vector<std::string>& names_table() {
  static const std::vector<std::string> names = make_names();
  return names;
}

// Luma scaled by 1000 so that every downstream quantity up to the gradient
// threshold is exact integer arithmetic: gray = q / 1000.
struct GrayPlane {
  int width;
  int height;
  std::vector<std::int64_t> q;

  std::int64_t operator()(int x, int y) const { return q[static_cast<std::size_t>(y) * width + x]; }
};

GrayPlane gray_plane(const RasterImage& image) {
  GrayPlane plane{image.width(), image.height(), {}};
  plane.q.reserve(image.pixel_count());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      Rgb c = image.at(x, y);
      plane.q.push_back(299 * std::int64_t{c.r} + 587 * std::int64_t{c.g} + 114 * std::int64_t{c.b});
    }
  }
  return plane;
}

void brightness_features(const GrayPlane& plane, CandidateFeatureVector& out) {
  __int128 sum = 0;
  __int128 sum_sq = 0;
  for (std::int64_t v : plane.q) {
    sum += v;
    sum_sq += static_cast<__int128>(v) * v;
  }
  const auto n = static_cast<__int128>(plane.q.size());
  const double nd = static_cast<double>(plane.q.size());
  out[Feature::kAvgBrightness] = static_cast<double>(sum) / (1000.0 * nd);
  out[Feature::kBrightnessRms] = std::sqrt(static_cast<double>(sum_sq) / nd) / 1000.0;
  // Population standard deviation; n*S2 - S^2 is exact, so a flat image gives 0.
  out[Feature::kContrast] = std::sqrt(static_cast<double>(n * sum_sq - sum * sum)) / (1000.0 * nd);
}

void perceived_brightness_features(const RasterImage& image, CandidateFeatureVector& out) {
  // p = sqrt(0.241 R^2 + 0.691 G^2 + 0.068 B^2), with the weights kept integral.
  double total = 0.0;
  std::int64_t total_sq = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      Rgb c = image.at(x, y);
      std::int64_t num = 241 * std::int64_t{c.r} * c.r + 691 * std::int64_t{c.g} * c.g + 68 * std::int64_t{c.b} * c.b;
      total += std::sqrt(static_cast<double>(num) / 1000.0);
      total_sq += num;
    }
  }
  const double n = static_cast<double>(image.pixel_count());
  out[Feature::kAvgPerceivedBrightness] = total / n;
  out[Feature::kPerceivedBrightnessRms] = std::sqrt(static_cast<double>(total_sq) / (1000.0 * n));
}

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle = {{{0, -3}, {1, -3}, {2, -2}, {3, -1},
                                                         {3, 0}, {3, 1}, {2, 2}, {1, 3},
                                                         {0, 3}, {-1, 3}, {-2, 2}, {-3, 1},
                                                         {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

bool has_arc(std::uint32_t mask, int arc) {
  // Duplicate the 16-bit ring so wraparound runs become linear.
  std::uint32_t ring = mask | (mask << 16);
  int run = 0;
  for (int i = 0; i < 32; ++i) {
    run = (ring >> i) & 1u ? run + 1 : 0;
    if (run >= arc) return true;
  }
  return false;
}

int count_keypoints(const GrayPlane& plane, const ExtractorOptions& opt) {
  const std::int64_t t = 1000 * std::int64_t{opt.fast_threshold};
  int count = 0;
  for (int y = 3; y < plane.height - 3; ++y) {
    for (int x = 3; x < plane.width - 3; ++x) {
      const std::int64_t c = plane(x, y);
      std::uint32_t brighter = 0;
      std::uint32_t darker = 0;
      for (std::size_t i = 0; i < kCircle.size(); ++i) {
        std::int64_t v = plane(x + kCircle[i][0], y + kCircle[i][1]);
        if (v > c + t) brighter |= 1u << i;
        if (v < c - t) darker |= 1u << i;
      }
      if (has_arc(brighter, opt.fast_arc) || has_arc(darker, opt.fast_arc)) ++count;
    }
  }
  return count;
}

struct Gradient {
  std::vector<std::int64_t> gx;
  std::vector<std::int64_t> gy;
  std::vector<std::uint8_t> edge;
};

Gradient sobel_edges(const GrayPlane& p, const ExtractorOptions& opt) {
  const std::size_t n = p.q.size();
  Gradient g{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
  std::int64_t peak = 0;
  std::vector<std::int64_t> mag2(n, 0);
  for (int y = 1; y < p.height - 1; ++y) {
    for (int x = 1; x < p.width - 1; ++x) {
      std::int64_t gx = p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x - 1, y) -
                        p(x - 1, y + 1);
      std::int64_t gy = p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x, y - 1) -
                        p(x + 1, y - 1);
      std::size_t i = static_cast<std::size_t>(y) * p.width + x;
      g.gx[i] = gx;
      g.gy[i] = gy;
      mag2[i] = gx * gx + gy * gy;
      peak = std::max(peak, mag2[i]);
    }
  }
  if (peak == 0) return g;
  // |grad| >= f * peak, compared on squares. f = 1/4 stays in integers.
  if (opt.edge_fraction == 0.25) {
    for (std::size_t i = 0; i < n; ++i) g.edge[i] = mag2[i] > 0 && 16 * mag2[i] >= peak;
  } else {
    const double cut = opt.edge_fraction * opt.edge_fraction * static_cast<double>(peak);
    for (std::size_t i = 0; i < n; ++i) g.edge[i] = mag2[i] > 0 && static_cast<double>(mag2[i]) >= cut;
  }
  return g;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  // Keeps the smaller index as root, so a root is its component's first pixel
  // in raster order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::size_t length_bin(std::size_t size) {
  std::size_t bin = 0;
  for (std::size_t upper = 2; bin < kHistogramBins - 1 && size > upper; upper *= 2) ++bin;
  return bin;
}

void edge_features(const GrayPlane& plane, const ExtractorOptions& opt, CandidateFeatureVector& out) {
  const int w = plane.width;
  const int h = plane.height;
  Gradient g = sobel_edges(plane, opt);
  const std::size_t n = g.edge.size();

  std::array<std::size_t, kHistogramBins> angle_counts{};
  std::size_t edge_pixels = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.edge[i]) continue;
    double a = std::atan2(static_cast<double>(g.gy[i]), static_cast<double>(g.gx[i]));
    if (a < 0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a -= std::numbers::pi;
    auto bin = std::min<std::size_t>(kHistogramBins - 1, static_cast<std::size_t>(a * 7 / std::numbers::pi));
    ++angle_counts[bin];
    ++edge_pixels;
  }
  const auto angle0 = static_cast<std::size_t>(Feature::kEdgeAngle1);
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out.values[angle0 + b] = edge_pixels ? static_cast<double>(angle_counts[b]) / static_cast<double>(edge_pixels) : 0.0;
  }

  // 8-connected labelling: joining each pixel to its already-visited
  // neighbours (W, NW, N, NE) is sufficient.
  DisjointSets sets(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!g.edge[i]) continue;
      if (x > 0 && g.edge[i - 1]) sets.unite(i, i - 1);
      if (y > 0) {
        std::size_t up = i - w;
        if (g.edge[up]) sets.unite(i, up);
        if (x > 0 && g.edge[up - 1]) sets.unite(i, up - 1);
        if (x + 1 < w && g.edge[up + 1]) sets.unite(i, up + 1);
      }
    }
  }
  std::vector<std::size_t> size(n, 0);
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.edge[i]) continue;
    std::size_t r = sets.find(i);
    if (size[r]++ == 0) roots.push_back(r);
  }

  std::array<std::size_t, kHistogramBins> length_counts{};
  for (std::size_t r : roots) ++length_counts[length_bin(size[r])];
  const auto length0 = static_cast<std::size_t>(Feature::kEdgeLength1);
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out.values[length0 + b] = roots.empty() ? 0.0 : static_cast<double>(length_counts[b]) / static_cast<double>(roots.size());
  }

  if (roots.empty()) {
    out[Feature::kAreaByPerimeter] = 0.0;
    out[Feature::kAspectRatio] = static_cast<double>(w) / static_cast<double>(h);
    return;
  }

  // Main object: largest component; roots are in raster order so the first
  // strict maximum wins ties.
  std::size_t main = roots.front();
  for (std::size_t r : roots) {
    if (size[r] > size[main]) main = r;
  }
  std::size_t perimeter = 0;
  int min_x = w, max_x = -1, min_y = h, max_y = -1;
  auto in_main = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return false;
    std::size_t j = static_cast<std::size_t>(y) * w + x;
    return g.edge[j] && sets.find(j) == main;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in_main(x, y)) continue;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
      if (!in_main(x + 1, y) || !in_main(x - 1, y) || !in_main(x, y + 1) || !in_main(x, y - 1)) ++perimeter;
    }
  }
  out[Feature::kAreaByPerimeter] = static_cast<double>(size[main]) / static_cast<double>(perimeter);
  out[Feature::kAspectRatio] = static_cast<double>(max_x - min_x + 1) / static_cast<double>(max_y - min_y + 1);
}

void hue_features(const RasterImage& image, const ExtractorOptions& opt, CandidateFeatureVector& out) {
  std::array<std::size_t, kHistogramBins> counts{};
  std::size_t total = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      Rgb c = image.at(x, y);
      const int r = c.r, g = c.g, b = c.b;
      const int hi = std::max({r, g, b});
      const int d = hi - std::min({r, g, b});
      if (hi == 0) continue;
      if (opt.min_saturation == 0.1 ? 10 * d < hi : static_cast<double>(d) < opt.min_saturation * hi) continue;
      if (d == 0) continue;
      // Hue in units of 60/d degrees, on [0, 6d).
      int t;
      if (r >= g && r >= b) {
        t = g - b;
        if (t < 0) t += 6 * d;
      } else if (g >= b) {
        t = 2 * d + (b - r);
      } else {
        t = 4 * d + (r - g);
      }
      ++counts[static_cast<std::size_t>((7 * t) / (6 * d))];
      ++total;
    }
  }
  const auto hue0 = static_cast<std::size_t>(Feature::kHue1);
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out.values[hue0 + b] = total ? static_cast<double>(counts[b]) / static_cast<double>(total) : 0.0;
  }
}

}  // namespace

std::span<const std::string> candidate_feature_names() { return names_table(); }

std::optional<std::size_t> candidate_feature_index(std::string_view name) {
  const auto& names = names_table();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

CandidateFeatureVector extract_features(const RasterImage& image, const ExtractorOptions& options) {
  CandidateFeatureVector out;
  GrayPlane plane = gray_plane(image);
  out[Feature::kKeypoints] = count_keypoints(plane, options);
  brightness_features(plane, out);
  perceived_brightness_features(image, out);
  edge_features(plane, options, out);
  hue_features(image, options, out);
  return out;
}

FeatureSubset::FeatureSubset(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error("feature subset must not be empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error(fmt::format("duplicate feature '{}' in subset", n));
  }
}

FeatureSubset FeatureSubset::standard() {
  return FeatureSubset({"n_keypoints", "avg_perceived_brightness", "contrast", "edge_length1", "area_by_perim",
                        "aspect_ratio", "hue1"});
}

FeatureSubset FeatureSubset::all_candidates() {
  const auto& names = names_table();
  return FeatureSubset(std::vector<std::string>(names.begin(), names.end()));
}

bool FeatureSubset::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

}  // namespace adsel
