#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adsel/raster.hpp"

namespace adsel {

inline constexpr std::size_t kHistogramBins = 7;

// Candidate features in canonical order. The histogram groups occupy
// kHistogramBins consecutive slots starting at their first enumerator.
enum class Feature : std::size_t {
  kKeypoints = 0,
  kAvgBrightness,
  kBrightnessRms,
  kAvgPerceivedBrightness,
  kPerceivedBrightnessRms,
  kContrast,
  kEdgeLength1,
  kEdgeAngle1 = kEdgeLength1 + kHistogramBins,
  kAreaByPerimeter = kEdgeAngle1 + kHistogramBins,
  kAspectRatio,
  kHue1,
  kCount = kHue1 + kHistogramBins,
};

inline constexpr std::size_t kCandidateFeatureCount = static_cast<std::size_t>(Feature::kCount);

std::span<const std::string> candidate_feature_names();
std::optional<std::size_t> candidate_feature_index(std::string_view name);

struct CandidateFeatureVector {
  std::array<double, kCandidateFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }

  std::span<const double, kHistogramBins> histogram(Feature first) const {
    return std::span<const double, kHistogramBins>(values.data() + static_cast<std::size_t>(first), kHistogramBins);
  }

  friend bool operator==(const CandidateFeatureVector&, const CandidateFeatureVector&) = default;
};

// Extraction parameters. The defaults are part of the feature definition;
// changing them changes every stored feature file.
struct ExtractorOptions {
  int fast_threshold = 20;         // gray levels
  int fast_arc = 12;               // contiguous circle pixels out of 16
  double edge_fraction = 0.25;     // of the peak Sobel magnitude
  double min_saturation = 0.1;     // pixels below are excluded from the hue histogram
};

CandidateFeatureVector extract_features(const RasterImage& image, const ExtractorOptions& options = {});

// Ordered list of feature names; nonempty, no duplicates.
class FeatureSubset {
 public:
  explicit FeatureSubset(std::vector<std::string> names);

  // n_keypoints, avg_perceived_brightness, contrast, edge_length1,
  // area_by_perim, aspect_ratio, hue1.
  static FeatureSubset standard();
  static FeatureSubset all_candidates();

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool contains(std::string_view name) const;

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace adsel
