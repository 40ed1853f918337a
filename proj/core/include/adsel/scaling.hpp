#pragma once

#include <span>
#include <string>
#include <vector>

#include "adsel/feature_table.hpp"

namespace adsel {

// Per-feature [min, max] observed on training data.
struct ScalingRanges {
  std::vector<std::string> names;
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const { return names.size(); }

  friend bool operator==(const ScalingRanges&, const ScalingRanges&) = default;
};

ScalingRanges fit_ranges(const FeatureTable& table);
// Only the listed rows contribute.
ScalingRanges fit_ranges(const FeatureTable& table, std::span<const std::size_t> rows);

// (x - min) / (max - min) clamped to [0, 1]; 0.5 when min == max.
double scale_value(double x, double min, double max);

std::vector<double> scale(std::span<const double> vector, const ScalingRanges& ranges);
// Projects `table` onto the range names, then scales every row.
FeatureTable scale(const FeatureTable& table, const ScalingRanges& ranges);

}  // namespace adsel
