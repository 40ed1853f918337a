#include "adsel/scaling.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel {

ScalingRanges fit_ranges(const FeatureTable& table, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error("cannot fit scaling ranges on an empty set of vectors");
  ScalingRanges r{table.columns(), std::vector<double>(table.cols()), std::vector<double>(table.cols())};
  for (std::size_t c = 0; c < table.cols(); ++c) {
    double lo = table.at(rows[0], c);
    double hi = lo;
    for (std::size_t i : rows) {
      lo = std::min(lo, table.at(i, c));
      hi = std::max(hi, table.at(i, c));
    }
    r.min[c] = lo;
    r.max[c] = hi;
  }
  return r;
}

ScalingRanges fit_ranges(const FeatureTable& table) {
  std::vector<std::size_t> rows(table.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_ranges(table, rows);
}

double scale_value(double x, double min, double max) {
  if (!(max > min)) return 0.5;
  double s = (x - min) / (max - min);
  return std::clamp(s, 0.0, 1.0);
}

std::vector<double> scale(std::span<const double> vector, const ScalingRanges& ranges) {
  if (vector.size() != ranges.size()) {
    throw Error(fmt::format("vector has {} features, scaling ranges cover {}", vector.size(), ranges.size()));
  }
  std::vector<double> out(vector.size());
  for (std::size_t i = 0; i < vector.size(); ++i) out[i] = scale_value(vector[i], ranges.min[i], ranges.max[i]);
  return out;
}

FeatureTable scale(const FeatureTable& table, const ScalingRanges& ranges) {
  FeatureTable projected = table.select(FeatureSubset(ranges.names));
  FeatureTable out(ranges.names);
  for (std::size_t r = 0; r < projected.rows(); ++r) out.add_row(projected.image_ids()[r], scale(projected.row(r), ranges));
  return out;
}

}  // namespace adsel
