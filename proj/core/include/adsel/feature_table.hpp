#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adsel/features.hpp"

namespace adsel {

// Named numeric columns keyed by image id, stored row-major. This is the
// in-memory form of a feature CSV: header "image_id,<feature>...", one row per
// image.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& image_ids() const { return ids_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return columns_.size(); }

  void add_row(std::string image_id, std::span<const double> values);
  void add_row(std::string image_id, const CandidateFeatureVector& v) { add_row(std::move(image_id), v.values); }

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::vector<double> column(std::size_t c) const;

  std::optional<std::size_t> column_index(std::string_view name) const;
  std::optional<std::size_t> row_index(std::string_view image_id) const;

  // Projection onto `subset`, in subset order. Throws if a name is missing.
  FeatureTable select(const FeatureSubset& subset) const;
  std::vector<std::size_t> column_indices(const FeatureSubset& subset) const;
  // Projection onto the given row indices, in that order.
  FeatureTable select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
    return a.columns_ == b.columns_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> id_index_;
};

FeatureTable read_feature_csv(std::istream& in, const std::string& source = "<features>");
FeatureTable read_feature_csv(const std::filesystem::path& path);
void write_feature_csv(std::ostream& out, const FeatureTable& table);
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);

}  // namespace adsel
