#include "adsel/feature_table.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"

namespace adsel {

FeatureTable::FeatureTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void FeatureTable::add_row(std::string image_id, std::span<const double> values) {
  if (values.size() != cols()) {
    throw Error(fmt::format("row '{}' has {} values, table has {} columns", image_id, values.size(), cols()));
  }
  if (!id_index_.emplace(image_id, ids_.size()).second) {
    throw Error(fmt::format("duplicate image_id '{}'", image_id));
  }
  ids_.push_back(std::move(image_id));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::vector<double> FeatureTable::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

std::optional<std::size_t> FeatureTable::column_index(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns_.begin());
}

std::optional<std::size_t> FeatureTable::row_index(std::string_view image_id) const {
  auto it = id_index_.find(std::string(image_id));
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> FeatureTable::column_indices(const FeatureSubset& subset) const {
  std::vector<std::size_t> idx;
  idx.reserve(subset.size());
  for (const auto& name : subset.names()) {
    auto c = column_index(name);
    if (!c) throw Error(fmt::format("feature '{}' not present in table", name));
    idx.push_back(*c);
  }
  return idx;
}

FeatureTable FeatureTable::select(const FeatureSubset& subset) const {
  std::vector<std::size_t> idx = column_indices(subset);
  FeatureTable out(subset.names());
  std::vector<double> buf(idx.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) buf[j] = at(r, idx[j]);
    out.add_row(ids_[r], buf);
  }
  return out;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable out(columns_);
  for (std::size_t r : rows) out.add_row(ids_.at(r), row(r));
  return out;
}

FeatureTable read_feature_csv(std::istream& in, const std::string& source) {
  csv::LineReader reader(in, source);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw ParseError(source, 0, "empty feature file (missing header)");
  if (fields.empty() || fields[0] != "image_id") throw ParseError(source, reader.line(), "first column must be image_id");
  FeatureTable table(std::vector<std::string>(fields.begin() + 1, fields.end()));
  std::vector<double> values(table.cols());
  while (reader.next(fields)) {
    if (fields.size() != table.cols() + 1) {
      throw ParseError(source, reader.line(),
                       fmt::format("expected {} fields, got {}", table.cols() + 1, fields.size()));
    }
    if (fields[0].empty()) throw ParseError(source, reader.line(), "empty image_id");
    for (std::size_t c = 0; c < table.cols(); ++c) values[c] = csv::parse_double(fields[c + 1], source, reader.line());
    if (table.row_index(fields[0])) {
      throw ParseError(source, reader.line(), fmt::format("duplicate image_id '{}'", fields[0]));
    }
    table.add_row(fields[0], values);
  }
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_feature_csv(in, path.string());
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << "image_id";
  for (const auto& c : table.columns()) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.image_ids()[r];
    for (double v : table.row(r)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  write_feature_csv(out, table);
}

}  // namespace adsel
