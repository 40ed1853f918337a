#include "adsel/profile.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"

namespace adsel {

std::string_view to_string(Criterion c) { return c == Criterion::kTop1 ? "top1" : "top5"; }

Criterion parse_criterion(std::string_view text) {
  if (text == "top1" || text == "Top1" || text == "top-1") return Criterion::kTop1;
  if (text == "top5" || text == "Top5" || text == "top-5") return Criterion::kTop5;
  throw Error(fmt::format("unknown criterion '{}' (expected top1 or top5)", text));
}

ClassifierProfile::ClassifierProfile(std::vector<std::string> image_ids, std::vector<std::string> model_ids,
                                     std::vector<ProfileRecord> records, bool has_energy)
    : image_ids_(std::move(image_ids)),
      model_ids_(std::move(model_ids)),
      records_(std::move(records)),
      has_energy_(has_energy) {
  if (records_.size() != image_ids_.size() * model_ids_.size()) {
    throw Error("profile records do not form a dense image x model matrix");
  }
  for (std::size_t i = 0; i < image_ids_.size(); ++i) {
    if (!image_index_.emplace(image_ids_[i], i).second) throw Error(fmt::format("duplicate image '{}'", image_ids_[i]));
  }
  for (const auto& r : records_) {
    if (!(r.latency_s > 0.0)) throw Error("profile latency must be positive");
    if (r.correct_top1 && !r.correct_top5) throw Error("top-1 hit without top-5 hit");
  }
}

std::optional<std::size_t> ClassifierProfile::image_index(std::string_view id) const {
  auto it = image_index_.find(std::string(id));
  if (it == image_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ModelIndex> ClassifierProfile::model_index(std::string_view id) const {
  auto it = std::find(model_ids_.begin(), model_ids_.end(), id);
  if (it == model_ids_.end()) return std::nullopt;
  return static_cast<ModelIndex>(it - model_ids_.begin());
}

const std::string& ClassifierProfile::model_name(ModelLabel label) const {
  static const std::string kNone = "none";
  return label ? model_ids_.at(*label) : kNone;
}

ClassifierProfile ClassifierProfile::subset(std::span<const std::size_t> images) const {
  std::vector<std::string> ids;
  std::vector<ProfileRecord> recs;
  ids.reserve(images.size());
  recs.reserve(images.size() * models());
  for (std::size_t i : images) {
    ids.push_back(image_ids_.at(i));
    for (ModelIndex m = 0; m < models(); ++m) recs.push_back(at(i, m));
  }
  return ClassifierProfile(std::move(ids), model_ids_, std::move(recs), has_energy_);
}

ClassifierProfile load_profile(std::istream& in, const std::string& source) {
  csv::LineReader reader(in, source);
  std::vector<std::string> f;
  if (!reader.next(f)) throw ParseError(source, 0, "empty profile (missing header)");
  const std::vector<std::string> base = {"image_id", "model_id", "correct_top1", "correct_top5", "latency_s"};
  bool has_energy = false;
  if (f.size() == base.size() + 1 && std::equal(base.begin(), base.end(), f.begin()) && f.back() == "energy_j") {
    has_energy = true;
  } else if (f != base) {
    throw ParseError(source, reader.line(),
                     "header must be image_id,model_id,correct_top1,correct_top5,latency_s[,energy_j]");
  }
  const std::size_t width = base.size() + (has_energy ? 1 : 0);

  std::vector<std::string> images;
  std::vector<std::string> models;
  std::unordered_map<std::string, std::size_t> image_pos;
  std::unordered_map<std::string, std::size_t> model_pos;
  struct Cell {
    ProfileRecord rec;
    std::size_t line;
  };
  std::unordered_map<std::size_t, std::unordered_map<std::size_t, Cell>> cells;

  while (reader.next(f)) {
    const std::size_t line = reader.line();
    if (f.size() != width) throw ParseError(source, line, fmt::format("expected {} fields, got {}", width, f.size()));
    if (f[0].empty()) throw ParseError(source, line, "missing image_id");
    if (f[1].empty()) throw ParseError(source, line, "missing model_id");
    ProfileRecord rec;
    rec.correct_top1 = csv::parse_bool01(f[2], source, line);
    rec.correct_top5 = csv::parse_bool01(f[3], source, line);
    rec.latency_s = csv::parse_double(f[4], source, line);
    if (has_energy) rec.energy_j = csv::parse_double(f[5], source, line);
    if (!(rec.latency_s > 0.0)) throw ParseError(source, line, fmt::format("latency must be positive, got {}", f[4]));
    if (rec.energy_j < 0.0) throw ParseError(source, line, fmt::format("energy must be non-negative, got {}", f[5]));
    if (rec.correct_top1 && !rec.correct_top5) {
      throw ParseError(source, line, "correct_top1=1 requires correct_top5=1");
    }
    auto [ii, new_image] = image_pos.emplace(f[0], images.size());
    if (new_image) images.push_back(f[0]);
    auto [mi, new_model] = model_pos.emplace(f[1], models.size());
    if (new_model) models.push_back(f[1]);
    auto [ci, fresh] = cells[ii->second].emplace(mi->second, Cell{rec, line});
    if (!fresh) {
      throw ParseError(source, line,
                       fmt::format("duplicate record for ({}, {}), first seen on line {}", f[0], f[1], ci->second.line));
    }
  }

  if (images.empty()) throw ParseError(source, 0, "profile has no records");
  std::vector<ProfileRecord> records;
  records.reserve(images.size() * models.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& row = cells[i];
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto it = row.find(m);
      if (it == row.end()) {
        throw ParseError(source, 0, fmt::format("missing record for image '{}' and model '{}'", images[i], models[m]));
      }
      records.push_back(it->second.rec);
    }
  }
  return ClassifierProfile(std::move(images), std::move(models), std::move(records), has_energy);
}

ClassifierProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return load_profile(in, path.string());
}

void write_profile(std::ostream& out, const ClassifierProfile& p) {
  out << "image_id,model_id,correct_top1,correct_top5,latency_s" << (p.has_energy() ? ",energy_j" : "") << '\n';
  for (std::size_t i = 0; i < p.images(); ++i) {
    for (ModelIndex m = 0; m < p.models(); ++m) {
      const auto& r = p.at(i, m);
      out << p.image_ids()[i] << ',' << p.model_ids()[m] << ',' << (r.correct_top1 ? 1 : 0) << ','
          << (r.correct_top5 ? 1 : 0) << ',' << csv::format_double(r.latency_s);
      if (p.has_energy()) out << ',' << csv::format_double(r.energy_j);
      out << '\n';
    }
  }
}

void write_profile(const std::filesystem::path& path, const ClassifierProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  write_profile(out, profile);
}

ModelLabel optimum_label(const ClassifierProfile& profile, std::size_t image, Criterion criterion,
                         std::span<const ModelIndex> allowed) {
  ModelLabel best;
  auto consider = [&](ModelIndex m) {
    const auto& r = profile.at(image, m);
    if (!r.correct(criterion)) return;
    if (!best || r.latency_s < profile.at(image, *best).latency_s ||
        (r.latency_s == profile.at(image, *best).latency_s && m < *best)) {
      best = m;
    }
  };
  if (allowed.empty()) {
    for (ModelIndex m = 0; m < profile.models(); ++m) consider(m);
  } else {
    for (ModelIndex m : allowed) consider(m);
  }
  return best;
}

std::vector<ModelLabel> optimum_labels(const ClassifierProfile& profile, Criterion criterion) {
  return optimum_labels(profile, criterion, {});
}

std::vector<ModelLabel> optimum_labels(const ClassifierProfile& profile, Criterion criterion,
                                       std::span<const ModelIndex> allowed) {
  std::vector<ModelLabel> labels(profile.images());
  for (std::size_t i = 0; i < profile.images(); ++i) labels[i] = optimum_label(profile, i, criterion, allowed);
  return labels;
}

bool is_optimal_choice(const ClassifierProfile& profile, std::size_t image, ModelIndex model, Criterion criterion) {
  ModelLabel best = optimum_label(profile, image, criterion);
  return best && profile.at(image, model).correct(criterion) &&
         profile.at(image, model).latency_s == profile.at(image, *best).latency_s;
}

double oracle_accuracy(const ClassifierProfile& profile, Criterion criterion) {
  if (profile.images() == 0) return 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < profile.images(); ++i) {
    for (ModelIndex m = 0; m < profile.models(); ++m) {
      if (profile.at(i, m).correct(criterion)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(profile.images());
}

double model_accuracy(const ClassifierProfile& profile, ModelIndex model, Criterion criterion) {
  if (profile.images() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < profile.images(); ++i) hits += profile.at(i, model).correct(criterion) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(profile.images());
}

void write_labels_csv(std::ostream& out, const ClassifierProfile& profile, std::span<const ModelLabel> labels) {
  out << "image_id,optimum_model\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << profile.image_ids()[i] << ',' << profile.model_name(labels[i]) << '\n';
}

}  // namespace adsel
