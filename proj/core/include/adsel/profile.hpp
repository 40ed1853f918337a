#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adsel {

enum class Criterion { kTop1, kTop5 };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view text);

// Index into ClassifierProfile::model_ids().
using ModelIndex = std::size_t;
// nullopt means no candidate model is correct.
using ModelLabel = std::optional<ModelIndex>;

struct ProfileRecord {
  bool correct_top1 = false;
  bool correct_top5 = false;
  double latency_s = 0.0;
  double energy_j = 0.0;

  bool correct(Criterion c) const { return c == Criterion::kTop1 ? correct_top1 : correct_top5; }
};

// Dense image x model matrix of classifier outcomes. Image and model order is
// the order of first appearance in the source, which fixes every tie-break
// downstream.
class ClassifierProfile {
 public:
  ClassifierProfile(std::vector<std::string> image_ids, std::vector<std::string> model_ids,
                    std::vector<ProfileRecord> records, bool has_energy);

  const std::vector<std::string>& image_ids() const { return image_ids_; }
  const std::vector<std::string>& model_ids() const { return model_ids_; }
  std::size_t images() const { return image_ids_.size(); }
  std::size_t models() const { return model_ids_.size(); }
  bool has_energy() const { return has_energy_; }

  const ProfileRecord& at(std::size_t image, ModelIndex model) const { return records_[image * models() + model]; }

  std::optional<std::size_t> image_index(std::string_view id) const;
  std::optional<ModelIndex> model_index(std::string_view id) const;
  const std::string& model_name(ModelLabel label) const;

  // Restriction to the given image rows, in that order.
  ClassifierProfile subset(std::span<const std::size_t> images) const;

 private:
  std::vector<std::string> image_ids_;
  std::vector<std::string> model_ids_;
  std::vector<ProfileRecord> records_;
  bool has_energy_;
  std::unordered_map<std::string, std::size_t> image_index_;
};

// CSV header: image_id,model_id,correct_top1,correct_top5,latency_s[,energy_j]
ClassifierProfile load_profile(std::istream& in, const std::string& source = "<profile>");
ClassifierProfile load_profile(const std::filesystem::path& path);
void write_profile(std::ostream& out, const ClassifierProfile& profile);
void write_profile(const std::filesystem::path& path, const ClassifierProfile& profile);

// Fastest correct model for one image, restricted to `allowed` when given.
// Latency ties go to the earlier model.
ModelLabel optimum_label(const ClassifierProfile& profile, std::size_t image, Criterion criterion,
                         std::span<const ModelIndex> allowed = {});
std::vector<ModelLabel> optimum_labels(const ClassifierProfile& profile, Criterion criterion);
std::vector<ModelLabel> optimum_labels(const ClassifierProfile& profile, Criterion criterion,
                                       std::span<const ModelIndex> allowed);

// True when `model` is correct on `image` with the minimal latency among
// correct models (any of several tied optima qualifies).
bool is_optimal_choice(const ClassifierProfile& profile, std::size_t image, ModelIndex model, Criterion criterion);

// Fraction of images on which at least one model is correct.
double oracle_accuracy(const ClassifierProfile& profile, Criterion criterion);
double model_accuracy(const ClassifierProfile& profile, ModelIndex model, Criterion criterion);

void write_labels_csv(std::ostream& out, const ClassifierProfile& profile, std::span<const ModelLabel> labels);

}  // namespace adsel
