#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adsel/feature_table.hpp"
#include "adsel/features.hpp"
#include "adsel/selection.hpp"

namespace adsel {

// Accuracy (in [0, 1]) of a premodel restricted to a feature subset.
using SubsetScorer = std::function<double(const FeatureSubset&)>;

// Rows of `features` paired with their optimum-model labels (nullopt = no
// model). `levels` orders the cascade; when empty, distinct labels are used in
// order of decreasing frequency.
struct LabeledDataset {
  FeatureTable features;
  std::vector<std::optional<std::string>> labels;
  std::vector<std::string> levels;
};

struct CvScorerOptions {
  std::size_t k = 5;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
};

// K-fold cross-validated accuracy of an abstaining cascade that predicts each
// row's label; an abstention matches the no-model label. Scaling is fitted on
// each training split. Throws when every row carries the same label.
SubsetScorer make_cv_scorer(LabeledDataset dataset, CvScorerOptions options);

struct FeatureImportance {
  std::string name;
  double accuracy_without = 0.0;
  double raw_drop = 0.0;  // max(0, accuracy_all - accuracy_without)
  double percent = 0.0;   // raw drops normalised to sum to 100
};

struct ImportanceReport {
  double accuracy_all = 0.0;
  std::vector<FeatureImportance> features;  // subset order
};

// Leave-one-feature-out importance. Needs at least two features. When no
// removal lowers accuracy every percentage is 0.
ImportanceReport feature_importance(const SubsetScorer& scorer, const FeatureSubset& subset);

struct RemovalStep {
  std::string removed;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
};

struct EliminationResult {
  std::vector<RemovalStep> removals;
  FeatureSubset remaining;
};

// Repeatedly drops the feature whose removal leaves the highest accuracy
// (earliest feature on ties) until `stop_size` remain.
EliminationResult greedy_eliminate(const SubsetScorer& scorer, const FeatureSubset& start, std::size_t stop_size);

struct FeatureSelectionReport {
  double pcc_threshold = 0.75;
  PruneResult pruned;
  EliminationResult elimination;
  ImportanceReport importance;
  std::string note;  // why a stage was skipped, if one was
};

void write_feature_selection_json(std::ostream& out, const FeatureSelectionReport& report);
// Plot-ready: one row per feature with its stage outcome.
void write_feature_selection_csv(std::ostream& out, const FeatureSelectionReport& report);

}  // namespace adsel
