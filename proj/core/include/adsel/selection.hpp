#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adsel/feature_table.hpp"
#include "adsel/features.hpp"
#include "adsel/profile.hpp"

namespace adsel {

// Pearson product-moment correlation. Defined as 0 when either series is
// constant. Throws on length mismatch or fewer than two samples.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major, names.size()^2

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

CorrelationMatrix correlation_matrix(const FeatureTable& table);

struct PrunedPair {
  std::string kept;
  std::string removed;
  double abs_correlation;
};

struct PruneResult {
  FeatureSubset kept;
  // For every removed feature, the kept feature it correlated with most.
  std::vector<PrunedPair> removed;
};

// Scans features in matrix order and keeps one iff |r| <= threshold against
// every feature kept so far.
PruneResult prune_correlated(const CorrelationMatrix& matrix, double threshold);

// One iteration of the inference-model selection loop. Accuracies are coverage
// accuracies in percent: the share of images handled correctly by at least one
// model of the set.
struct SelectionStep {
  ModelIndex model = 0;
  std::string model_id;
  // Step 0: images on which the model is optimal. Later: previously failed
  // images the model gets right.
  std::size_t score = 0;
  std::size_t failed_before = 0;
  double accuracy_before_pct = 0.0;
  double accuracy_after_pct = 0.0;
  double gain_pct = 0.0;
  // The final probe whose gain fell to theta or below is recorded but excluded.
  bool included = true;
};

struct ModelSelectionTrace {
  Criterion criterion = Criterion::kTop1;
  double theta_pct = 0.5;
  std::vector<SelectionStep> steps;

  std::vector<ModelIndex> selected() const;
  std::vector<std::string> selected_ids() const;
};

// theta is in percentage points.
ModelSelectionTrace select_inference_models(const ClassifierProfile& profile, Criterion criterion, double theta_pct);

void write_trace_json(std::ostream& out, const ModelSelectionTrace& trace);
void write_trace_csv(std::ostream& out, const ModelSelectionTrace& trace);

}  // namespace adsel
