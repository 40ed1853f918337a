#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adsel/feature_table.hpp"
#include "adsel/premodel.hpp"
#include "adsel/profile.hpp"
#include "adsel/scaling.hpp"
#include "adsel/selection.hpp"

namespace adsel {

// Disjoint test folds over profile image indices.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;

  std::size_t size() const { return folds.size(); }
  // Every index not in fold `f`, ascending.
  std::vector<std::size_t> training_rows(std::size_t f) const;
};

// Seeded shuffle, then round-robin assignment. Fold sizes differ by at most 1.
FoldPlan make_folds(std::size_t corpus_size, std::size_t folds, std::uint64_t seed);

// Chooses a model (or abstains) for one profile image.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual ModelLabel choose(std::size_t image) const = 0;
};

class PolicyTrainer {
 public:
  virtual ~PolicyTrainer() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Policy> train(std::span<const std::size_t> training_images) const = 0;
  // Whether decisions carry a premodel cost on top of the chosen model's latency.
  virtual bool charges_premodel_cost() const { return false; }
};

class ConstantPolicyTrainer final : public PolicyTrainer {
 public:
  ConstantPolicyTrainer(const ClassifierProfile& profile, ModelIndex model) : profile_(profile), model_(model) {}
  std::string name() const override;
  std::unique_ptr<Policy> train(std::span<const std::size_t>) const override;

 private:
  const ClassifierProfile& profile_;
  ModelIndex model_;
};

// Picks the optimum model of every image; abstains when none is correct.
class OraclePolicyTrainer final : public PolicyTrainer {
 public:
  OraclePolicyTrainer(const ClassifierProfile& profile, Criterion criterion) : profile_(profile), criterion_(criterion) {}
  std::string name() const override { return "oracle"; }
  std::unique_ptr<Policy> train(std::span<const std::size_t>) const override;

 private:
  const ClassifierProfile& profile_;
  Criterion criterion_;
};

struct PremodelConfig {
  FeatureSubset features = FeatureSubset::standard();
  std::vector<ModelIndex> levels;  // models in cascade order
  std::size_t k = 5;
  Fallback::Kind fallback = Fallback::Kind::kUsePrespecified;  // pre-specified = first level
  Criterion criterion = Criterion::kTop1;
};

// Labels every training image with its fastest correct model among the
// cascade levels, fits scaling on the training rows only, and trains a cascade.
TrainingMatrix build_training_matrix(const ClassifierProfile& profile, const FeatureTable& features,
                                     const ScalingRanges& ranges, const PremodelConfig& config,
                                     std::span<const std::size_t> images);

struct TrainedPremodel {
  ScalingRanges ranges;
  Cascade cascade;
};

TrainedPremodel train_premodel(const ClassifierProfile& profile, const FeatureTable& features,
                               const PremodelConfig& config, std::span<const std::size_t> images);

class PremodelTrainer final : public PolicyTrainer {
 public:
  // `features` must contain a row for every profile image.
  PremodelTrainer(const ClassifierProfile& profile, const FeatureTable& features, PremodelConfig config);
  std::string name() const override { return "premodel"; }
  std::unique_ptr<Policy> train(std::span<const std::size_t> training_images) const override;
  bool charges_premodel_cost() const override { return true; }

 private:
  const ClassifierProfile& profile_;
  FeatureTable features_;  // profile image order, projected onto config_.features
  PremodelConfig config_;
};

struct Decision {
  std::size_t image = 0;
  std::size_t fold = 0;
  ModelLabel choice;
  double premodel_time_s = 0.0;
};

struct ClassMetrics {
  std::string model_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct FoldMetrics {
  std::size_t test_images = 0;
  double accuracy_top1 = 0.0;
  double accuracy_top5 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double optimality = 0.0;
  double abstention = 0.0;
  double mean_premodel_time_s = 0.0;
  double mean_model_latency_s = 0.0;
  double mean_end_to_end_s = 0.0;
  double mean_energy_j = 0.0;
  std::vector<ClassMetrics> classes;
};

struct MetricField {
  std::string_view name;
  double FoldMetrics::*member;
};
// Scalar metrics aggregated across folds, in report order.
std::span<const MetricField> metric_fields();

struct EvalOptions {
  // Constant per-image premodel cost added to end-to-end time. Used instead of
  // wall-clock measurement when measure_time is false, keeping reports
  // reproducible.
  double premodel_overhead_s = 0.0;
  bool measure_time = false;
};

// Metrics for one set of decisions. Abstentions count as misses for accuracy
// and recall and are left out of every precision denominator. Macro averages
// run over models that occur as a choice or as a true optimum label.
FoldMetrics compute_fold_metrics(const ClassifierProfile& profile, Criterion criterion,
                                 std::span<const Decision> decisions);

struct EvaluationReport {
  std::string policy;
  Criterion criterion = Criterion::kTop1;
  bool has_energy = false;
  std::vector<FoldMetrics> folds;
  FoldMetrics aggregate;  // geometric mean across folds per scalar metric
  std::vector<std::string> zero_metrics;  // metrics with a zero in some fold
  std::vector<Decision> decisions;  // in fold order, then test order
};

// Trains on all folds but one, tests on the held-out fold, for every fold.
EvaluationReport evaluate(const ClassifierProfile& profile, const FoldPlan& plan, Criterion criterion,
                          const PolicyTrainer& trainer, const EvalOptions& options = {});

// One constant-choice report per candidate model, followed by the oracle.
std::vector<EvaluationReport> baseline_reports(const ClassifierProfile& profile, const FoldPlan& plan,
                                               Criterion criterion, const EvalOptions& options = {});

inline constexpr double kGeometricMeanFloor = 1e-9;

// (prod max(v, floor))^(1/n). Throws on an empty list or a negative value.
double geometric_mean(std::span<const double> values, double floor = kGeometricMeanFloor);

void write_reports_json(std::ostream& out, const ClassifierProfile& profile, std::span<const EvaluationReport> reports);
// One row per policy per fold plus a "geomean" row per policy.
void write_reports_csv(std::ostream& out, std::span<const EvaluationReport> reports);
void write_decisions_csv(std::ostream& out, const ClassifierProfile& profile, const EvaluationReport& report);

}  // namespace adsel
