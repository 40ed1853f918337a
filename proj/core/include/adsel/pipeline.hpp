#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsel/artifact.hpp"
#include "adsel/eval.hpp"
#include "adsel/feature_selection.hpp"
#include "adsel/feature_table.hpp"
#include "adsel/profile.hpp"
#include "adsel/selection.hpp"

namespace adsel {

struct RunConfig {
  double theta_pct = 0.5;
  std::size_t k = 5;
  double pcc_threshold = 0.75;
  std::size_t feature_count = 7;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::kTop1;
  Fallback::Kind fallback = Fallback::Kind::kUsePrespecified;
  // When set, feature selection is skipped and this subset is used.
  std::optional<FeatureSubset> features;
  double premodel_overhead_s = 0.0;
  bool measure_time = false;
};

// Throws an Error listing ids present on one side only.
void check_id_sets(const FeatureTable& features, const ClassifierProfile& profile);

// Restricts `features` to the profile's images, in profile order.
FeatureTable align_features(const FeatureTable& features, const ClassifierProfile& profile);

// PCC pruning over every column of `features`, then greedy elimination down to
// config.feature_count scored by cross-validated label accuracy, then
// leave-one-out importance of the survivors.
FeatureSelectionReport select_features(const FeatureTable& features, const ClassifierProfile& profile,
                                       const ModelSelectionTrace& trace, const RunConfig& config);

struct ResolvedFeatures {
  std::optional<FeatureSelectionReport> report;  // absent when config.features was given
  FeatureSubset subset;
};
ResolvedFeatures resolve_features(const FeatureTable& features, const ClassifierProfile& profile,
                                  const ModelSelectionTrace& trace, const RunConfig& config);

// The fold plan evaluation uses for `config`.
FoldPlan evaluation_folds(std::size_t images, const RunConfig& config);

// Premodel over `subset` trained on the given profile rows (all rows when
// empty). `features` may list images in any order.
PremodelArtifact train_artifact(const FeatureTable& features, const ClassifierProfile& profile,
                                const ModelSelectionTrace& trace, const FeatureSubset& subset,
                                const RunConfig& config, std::span<const std::size_t> rows = {},
                                const std::map<std::string, std::string>& input_hashes = {});

struct PipelineResult {
  std::vector<ModelLabel> labels;
  ModelSelectionTrace trace;
  std::optional<FeatureSelectionReport> feature_selection;
  FeatureSubset features;
  PremodelArtifact artifact;  // trained on every image
  FoldPlan plan;
  std::vector<EvaluationReport> reports;  // premodel first, then baselines and the oracle
};

PipelineResult run_pipeline(const FeatureTable& features, const ClassifierProfile& profile, const RunConfig& config,
                            const std::map<std::string, std::string>& input_hashes = {});

// Writes every artifact plus manifest.json (SHA-256 of inputs and outputs).
// Returns the written file names.
std::vector<std::string> write_pipeline_outputs(const PipelineResult& result, const ClassifierProfile& profile,
                                                const RunConfig& config,
                                                const std::map<std::string, std::string>& input_hashes,
                                                const std::filesystem::path& outdir);

struct ManifestIssue {
  std::string file;
  std::string problem;
};

// Writes manifest.json in `dir` covering `files` (relative to dir).
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files,
                    const std::map<std::string, std::string>& inputs, const std::map<std::string, std::string>& config);

// Re-hashes every listed file. Empty result means the directory is consistent.
std::vector<ManifestIssue> verify_manifest(const std::filesystem::path& dir);

std::map<std::string, std::string> config_entries(const RunConfig& config);

}  // namespace adsel
