#include "adsel/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "adsel/hash.hpp"
#include "adsel/rng.hpp"
#include "json_io.hpp"

namespace adsel {
namespace {

constexpr std::size_t kListedIds = 10;

std::string list_some(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < std::min(ids.size(), kListedIds); ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > kListedIds) out += ", ...";
  return out;
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return Rng(seed).split(stage).next_u64(); }

std::vector<ModelIndex> selected_indices(const ClassifierProfile& profile, const ModelSelectionTrace& trace) {
  std::vector<ModelIndex> out;
  for (const auto& id : trace.selected_ids()) out.push_back(*profile.model_index(id));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write to {} failed", path.string()));
}

PremodelConfig premodel_config(const ClassifierProfile& profile, const ModelSelectionTrace& trace,
                               const FeatureSubset& subset, const RunConfig& config) {
  PremodelConfig pm;
  pm.features = subset;
  pm.levels = selected_indices(profile, trace);
  pm.k = config.k;
  pm.fallback = config.fallback;
  pm.criterion = config.criterion;
  return pm;
}

}  // namespace

ResolvedFeatures resolve_features(const FeatureTable& features, const ClassifierProfile& profile,
                                  const ModelSelectionTrace& trace, const RunConfig& config) {
  if (config.features) return {std::nullopt, *config.features};
  FeatureSelectionReport report = select_features(features, profile, trace, config);
  FeatureSubset subset = report.elimination.remaining;
  return {std::move(report), std::move(subset)};
}

FoldPlan evaluation_folds(std::size_t images, const RunConfig& config) {
  return make_folds(images, config.folds, stage_seed(config.seed, "evaluation-folds"));
}

PremodelArtifact train_artifact(const FeatureTable& features, const ClassifierProfile& profile,
                                const ModelSelectionTrace& trace, const FeatureSubset& subset,
                                const RunConfig& config, std::span<const std::size_t> rows,
                                const std::map<std::string, std::string>& input_hashes) {
  const FeatureTable aligned = align_features(features, profile).select(subset);
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(profile.images());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  TrainedPremodel trained = train_premodel(profile, aligned, premodel_config(profile, trace, subset, config), rows);
  return {config.criterion, subset, std::move(trained.ranges), std::move(trained.cascade), trace, input_hashes};
}

void check_id_sets(const FeatureTable& features, const ClassifierProfile& profile) {
  std::vector<std::string> no_features;
  for (const auto& id : profile.image_ids())
    if (!features.row_index(id)) no_features.push_back(id);
  std::vector<std::string> no_profile;
  for (const auto& id : features.image_ids())
    if (!profile.image_index(id)) no_profile.push_back(id);
  if (no_features.empty() && no_profile.empty()) return;
  std::string msg = "feature and profile image ids differ";
  if (!no_features.empty()) msg += fmt::format("; {} in profile only: {}", no_features.size(), list_some(no_features));
  if (!no_profile.empty()) msg += fmt::format("; {} in features only: {}", no_profile.size(), list_some(no_profile));
  throw Error(msg);
}

FeatureTable align_features(const FeatureTable& features, const ClassifierProfile& profile) {
  std::vector<std::size_t> rows;
  rows.reserve(profile.images());
  for (const auto& id : profile.image_ids()) {
    auto r = features.row_index(id);
    if (!r) throw Error(fmt::format("image '{}' has no feature row", id));
    rows.push_back(*r);
  }
  return features.select_rows(rows);
}

FeatureSelectionReport select_features(const FeatureTable& features, const ClassifierProfile& profile,
                                       const ModelSelectionTrace& trace, const RunConfig& config) {
  const FeatureTable aligned = align_features(features, profile);
  PruneResult pruned = prune_correlated(correlation_matrix(aligned), config.pcc_threshold);
  FeatureSelectionReport report{config.pcc_threshold, pruned, {{}, pruned.kept}, {}, {}};

  const std::vector<ModelIndex> levels = selected_indices(profile, trace);
  LabeledDataset data{aligned, {}, trace.selected_ids()};
  for (const ModelLabel& l : optimum_labels(profile, config.criterion, levels)) {
    data.labels.push_back(l ? std::optional<std::string>(profile.model_ids()[*l]) : std::nullopt);
  }
  SubsetScorer scorer;
  try {
    scorer = make_cv_scorer(std::move(data), {config.k, config.folds, stage_seed(config.seed, "feature-selection")});
  } catch (const Error& e) {
    // Nothing to discriminate: keep the first survivors of pruning.
    std::vector<std::string> names = report.pruned.kept.names();
    if (names.size() > config.feature_count) names.resize(config.feature_count);
    report.elimination.remaining = FeatureSubset(std::move(names));
    report.note = fmt::format("elimination and importance skipped: {}", e.what());
    return report;
  }
  report.elimination = greedy_eliminate(scorer, report.pruned.kept, config.feature_count);
  if (report.elimination.remaining.size() >= 2) {
    report.importance = feature_importance(scorer, report.elimination.remaining);
  }
  return report;
}

PipelineResult run_pipeline(const FeatureTable& features, const ClassifierProfile& profile, const RunConfig& config,
                            const std::map<std::string, std::string>& input_hashes) {
  check_id_sets(features, profile);
  if (config.folds < 2) throw Error("cross-validation needs at least two folds");
  if (config.folds > profile.images()) {
    throw Error(fmt::format("{} folds requested for {} images", config.folds, profile.images()));
  }

  std::vector<ModelLabel> labels = optimum_labels(profile, config.criterion);
  ModelSelectionTrace trace = select_inference_models(profile, config.criterion, config.theta_pct);

  auto [fs, subset] = resolve_features(features, profile, trace, config);
  const FeatureTable aligned = align_features(features, profile).select(subset);
  const PremodelConfig pm = premodel_config(profile, trace, subset, config);
  PremodelArtifact artifact = train_artifact(features, profile, trace, subset, config, {}, input_hashes);

  FoldPlan plan = evaluation_folds(profile.images(), config);
  EvalOptions eo{config.premodel_overhead_s, config.measure_time};
  std::vector<EvaluationReport> reports;
  reports.push_back(evaluate(profile, plan, config.criterion, PremodelTrainer(profile, aligned, pm), eo));
  for (auto& r : baseline_reports(profile, plan, config.criterion, eo)) reports.push_back(std::move(r));

  return {std::move(labels), std::move(trace),  std::move(fs),     std::move(subset),
          std::move(artifact), std::move(plan), std::move(reports)};
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["theta"] = csv::format_double(c.theta_pct);
  m["k"] = std::to_string(c.k);
  m["pcc_threshold"] = csv::format_double(c.pcc_threshold);
  m["feature_count"] = std::to_string(c.feature_count);
  m["folds"] = std::to_string(c.folds);
  m["seed"] = std::to_string(c.seed);
  m["criterion"] = std::string(to_string(c.criterion));
  m["fallback"] = c.fallback == Fallback::Kind::kAbstain ? "abstain" : "prespecified";
  if (c.features) {
    std::string names;
    for (const auto& n : c.features->names()) names += (names.empty() ? "" : ",") + n;
    m["features"] = names;
  }
  m["premodel_overhead_s"] = csv::format_double(c.premodel_overhead_s);
  m["measure_time"] = c.measure_time ? "1" : "0";
  m["rng"] = std::string(Rng::kAlgorithm);
  return m;
}

std::vector<std::string> write_pipeline_outputs(const PipelineResult& result, const ClassifierProfile& profile,
                                                const RunConfig& config,
                                                const std::map<std::string, std::string>& input_hashes,
                                                const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, auto&& fill) {
    std::ostringstream s;
    fill(s);
    write_text(outdir / name, s.str());
    written.push_back(name);
  };
  emit("labels.csv", [&](std::ostream& o) { write_labels_csv(o, profile, result.labels); });
  emit("trace.json", [&](std::ostream& o) { write_trace_json(o, result.trace); });
  emit("trace.csv", [&](std::ostream& o) { write_trace_csv(o, result.trace); });
  if (result.feature_selection) {
    emit("feature_selection.json", [&](std::ostream& o) { write_feature_selection_json(o, *result.feature_selection); });
    emit("feature_selection.csv", [&](std::ostream& o) { write_feature_selection_csv(o, *result.feature_selection); });
  }
  emit("cascade.json", [&](std::ostream& o) { save_artifact(o, result.artifact); });
  emit("report.json", [&](std::ostream& o) { write_reports_json(o, profile, result.reports); });
  emit("report.csv", [&](std::ostream& o) { write_reports_csv(o, result.reports); });
  emit("decisions.csv", [&](std::ostream& o) { write_decisions_csv(o, profile, result.reports.front()); });
  write_manifest(outdir, written, input_hashes, config_entries(config));
  written.push_back("manifest.json");
  return written;
}

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files,
                    const std::map<std::string, std::string>& inputs, const std::map<std::string, std::string>& config) {
  json_io::Json j;
  j["format"] = "adsel-manifest";
  j["format_version"] = 1;
  j["inputs"] = inputs;
  j["config"] = config;
  json_io::Json outputs = json_io::Json::object();
  for (const auto& f : files) outputs[f] = sha256_file(dir / f);
  j["outputs"] = std::move(outputs);
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<ManifestIssue> verify_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  json_io::Json j;
  try {
    j = json_io::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, fmt::format("invalid manifest: {}", e.what()));
  }
  if (j.value("format", "") != "adsel-manifest") throw ParseError(path.string(), 0, "not an adsel manifest");
  std::vector<ManifestIssue> issues;
  for (const auto& [name, digest] : j.at("outputs").items()) {
    const auto file = dir / name;
    if (!std::filesystem::exists(file)) {
      issues.push_back({name, "missing"});
    } else if (sha256_file(file) != digest.get<std::string>()) {
      issues.push_back({name, "content hash differs from manifest"});
    }
  }
  if (std::filesystem::exists(dir / "cascade.json") && j.contains("inputs")) {
    PremodelArtifact a = load_artifact(dir / "cascade.json");
    for (const auto& [name, digest] : j.at("inputs").items()) {
      auto it = a.provenance.find(name);
      if (it == a.provenance.end() || it->second != digest.get<std::string>()) {
        issues.push_back({"cascade.json", fmt::format("provenance for input '{}' does not match manifest", name)});
      }
    }
  }
  return issues;
}

}  // namespace adsel
