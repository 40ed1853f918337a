#include "adsel/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "adsel/rng.hpp"
#include "json_io.hpp"

namespace adsel {

std::vector<std::size_t> FoldPlan::training_rows(std::size_t f) const {
  std::vector<std::size_t> rows;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) rows.insert(rows.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

FoldPlan make_folds(std::size_t corpus_size, std::size_t folds, std::uint64_t seed) {
  if (folds == 0) throw Error("fold count must be at least 1");
  if (folds > corpus_size) throw Error(fmt::format("{} folds requested for {} images", folds, corpus_size));
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(seed).split("folds");
  rng.shuffle(order);
  FoldPlan plan;
  plan.folds.resize(folds);
  for (std::size_t i = 0; i < order.size(); ++i) plan.folds[i % folds].push_back(order[i]);
  return plan;
}

namespace {

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(ModelIndex m) : model_(m) {}
  ModelLabel choose(std::size_t) const override { return model_; }

 private:
  ModelIndex model_;
};

class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(std::vector<ModelLabel> labels) : labels_(std::move(labels)) {}
  ModelLabel choose(std::size_t image) const override { return labels_.at(image); }

 private:
  std::vector<ModelLabel> labels_;
};

class PremodelPolicy final : public Policy {
 public:
  PremodelPolicy(const ClassifierProfile& profile, const FeatureTable& features, TrainedPremodel model)
      : profile_(profile), features_(features), model_(std::move(model)) {}

  ModelLabel choose(std::size_t image) const override {
    std::vector<double> q = scale(features_.row(image), model_.ranges);
    Prediction p = predict(model_.cascade, q);
    if (!p.choice) return std::nullopt;
    return profile_.model_index(*p.choice);
  }

 private:
  const ClassifierProfile& profile_;
  const FeatureTable& features_;
  TrainedPremodel model_;
};

ClassMetrics finish_class(ClassMetrics c) {
  c.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  c.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
  return c;
}

}  // namespace

std::string ConstantPolicyTrainer::name() const { return profile_.model_ids().at(model_); }

std::unique_ptr<Policy> ConstantPolicyTrainer::train(std::span<const std::size_t>) const {
  return std::make_unique<ConstantPolicy>(model_);
}

std::unique_ptr<Policy> OraclePolicyTrainer::train(std::span<const std::size_t>) const {
  return std::make_unique<OraclePolicy>(optimum_labels(profile_, criterion_));
}

TrainingMatrix build_training_matrix(const ClassifierProfile& profile, const FeatureTable& features,
                                     const ScalingRanges& ranges, const PremodelConfig& config,
                                     std::span<const std::size_t> images) {
  TrainingMatrix m;
  m.feature_names = ranges.names;
  for (std::size_t i : images) {
    ModelLabel label = optimum_label(profile, i, config.criterion, config.levels);
    std::optional<std::string> name;
    if (label) name = profile.model_ids()[*label];
    m.add_row(profile.image_ids()[i], scale(features.row(i), ranges), std::move(name));
  }
  return m;
}

TrainedPremodel train_premodel(const ClassifierProfile& profile, const FeatureTable& features,
                               const PremodelConfig& config, std::span<const std::size_t> images) {
  if (config.levels.empty()) throw Error("premodel configuration has no cascade levels");
  ScalingRanges ranges = fit_ranges(features, images);
  TrainingMatrix matrix = build_training_matrix(profile, features, ranges, config, images);
  std::vector<std::string> models;
  for (ModelIndex m : config.levels) models.push_back(profile.model_ids().at(m));
  Fallback fallback = config.fallback == Fallback::Kind::kAbstain ? Fallback::abstain() : Fallback::use(models.front());
  return {std::move(ranges), Cascade(std::move(matrix), std::move(models), config.k, std::move(fallback))};
}

PremodelTrainer::PremodelTrainer(const ClassifierProfile& profile, const FeatureTable& features, PremodelConfig config)
    : profile_(profile), features_(config.features.names()), config_(std::move(config)) {
  FeatureTable projected = features.select(config_.features);
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < profile.images(); ++i) {
    auto r = projected.row_index(profile.image_ids()[i]);
    if (!r) {
      missing.push_back(profile.image_ids()[i]);
      continue;
    }
    features_.add_row(profile.image_ids()[i], projected.row(*r));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) list += (i ? ", " : "") + missing[i];
    throw Error(fmt::format("{} profile images have no feature row: {}{}", missing.size(), list,
                            missing.size() > 10 ? ", ..." : ""));
  }
}

std::unique_ptr<Policy> PremodelTrainer::train(std::span<const std::size_t> training_images) const {
  return std::make_unique<PremodelPolicy>(profile_, features_,
                                          train_premodel(profile_, features_, config_, training_images));
}

std::span<const MetricField> metric_fields() {
  static const MetricField kFields[] = {
      {"accuracy_top1", &FoldMetrics::accuracy_top1},
      {"accuracy_top5", &FoldMetrics::accuracy_top5},
      {"precision", &FoldMetrics::precision},
      {"recall", &FoldMetrics::recall},
      {"f1", &FoldMetrics::f1},
      {"optimality", &FoldMetrics::optimality},
      {"abstention", &FoldMetrics::abstention},
      {"mean_premodel_time_s", &FoldMetrics::mean_premodel_time_s},
      {"mean_model_latency_s", &FoldMetrics::mean_model_latency_s},
      {"mean_end_to_end_s", &FoldMetrics::mean_end_to_end_s},
      {"mean_energy_j", &FoldMetrics::mean_energy_j},
  };
  return kFields;
}

FoldMetrics compute_fold_metrics(const ClassifierProfile& profile, Criterion criterion,
                                 std::span<const Decision> decisions) {
  FoldMetrics f;
  f.test_images = decisions.size();
  if (decisions.empty()) return f;
  std::vector<ClassMetrics> classes(profile.models());
  std::vector<std::uint8_t> present(profile.models(), 0);
  std::size_t top1 = 0, top5 = 0, optimal = 0, abstained = 0;
  double premodel_time = 0.0, latency = 0.0, energy = 0.0;
  for (const auto& d : decisions) {
    const ModelLabel truth = optimum_label(profile, d.image, criterion);
    premodel_time += d.premodel_time_s;
    if (d.choice) {
      const auto& rec = profile.at(d.image, *d.choice);
      top1 += rec.correct_top1;
      top5 += rec.correct_top5;
      latency += rec.latency_s;
      energy += rec.energy_j;
      optimal += is_optimal_choice(profile, d.image, *d.choice, criterion);
      present[*d.choice] = 1;
      if (truth == d.choice) ++classes[*d.choice].tp;
      else ++classes[*d.choice].fp;
    } else {
      ++abstained;
      optimal += !truth;
    }
    if (truth) {
      present[*truth] = 1;
      if (truth != d.choice) ++classes[*truth].fn;
    }
  }
  const double n = static_cast<double>(decisions.size());
  f.accuracy_top1 = static_cast<double>(top1) / n;
  f.accuracy_top5 = static_cast<double>(top5) / n;
  f.optimality = static_cast<double>(optimal) / n;
  f.abstention = static_cast<double>(abstained) / n;
  f.mean_premodel_time_s = premodel_time / n;
  f.mean_model_latency_s = latency / n;
  f.mean_end_to_end_s = (premodel_time + latency) / n;
  f.mean_energy_j = energy / n;
  double p = 0.0, r = 0.0, f1 = 0.0;
  for (ModelIndex m = 0; m < profile.models(); ++m) {
    if (!present[m]) continue;
    classes[m].model_id = profile.model_ids()[m];
    ClassMetrics c = finish_class(classes[m]);
    p += c.precision;
    r += c.recall;
    f1 += c.f1;
    f.classes.push_back(std::move(c));
  }
  if (!f.classes.empty()) {
    const double k = static_cast<double>(f.classes.size());
    f.precision = p / k;
    f.recall = r / k;
    f.f1 = f1 / k;
  }
  return f;
}

double geometric_mean(std::span<const double> values, double floor) {
  if (values.empty()) throw Error("geometric mean of an empty list");
  double log_sum = 0.0;
  for (double v : values) {
    if (v < 0.0 || std::isnan(v)) throw Error(fmt::format("geometric mean needs non-negative values, got {}", v));
    log_sum += std::log(std::max(v, floor));
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

namespace {

void aggregate_report(EvaluationReport& report) {
  FoldMetrics& agg = report.aggregate;
  agg = FoldMetrics{};
  for (const auto& f : report.folds) agg.test_images += f.test_images;
  for (const auto& field : metric_fields()) {
    if (field.member == &FoldMetrics::mean_energy_j && !report.has_energy) continue;
    std::vector<double> vals;
    for (const auto& f : report.folds) vals.push_back(f.*field.member);
    if (std::any_of(vals.begin(), vals.end(), [](double v) { return v == 0.0; })) {
      report.zero_metrics.emplace_back(field.name);
    }
    agg.*field.member = geometric_mean(vals);
  }
  // Per-class counts pooled over folds.
  std::vector<ClassMetrics> pooled;
  for (const auto& f : report.folds) {
    for (const auto& c : f.classes) {
      auto it = std::find_if(pooled.begin(), pooled.end(), [&](const ClassMetrics& p) { return p.model_id == c.model_id; });
      if (it == pooled.end()) {
        pooled.push_back({c.model_id, c.tp, c.fp, c.fn});
      } else {
        it->tp += c.tp;
        it->fp += c.fp;
        it->fn += c.fn;
      }
    }
  }
  for (auto& c : pooled) agg.classes.push_back(finish_class(c));
}

}  // namespace

EvaluationReport evaluate(const ClassifierProfile& profile, const FoldPlan& plan, Criterion criterion,
                          const PolicyTrainer& trainer, const EvalOptions& options) {
  std::size_t covered = 0;
  std::vector<std::uint8_t> seen(profile.images(), 0);
  for (const auto& fold : plan.folds) {
    for (std::size_t i : fold) {
      if (i >= profile.images()) throw Error(fmt::format("fold plan references image {} beyond profile size {}", i, profile.images()));
      if (seen[i]++) throw Error(fmt::format("fold plan lists image {} twice", i));
      ++covered;
    }
  }
  if (covered != profile.images()) {
    throw Error(fmt::format("fold plan covers {} images, profile has {}", covered, profile.images()));
  }
  const bool charge_premodel = trainer.charges_premodel_cost();

  EvaluationReport report;
  report.policy = trainer.name();
  report.criterion = criterion;
  report.has_energy = profile.has_energy();
  for (std::size_t f = 0; f < plan.size(); ++f) {
    std::vector<std::size_t> train_rows = plan.training_rows(f);
    std::unique_ptr<Policy> policy = trainer.train(train_rows);
    std::vector<Decision> decisions;
    decisions.reserve(plan.folds[f].size());
    for (std::size_t image : plan.folds[f]) {
      Decision d{image, f, std::nullopt, 0.0};
      if (charge_premodel && options.measure_time) {
        auto t0 = std::chrono::steady_clock::now();
        d.choice = policy->choose(image);
        d.premodel_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } else {
        d.choice = policy->choose(image);
        d.premodel_time_s = charge_premodel ? options.premodel_overhead_s : 0.0;
      }
      decisions.push_back(d);
    }
    report.folds.push_back(compute_fold_metrics(profile, criterion, decisions));
    report.decisions.insert(report.decisions.end(), decisions.begin(), decisions.end());
  }
  aggregate_report(report);
  return report;
}

std::vector<EvaluationReport> baseline_reports(const ClassifierProfile& profile, const FoldPlan& plan,
                                               Criterion criterion, const EvalOptions& options) {
  std::vector<EvaluationReport> out;
  for (ModelIndex m = 0; m < profile.models(); ++m) {
    out.push_back(evaluate(profile, plan, criterion, ConstantPolicyTrainer(profile, m), options));
  }
  out.push_back(evaluate(profile, plan, criterion, OraclePolicyTrainer(profile, criterion), options));
  return out;
}

void write_reports_json(std::ostream& out, const ClassifierProfile& profile, std::span<const EvaluationReport> reports) {
  nlohmann::ordered_json j;
  j["criterion"] = reports.empty() ? "top1" : std::string(to_string(reports.front().criterion));
  j["images"] = profile.images();
  j["models"] = profile.model_ids();
  j["oracle_accuracy"] = reports.empty() ? 0.0 : oracle_accuracy(profile, reports.front().criterion);
  j["geometric_mean_floor"] = kGeometricMeanFloor;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& r : reports) list.push_back(json_io::to_json(r));
  j["policies"] = std::move(list);
  out << j.dump(2) << '\n';
}

void write_reports_csv(std::ostream& out, std::span<const EvaluationReport> reports) {
  out << "policy,fold,test_images";
  for (const auto& field : metric_fields()) out << ',' << field.name;
  out << '\n';
  auto row = [&](const std::string& policy, const std::string& fold, const FoldMetrics& m) {
    out << policy << ',' << fold << ',' << m.test_images;
    for (const auto& field : metric_fields()) out << ',' << csv::format_double(m.*field.member);
    out << '\n';
  };
  for (const auto& r : reports) {
    for (std::size_t f = 0; f < r.folds.size(); ++f) row(r.policy, std::to_string(f), r.folds[f]);
    row(r.policy, "geomean", r.aggregate);
  }
}

void write_decisions_csv(std::ostream& out, const ClassifierProfile& profile, const EvaluationReport& report) {
  out << "image_id,fold,choice,premodel_time_s\n";
  for (const auto& d : report.decisions) {
    out << profile.image_ids()[d.image] << ',' << d.fold << ',' << profile.model_name(d.choice) << ','
        << csv::format_double(d.premodel_time_s) << '\n';
  }
}

}  // namespace adsel
