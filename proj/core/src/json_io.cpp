#include "json_io.hpp"

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel::json_io {

Json to_json(const ModelSelectionTrace& trace) {
  Json j;
  j["criterion"] = std::string(to_string(trace.criterion));
  j["theta_pct"] = trace.theta_pct;
  j["selected"] = trace.selected_ids();
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    Json step;
    step["model_id"] = s.model_id;
    step["model_index"] = s.model;
    step["score"] = s.score;
    step["failed_before"] = s.failed_before;
    step["accuracy_before_pct"] = s.accuracy_before_pct;
    step["accuracy_after_pct"] = s.accuracy_after_pct;
    step["gain_pct"] = s.gain_pct;
    step["included"] = s.included;
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  return j;
}

ModelSelectionTrace trace_from_json(const Json& j) {
  ModelSelectionTrace t;
  t.criterion = parse_criterion(j.at("criterion").get<std::string>());
  t.theta_pct = j.at("theta_pct").get<double>();
  for (const auto& s : j.at("steps")) {
    SelectionStep step;
    step.model_id = s.at("model_id").get<std::string>();
    step.model = s.at("model_index").get<std::size_t>();
    step.score = s.at("score").get<std::size_t>();
    step.failed_before = s.at("failed_before").get<std::size_t>();
    step.accuracy_before_pct = s.at("accuracy_before_pct").get<double>();
    step.accuracy_after_pct = s.at("accuracy_after_pct").get<double>();
    step.gain_pct = s.at("gain_pct").get<double>();
    step.included = s.at("included").get<bool>();
    t.steps.push_back(std::move(step));
  }
  return t;
}

Json to_json(const ScalingRanges& r) {
  Json j;
  j["names"] = r.names;
  j["min"] = r.min;
  j["max"] = r.max;
  return j;
}

ScalingRanges ranges_from_json(const Json& j) {
  ScalingRanges r{j.at("names").get<std::vector<std::string>>(), j.at("min").get<std::vector<double>>(),
                  j.at("max").get<std::vector<double>>()};
  if (r.min.size() != r.names.size() || r.max.size() != r.names.size()) throw Error("scaling ranges are ragged");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.min[i] > r.max[i]) throw Error(fmt::format("scaling range for '{}' has min > max", r.names[i]));
  }
  return r;
}

Json to_json(const Cascade& c) {
  const TrainingMatrix& m = c.matrix();
  Json j;
  j["k"] = c.k();
  j["fallback"] = c.fallback().kind == Fallback::Kind::kAbstain ? "abstain" : "use";
  j["fallback_model"] = c.fallback().model_id;
  j["feature_names"] = m.feature_names;
  j["image_ids"] = m.image_ids;
  Json labels = Json::array();
  for (const auto& l : m.labels) labels.push_back(l ? Json(*l) : Json(nullptr));
  j["labels"] = std::move(labels);
  j["values"] = m.values;
  Json levels = Json::array();
  for (const auto& lv : c.levels()) {
    Json level;
    level["model_id"] = lv.model_id;
    level["positive"] = lv.positive;
    levels.push_back(std::move(level));
  }
  j["levels"] = std::move(levels);
  return j;
}

Cascade cascade_from_json(const Json& j) {
  TrainingMatrix m;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  m.values = j.at("values").get<std::vector<double>>();
  for (const auto& l : j.at("labels")) {
    m.labels.push_back(l.is_null() ? std::nullopt : std::optional<std::string>(l.get<std::string>()));
  }
  std::vector<std::string> models;
  std::vector<std::vector<std::uint8_t>> stored;
  for (const auto& lv : j.at("levels")) {
    models.push_back(lv.at("model_id").get<std::string>());
    stored.push_back(lv.at("positive").get<std::vector<std::uint8_t>>());
  }
  const std::string kind = j.at("fallback").get<std::string>();
  Fallback fb;
  if (kind == "abstain") fb = Fallback::abstain();
  else if (kind == "use") fb = Fallback::use(j.at("fallback_model").get<std::string>());
  else throw Error(fmt::format("unknown fallback policy '{}'", kind));
  Cascade c(std::move(m), std::move(models), j.at("k").get<std::size_t>(), std::move(fb));
  for (std::size_t i = 0; i < stored.size(); ++i) {
    if (stored[i] != c.levels()[i].positive) {
      throw Error(fmt::format("stored labels of level {} disagree with the training labels", i));
    }
  }
  return c;
}

Json to_json(const FoldMetrics& m, bool has_energy) {
  Json j;
  j["test_images"] = m.test_images;
  for (const auto& field : metric_fields()) {
    if (field.member == &FoldMetrics::mean_energy_j && !has_energy) continue;
    j[std::string(field.name)] = m.*field.member;
  }
  Json classes = Json::array();
  for (const auto& c : m.classes) {
    Json cj;
    cj["model_id"] = c.model_id;
    cj["tp"] = c.tp;
    cj["fp"] = c.fp;
    cj["fn"] = c.fn;
    cj["precision"] = c.precision;
    cj["recall"] = c.recall;
    cj["f1"] = c.f1;
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  return j;
}

Json to_json(const EvaluationReport& r) {
  Json j;
  j["policy"] = r.policy;
  j["criterion"] = std::string(to_string(r.criterion));
  j["aggregate"] = to_json(r.aggregate, r.has_energy);
  j["zero_metrics"] = r.zero_metrics;
  Json folds = Json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f, r.has_energy));
  j["folds"] = std::move(folds);
  return j;
}

}  // namespace adsel::json_io
