#include "adsel/feature_selection.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "adsel/eval.hpp"
#include "adsel/premodel.hpp"
#include "adsel/scaling.hpp"
#include "json_io.hpp"

namespace adsel {
namespace {

std::vector<std::string> levels_by_frequency(const std::vector<std::optional<std::string>>& labels) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> count;
  for (const auto& l : labels) {
    if (!l) continue;
    if (count[*l]++ == 0) order.push_back(*l);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return count[a] > count[b]; });
  return order;
}

double cv_accuracy(const LabeledDataset& data, const FoldPlan& plan, const CvScorerOptions& opt,
                   const FeatureSubset& subset) {
  const FeatureTable table = data.features.select(subset);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t f = 0; f < plan.size(); ++f) {
    const std::vector<std::size_t> train_rows = plan.training_rows(f);
    const ScalingRanges ranges = fit_ranges(table, train_rows);
    TrainingMatrix m;
    m.feature_names = ranges.names;
    for (std::size_t r : train_rows) m.add_row(table.image_ids()[r], scale(table.row(r), ranges), data.labels[r]);
    const std::size_t k = std::min(opt.k, m.rows());
    Cascade cascade(std::move(m), data.levels, k, Fallback::abstain());
    for (std::size_t r : plan.folds[f]) {
      Prediction p = predict(cascade, scale(table.row(r), ranges));
      correct += p.choice == data.labels[r];
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace

SubsetScorer make_cv_scorer(LabeledDataset dataset, CvScorerOptions options) {
  if (dataset.labels.size() != dataset.features.rows()) throw Error("labelled dataset: label count != row count");
  if (dataset.features.rows() < 2) throw Error("labelled dataset needs at least two rows");
  bool single_class = std::all_of(dataset.labels.begin(), dataset.labels.end(),
                                  [&](const auto& l) { return l == dataset.labels.front(); });
  if (single_class) throw Error("degenerate dataset: every row has the same label, accuracy cannot discriminate features");
  if (dataset.levels.empty()) dataset.levels = levels_by_frequency(dataset.labels);
  if (dataset.levels.empty()) throw Error("labelled dataset has no model labels");
  auto plan = std::make_shared<FoldPlan>(
      make_folds(dataset.features.rows(), std::min(options.folds, dataset.features.rows()), options.seed));
  auto data = std::make_shared<LabeledDataset>(std::move(dataset));
  return [data, plan, options](const FeatureSubset& subset) { return cv_accuracy(*data, *plan, options, subset); };
}

namespace {

FeatureSubset without(const FeatureSubset& s, std::size_t drop) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != drop) names.push_back(s.names()[i]);
  return FeatureSubset(std::move(names));
}

}  // namespace

ImportanceReport feature_importance(const SubsetScorer& scorer, const FeatureSubset& subset) {
  if (subset.size() < 2) throw Error("feature importance needs at least two features");
  ImportanceReport rep;
  rep.accuracy_all = scorer(subset);
  double total = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    FeatureImportance fi;
    fi.name = subset.names()[i];
    fi.accuracy_without = scorer(without(subset, i));
    fi.raw_drop = std::max(0.0, rep.accuracy_all - fi.accuracy_without);
    total += fi.raw_drop;
    rep.features.push_back(std::move(fi));
  }
  if (total > 0.0) {
    for (auto& fi : rep.features) fi.percent = 100.0 * fi.raw_drop / total;
  }
  return rep;
}

EliminationResult greedy_eliminate(const SubsetScorer& scorer, const FeatureSubset& start, std::size_t stop_size) {
  if (stop_size < 1) throw Error("greedy elimination must keep at least one feature");
  EliminationResult result{{}, start};
  if (result.remaining.size() <= stop_size) return result;
  double current = scorer(result.remaining);
  while (result.remaining.size() > stop_size) {
    std::size_t best = 0;
    double best_acc = -1.0;
    for (std::size_t i = 0; i < result.remaining.size(); ++i) {
      double acc = scorer(without(result.remaining, i));
      if (acc > best_acc) {
        best_acc = acc;
        best = i;
      }
    }
    result.removals.push_back({result.remaining.names()[best], current, best_acc});
    result.remaining = without(result.remaining, best);
    current = best_acc;
  }
  return result;
}

void write_feature_selection_json(std::ostream& out, const FeatureSelectionReport& r) {
  json_io::Json j;
  j["pcc_threshold"] = r.pcc_threshold;
  j["kept_after_pruning"] = r.pruned.kept.names();
  json_io::Json removed = json_io::Json::array();
  for (const auto& p : r.pruned.removed) {
    removed.push_back({{"removed", p.removed}, {"kept", p.kept}, {"abs_correlation", p.abs_correlation}});
  }
  j["pruned"] = std::move(removed);
  json_io::Json steps = json_io::Json::array();
  for (const auto& s : r.elimination.removals) {
    steps.push_back({{"removed", s.removed}, {"accuracy_before", s.accuracy_before}, {"accuracy_after", s.accuracy_after}});
  }
  j["elimination"] = std::move(steps);
  j["selected"] = r.elimination.remaining.names();
  json_io::Json imp;
  imp["accuracy_all"] = r.importance.accuracy_all;
  json_io::Json feats = json_io::Json::array();
  for (const auto& f : r.importance.features) {
    feats.push_back({{"name", f.name},
                     {"accuracy_without", f.accuracy_without},
                     {"raw_drop", f.raw_drop},
                     {"percent", f.percent}});
  }
  imp["features"] = std::move(feats);
  j["importance"] = std::move(imp);
  if (!r.note.empty()) j["note"] = r.note;
  out << j.dump(2) << '\n';
}

void write_feature_selection_csv(std::ostream& out, const FeatureSelectionReport& r) {
  out << "feature,stage,detail,value\n";
  for (const auto& p : r.pruned.removed) {
    out << p.removed << ",pruned," << p.kept << ',' << csv::format_double(p.abs_correlation) << '\n';
  }
  for (std::size_t i = 0; i < r.elimination.removals.size(); ++i) {
    const auto& s = r.elimination.removals[i];
    out << s.removed << ",eliminated,step" << i << ',' << csv::format_double(s.accuracy_after) << '\n';
  }
  for (const auto& f : r.importance.features) {
    out << f.name << ",selected,importance_pct," << csv::format_double(f.percent) << '\n';
  }
}

}  // namespace adsel
