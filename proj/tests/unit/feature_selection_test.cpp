#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "adsel/error.hpp"
#include "adsel/feature_selection.hpp"
#include "adsel/rng.hpp"

using namespace adsel;

namespace {

// Labels follow the sign of `signal`; other columns are noise.
LabeledDataset informative_dataset(Rng& rng, std::size_t rows, const std::vector<std::string>& columns,
                                   const std::set<std::string>& copies_of_signal) {
  LabeledDataset d{FeatureTable(columns), {}, {}};
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = rng.uniform();
    std::vector<double> row;
    for (const auto& c : columns) row.push_back(c == "signal" || copies_of_signal.count(c) ? s : rng.uniform());
    d.features.add_row("r" + std::to_string(r), row);
    d.labels.push_back(s < 0.5 ? std::optional<std::string>("fast") : std::optional<std::string>("slow"));
  }
  d.levels = {"fast", "slow"};
  return d;
}

// Accuracy = sum of planted weights of the present features, distinct enough
// that the greedy order is unique.
SubsetScorer planted_scorer(const std::map<std::string, double>& weights, std::size_t* calls = nullptr) {
  return [weights, calls](const FeatureSubset& s) {
    if (calls) ++*calls;
    double acc = 0.0;
    for (const auto& n : s.names()) acc += weights.at(n);
    return acc;
  };
}

}  // namespace

TEST(CvScorer, RejectsSingleClassData) {
  LabeledDataset d{FeatureTable({"a"}), {}, {"m"}};
  for (int i = 0; i < 10; ++i) {
    d.features.add_row("r" + std::to_string(i), std::vector<double>{static_cast<double>(i)});
    d.labels.push_back("m");
  }
  EXPECT_THROW(make_cv_scorer(d, {}), Error);
}

TEST(CvScorer, InformativeFeatureScoresHighNoiseOnlyLow) {
  Rng rng(1);
  auto d = informative_dataset(rng, 300, {"noise1", "signal", "noise2"}, {});
  auto scorer = make_cv_scorer(d, {5, 10, 3});
  EXPECT_GT(scorer(FeatureSubset({"signal"})), 0.95);
  EXPECT_LT(scorer(FeatureSubset({"noise1", "noise2"})), 0.7);
  // Same subset twice: same folds, same answer.
  EXPECT_EQ(scorer(FeatureSubset({"noise1"})), scorer(FeatureSubset({"noise1"})));
}

TEST(Importance, SoleInformativeFeatureTakesAlmostAll) {
  Rng rng(2);
  auto d = informative_dataset(rng, 300, {"noise1", "signal", "noise2", "noise3"}, {});
  auto imp = feature_importance(make_cv_scorer(d, {5, 10, 4}), FeatureSubset({"noise1", "signal", "noise2", "noise3"}));
  ASSERT_EQ(imp.features.size(), 4u);
  EXPECT_EQ(imp.features[1].name, "signal");
  EXPECT_GT(imp.features[1].percent, 80.0);
  double total = 0.0;
  for (const auto& f : imp.features) total += f.percent;
  EXPECT_NEAR(total, 100.0, 1e-9);
}

TEST(Importance, DuplicatedInformativeFeaturesMaskEachOther) {
  Rng rng(3);
  auto d = informative_dataset(rng, 300, {"signal", "copy", "noise"}, {"copy"});
  auto imp = feature_importance(make_cv_scorer(d, {5, 10, 5}), FeatureSubset({"signal", "copy", "noise"}));
  EXPECT_LT(imp.features[0].raw_drop, 0.02);
  EXPECT_LT(imp.features[1].raw_drop, 0.02);
}

TEST(Importance, MatchesLeaveOneOutRecomputation) {
  std::map<std::string, double> w{{"a", 0.05}, {"b", 0.2}, {"c", 0.01}, {"d", 0.1}};
  auto scorer = planted_scorer(w);
  FeatureSubset all({"a", "b", "c", "d"});
  auto imp = feature_importance(scorer, all);
  double drops = 0.36 - 0.0;
  EXPECT_DOUBLE_EQ(imp.accuracy_all, scorer(all));
  for (const auto& f : imp.features) {
    std::vector<std::string> rest;
    for (const auto& n : all.names())
      if (n != f.name) rest.push_back(n);
    EXPECT_DOUBLE_EQ(f.accuracy_without, scorer(FeatureSubset(rest)));
    EXPECT_NEAR(f.percent, 100.0 * w[f.name] / drops, 1e-9);
  }
  // Ranked by planted weight.
  auto ranked = imp.features;
  std::sort(ranked.begin(), ranked.end(), [](auto& x, auto& y) { return x.percent > y.percent; });
  EXPECT_EQ(ranked[0].name, "b");
  EXPECT_EQ(ranked[3].name, "c");
}

TEST(Importance, NoDropGivesZeroPercentages) {
  auto imp = feature_importance([](const FeatureSubset&) { return 0.5; }, FeatureSubset({"a", "b"}));
  for (const auto& f : imp.features) EXPECT_EQ(f.percent, 0.0);
  EXPECT_THROW(feature_importance([](const FeatureSubset&) { return 0.5; }, FeatureSubset({"a"})), Error);
}

TEST(GreedyEliminate, RemovesNoiseFirst) {
  Rng rng(4);
  auto d = informative_dataset(rng, 300, {"signal", "noise"}, {});
  auto r = greedy_eliminate(make_cv_scorer(d, {5, 10, 6}), FeatureSubset({"signal", "noise"}), 1);
  ASSERT_EQ(r.removals.size(), 1u);
  EXPECT_EQ(r.removals[0].removed, "noise");
  EXPECT_EQ(r.remaining.names(), std::vector<std::string>{"signal"});
}

TEST(GreedyEliminate, EachStepIsTheBruteForceArgmax) {
  Rng rng(5);
  std::map<std::string, double> w;
  std::vector<std::string> names;
  for (int i = 0; i < 17; ++i) {
    names.push_back("f" + std::to_string(i));
    w[names.back()] = rng.uniform(0.0, 0.05);
  }
  auto scorer = planted_scorer(w);
  auto r = greedy_eliminate(scorer, FeatureSubset(names), 7);
  ASSERT_EQ(r.removals.size(), 10u);
  EXPECT_EQ(r.remaining.size(), 7u);
  std::vector<std::string> current = names;
  std::set<std::string> seen;
  for (const auto& step : r.removals) {
    double best = -1;
    std::string pick;
    for (const auto& cand : current) {
      std::vector<std::string> rest;
      for (const auto& n : current)
        if (n != cand) rest.push_back(n);
      double acc = scorer(FeatureSubset(rest));
      if (acc > best) {
        best = acc;
        pick = cand;
      }
    }
    EXPECT_EQ(step.removed, pick);
    EXPECT_DOUBLE_EQ(step.accuracy_after, best);
    EXPECT_TRUE(seen.insert(step.removed).second);
    current.erase(std::find(current.begin(), current.end(), pick));
  }
  EXPECT_EQ(r.remaining.names(), current);
}

TEST(GreedyEliminate, StopSizeEdgeCases) {
  auto s = [](const FeatureSubset&) { return 1.0; };
  EXPECT_THROW(greedy_eliminate(s, FeatureSubset({"a"}), 0), Error);
  auto r = greedy_eliminate(s, FeatureSubset({"a", "b"}), 5);
  EXPECT_TRUE(r.removals.empty());
  // Ties remove the earliest feature.
  auto t = greedy_eliminate(s, FeatureSubset({"a", "b", "c"}), 1);
  EXPECT_EQ(t.removals[0].removed, "a");
  EXPECT_EQ(t.removals[1].removed, "b");
}

TEST(FeatureSelectionReport, Serialises) {
  FeatureSelectionReport r{0.75,
                           {FeatureSubset({"a", "c"}), {{"a", "b", 0.9}}},
                           {{{"c", 0.8, 0.85}}, FeatureSubset({"a"})},
                           {0.85, {}},
                           {}};
  std::ostringstream j, c;
  write_feature_selection_json(j, r);
  write_feature_selection_csv(c, r);
  EXPECT_NE(j.str().find("\"selected\""), std::string::npos);
  EXPECT_EQ(c.str(), "feature,stage,detail,value\nb,pruned,a,0.9\nc,eliminated,step0,0.85\n");
}
