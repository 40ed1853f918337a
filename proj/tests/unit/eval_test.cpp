#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "adsel/error.hpp"
#include "adsel/eval.hpp"
#include "adsel/synth.hpp"
#include "test_support.hpp"

using namespace adsel;
using adsel::testing::naive_metrics;
using adsel::testing::random_profile;

namespace {

// Features that carry the optimum label (plus noise) for a profile.
FeatureTable label_features(Rng& rng, const ClassifierProfile& p, Criterion c, double noise) {
  FeatureTable t({"n_keypoints", "avg_perceived_brightness", "contrast"});
  auto labels = optimum_labels(p, c);
  for (std::size_t i = 0; i < p.images(); ++i) {
    double l = labels[i] ? static_cast<double>(*labels[i]) : -1.0;
    t.add_row(p.image_ids()[i], std::vector<double>{l + noise * rng.normal(), rng.uniform(), l * 2 + noise * rng.normal()});
  }
  return t;
}

void expect_metrics_near(const FoldMetrics& a, const FoldMetrics& b, double tol) {
  EXPECT_EQ(a.test_images, b.test_images);
  for (const auto& f : metric_fields()) EXPECT_NEAR(a.*f.member, b.*f.member, tol) << f.name;
  ASSERT_EQ(a.classes.size(), b.classes.size());
  for (std::size_t i = 0; i < a.classes.size(); ++i) {
    EXPECT_EQ(a.classes[i].model_id, b.classes[i].model_id);
    EXPECT_EQ(a.classes[i].tp, b.classes[i].tp);
    EXPECT_EQ(a.classes[i].fp, b.classes[i].fp);
    EXPECT_EQ(a.classes[i].fn, b.classes[i].fn);
    EXPECT_NEAR(a.classes[i].f1, b.classes[i].f1, tol);
  }
}

}  // namespace

TEST(Folds, SingletonFolds) {
  auto plan = make_folds(10, 10, 1);
  ASSERT_EQ(plan.size(), 10u);
  std::set<std::size_t> all;
  for (const auto& f : plan.folds) {
    ASSERT_EQ(f.size(), 1u);
    all.insert(f[0]);
  }
  EXPECT_EQ(all.size(), 10u);
}

TEST(Folds, FiftyThousandIntoTen) {
  auto plan = make_folds(50000, 10, 2);
  for (const auto& f : plan.folds) EXPECT_EQ(f.size(), 5000u);
}

TEST(Folds, DisjointCoveringBalancedAndSeeded) {
  for (std::size_t n : {11u, 97u, 1000u}) {
    auto plan = make_folds(n, 10, 3);
    std::vector<int> hits(n, 0);
    std::size_t lo = n, hi = 0;
    for (const auto& f : plan.folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (auto i : f) ++hits[i];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(make_folds(n, 10, 3).folds, plan.folds);
    EXPECT_NE(make_folds(n, 10, 4).folds, plan.folds);
    auto train = plan.training_rows(0);
    EXPECT_EQ(train.size() + plan.folds[0].size(), n);
  }
}

TEST(Folds, Errors) {
  EXPECT_THROW(make_folds(5, 6, 0), Error);
  EXPECT_THROW(make_folds(5, 0, 0), Error);
}

TEST(GeometricMean, Basics) {
  EXPECT_NEAR(geometric_mean(std::vector<double>{4, 9}), 6.0, 1e-12);
  EXPECT_NEAR(geometric_mean(std::vector<double>{0.37, 0.37, 0.37}), 0.37, 1e-15);
  EXPECT_THROW(geometric_mean(std::vector<double>{}), Error);
  EXPECT_THROW(geometric_mean(std::vector<double>{1, -1}), Error);
  EXPECT_NEAR(geometric_mean(std::vector<double>{0, 1}), std::sqrt(1e-9), 1e-15);
}

TEST(GeometricMean, MatchesLogSumOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(10);
    long double logs = 0;
    for (auto& x : v) {
      x = rng.uniform(0.01, 2.0);
      logs += std::log(static_cast<long double>(x));
    }
    EXPECT_NEAR(geometric_mean(v), static_cast<double>(std::exp(logs / 10)), 1e-12);
  }
}

TEST(Evaluate, ConstantPolicyEqualsModelAccuracy) {
  Rng rng(1);
  auto p = random_profile(rng, 400, 3);
  auto plan = make_folds(p.images(), 10, 5);
  for (ModelIndex m = 0; m < p.models(); ++m) {
    auto r = evaluate(p, plan, Criterion::kTop1, ConstantPolicyTrainer(p, m));
    std::size_t hits = 0;
    for (const auto& d : r.decisions) hits += p.at(d.image, m).correct_top1;
    EXPECT_EQ(static_cast<double>(hits) / 400.0, model_accuracy(p, m, Criterion::kTop1));
    for (std::size_t f = 0; f < plan.size(); ++f) {
      auto sub = p.subset(plan.folds[f]);
      EXPECT_DOUBLE_EQ(r.folds[f].accuracy_top1, model_accuracy(sub, m, Criterion::kTop1));
    }
    EXPECT_EQ(r.policy, p.model_ids()[m]);
  }
}

TEST(Evaluate, OraclePolicyReachesOracleAccuracyPerFold) {
  Rng rng(2);
  auto p = random_profile(rng, 300, 4);
  auto plan = make_folds(p.images(), 10, 6);
  auto r = evaluate(p, plan, Criterion::kTop5, OraclePolicyTrainer(p, Criterion::kTop5));
  for (std::size_t f = 0; f < plan.size(); ++f) {
    EXPECT_DOUBLE_EQ(r.folds[f].accuracy_top5, oracle_accuracy(p.subset(plan.folds[f]), Criterion::kTop5));
    EXPECT_EQ(r.folds[f].optimality, 1.0);
  }
}

TEST(Evaluate, ReportMatchesNaiveRecomputation) {
  Rng rng(3);
  auto p = random_profile(rng, 500, 4, 0.1, 0.7, true);
  auto feats = label_features(rng, p, Criterion::kTop1, 0.8);
  PremodelConfig cfg;
  cfg.features = FeatureSubset(feats.columns());
  cfg.levels = {0, 2, 1};
  auto plan = make_folds(p.images(), 10, 7);
  auto r = evaluate(p, plan, Criterion::kTop1, PremodelTrainer(p, feats, cfg), {0.002, false});
  std::size_t total = 0;
  for (std::size_t f = 0; f < plan.size(); ++f) {
    std::vector<Decision> ds;
    for (const auto& d : r.decisions)
      if (d.fold == f) ds.push_back(d);
    total += ds.size();
    expect_metrics_near(r.folds[f], naive_metrics(p, Criterion::kTop1, ds), 1e-9);
  }
  EXPECT_EQ(total, p.images());
  for (const auto& field : metric_fields()) {
    double prod = 1.0;
    for (const auto& f : r.folds) prod *= std::max(f.*field.member, 1e-9);
    EXPECT_NEAR(r.aggregate.*field.member, std::pow(prod, 1.0 / 10.0), 1e-9) << field.name;
  }
}

TEST(Evaluate, AbstentionAccounting) {
  std::vector<ProfileRecord> recs{{true, true, 0.1, 0}, {false, false, 0.2, 0}, {false, false, 0.1, 0},
                                  {false, false, 0.2, 0}};
  ClassifierProfile p({"solved", "unsolved"}, {"a", "b"}, recs, false);
  std::vector<Decision> ds{{0, 0, std::nullopt, 0.0}, {1, 0, std::nullopt, 0.0}};
  auto m = compute_fold_metrics(p, Criterion::kTop1, ds);
  EXPECT_EQ(m.accuracy_top1, 0.0);
  EXPECT_EQ(m.abstention, 1.0);
  EXPECT_EQ(m.optimality, 0.5);  // abstaining on the unsolved image is the right call
  ASSERT_EQ(m.classes.size(), 1u);
  EXPECT_EQ(m.classes[0].fn, 1u);
  EXPECT_EQ(m.classes[0].fp, 0u);
  EXPECT_EQ(m.mean_end_to_end_s, 0.0);
}

TEST(Evaluate, F1ClosedFormAndMacroBounds) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_profile(rng, 120, 4);
    std::vector<Decision> ds;
    for (std::size_t i = 0; i < p.images(); ++i) {
      std::size_t pick = rng.below(5);
      ds.push_back({i, 0, pick < 4 ? ModelLabel(pick) : std::nullopt, 0.0});
    }
    auto m = compute_fold_metrics(p, Criterion::kTop1, ds);
    double lo = 1.0, hi = 0.0;
    for (const auto& c : m.classes) {
      double P = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
      double R = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      if (c.tp + c.fp == 0) P = 0;
      if (c.tp + c.fn == 0) R = 0;
      double F = P + R > 0 ? 2 * (R * P) / (R + P) : 0;
      EXPECT_NEAR(c.f1, F, 1e-12);
      lo = std::min(lo, c.f1);
      hi = std::max(hi, c.f1);
    }
    EXPECT_GE(m.f1, lo - 1e-12);
    EXPECT_LE(m.f1, hi + 1e-12);
  }
}

TEST(Evaluate, PremodelNeverBeatsOracleAndIsReproducible) {
  Rng rng(5);
  auto p = random_profile(rng, 300, 3);
  auto feats = label_features(rng, p, Criterion::kTop1, 0.3);
  PremodelConfig cfg;
  cfg.features = FeatureSubset(feats.columns());
  cfg.levels = {0, 1, 2};
  auto plan = make_folds(p.images(), 5, 1);
  PremodelTrainer trainer(p, feats, cfg);
  auto a = evaluate(p, plan, Criterion::kTop1, trainer);
  auto b = evaluate(p, plan, Criterion::kTop1, trainer);
  std::ostringstream ja, jb;
  std::vector<EvaluationReport> ra{a}, rb{b};
  write_reports_json(ja, p, ra);
  write_reports_json(jb, p, rb);
  EXPECT_EQ(ja.str(), jb.str());
  std::size_t hits = 0;
  for (const auto& d : a.decisions) hits += d.choice && p.at(d.image, *d.choice).correct_top1;
  EXPECT_LE(static_cast<double>(hits) / 300.0, oracle_accuracy(p, Criterion::kTop1));
}

TEST(Evaluate, ZeroFoldMetricsAreListed) {
  std::vector<ProfileRecord> recs;
  for (int i = 0; i < 4; ++i) recs.push_back({i == 0, i == 0, 0.1, 0.0});
  ClassifierProfile p({"a", "b", "c", "d"}, {"m"}, recs, false);
  auto r = evaluate(p, make_folds(4, 2, 0), Criterion::kTop1, ConstantPolicyTrainer(p, 0));
  EXPECT_NE(std::find(r.zero_metrics.begin(), r.zero_metrics.end(), "accuracy_top1"), r.zero_metrics.end());
  EXPECT_EQ(std::find(r.zero_metrics.begin(), r.zero_metrics.end(), "mean_energy_j"), r.zero_metrics.end());
}

TEST(Evaluate, PlanMustMatchProfile) {
  Rng rng(6);
  auto p = random_profile(rng, 20, 2);
  FoldPlan short_plan{{{0, 1, 2}, {3, 4}}};
  EXPECT_THROW(evaluate(p, short_plan, Criterion::kTop1, ConstantPolicyTrainer(p, 0)), Error);
  FoldPlan dup = make_folds(20, 2, 0);
  dup.folds[1].push_back(dup.folds[0][0]);
  EXPECT_THROW(evaluate(p, dup, Criterion::kTop1, ConstantPolicyTrainer(p, 0)), Error);
  FoldPlan beyond = make_folds(20, 2, 0);
  beyond.folds[0].push_back(25);
  EXPECT_THROW(evaluate(p, beyond, Criterion::kTop1, ConstantPolicyTrainer(p, 0)), Error);
}

TEST(Evaluate, PremodelTrainerReportsMissingFeatureRows) {
  Rng rng(7);
  auto p = random_profile(rng, 20, 2);
  FeatureTable t({"x"});
  t.add_row("i0", std::vector<double>{1.0});
  PremodelConfig cfg;
  cfg.features = FeatureSubset({"x"});
  cfg.levels = {0};
  EXPECT_THROW(PremodelTrainer(p, t, cfg), Error);
}

TEST(Baselines, OnePerModelPlusOracle) {
  Rng rng(8);
  auto p = random_profile(rng, 100, 3);
  auto reports = baseline_reports(p, make_folds(100, 10, 0), Criterion::kTop1);
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(reports.back().policy, "oracle");
  std::ostringstream csv;
  write_reports_csv(csv, reports);
  std::string text = csv.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + 4 * 11u);
  EXPECT_NE(text.find("oracle,geomean,"), std::string::npos);
}

TEST(Baselines, WalkthroughPremodelBeatsBestSingleModel) {
  std::ifstream in(adsel::testing::spec_path("walkthrough.json"));
  auto spec = parse_synth_spec(in);
  spec.images = 3000;
  auto b = generate_synthetic(spec, 11);
  auto plan = make_folds(b.profile.images(), 10, 3);
  PremodelConfig cfg;
  cfg.levels = {0, 3, 4};
  auto pre = evaluate(b.profile, plan, Criterion::kTop1, PremodelTrainer(b.profile, b.features, cfg));
  auto base = baseline_reports(b.profile, plan, Criterion::kTop1);
  double best = 0.0;
  for (std::size_t m = 0; m + 1 < base.size(); ++m) best = std::max(best, base[m].aggregate.accuracy_top1);
  EXPECT_GT(pre.aggregate.accuracy_top1, best);
  EXPECT_LE(pre.aggregate.accuracy_top1, base.back().aggregate.accuracy_top1);
}
