#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "adsel/error.hpp"
#include "adsel/profile.hpp"
#include "adsel/selection.hpp"
#include "adsel/synth.hpp"
#include "test_support.hpp"

using namespace adsel;

namespace {

SynthSpec load_spec(const std::string& name) {
  std::ifstream in(adsel::testing::spec_path(name));
  return parse_synth_spec(in, name);
}

SynthSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_synth_spec(in);
}

}  // namespace

TEST(Apportion, ExactTotalsAndLargestRemainder) {
  EXPECT_EQ(apportion({0.5, 0.5}, 3), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(apportion({0.7075, 0.1284, 0.0255, 0.003, 0.1356}, 10000),
            (std::vector<std::size_t>{7075, 1284, 255, 30, 1356}));
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(5);
    double sum = 0;
    for (auto& x : s) sum += (x = rng.uniform());
    for (auto& x : s) x /= sum;
    std::size_t n = 1 + rng.below(1000);
    auto c = apportion(s, n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += c[i];
      EXPECT_LE(std::abs(static_cast<double>(c[i]) - s[i] * static_cast<double>(n)), 1.0);
    }
    EXPECT_EQ(total, n);
  }
}

TEST(Synth, WalkthroughStrataAreExact) {
  auto spec = load_spec("walkthrough.json");
  auto b = generate_synthetic(spec, 3);
  ASSERT_EQ(b.profile.images(), 10000u);
  std::map<std::size_t, std::size_t> counts;
  for (auto s : b.stratum) ++counts[s];
  EXPECT_EQ(counts[0], 7075u);
  EXPECT_EQ(counts[1], 1284u);
  EXPECT_EQ(counts[2], 255u);
  EXPECT_EQ(counts[3], 30u);
  EXPECT_EQ(counts[4], 1356u);

  auto labels = optimum_labels(b.profile, Criterion::kTop1);
  std::map<std::string, std::size_t> optimal;
  for (const auto& l : labels) optimal[l ? b.profile.model_ids()[*l] : "none"]++;
  EXPECT_EQ(optimal["mobilenet_v1_100"], 7075u);
  EXPECT_EQ(optimal["none"], 1356u);
}

TEST(Synth, WalkthroughSelectionTrace) {
  auto b = generate_synthetic(load_spec("walkthrough.json"), 0);
  auto trace = select_inference_models(b.profile, Criterion::kTop1, 0.5);
  EXPECT_EQ(trace.selected_ids(),
            (std::vector<std::string>{"mobilenet_v1_100", "inception_v4", "resnet_v1_152"}));
  ASSERT_EQ(trace.steps.size(), 4u);
  EXPECT_DOUBLE_EQ(trace.steps[0].accuracy_after_pct, 70.75);
  EXPECT_DOUBLE_EQ(trace.steps[1].gain_pct, 12.84);
  EXPECT_DOUBLE_EQ(trace.steps[2].gain_pct, 2.55);
  EXPECT_DOUBLE_EQ(trace.steps[3].gain_pct, 0.3);
  EXPECT_FALSE(trace.steps[3].included);
  // Share of the images the first model fails that the second model fixes.
  EXPECT_NEAR(100.0 * trace.steps[1].score / trace.steps[1].failed_before, 43.90, 0.005);
}

TEST(Synth, EmittedProfileMatchesStratumRatesOnRescan) {
  auto spec = load_spec("walkthrough.json");
  auto b = generate_synthetic(spec, 9);
  std::ostringstream csv;
  write_profile(csv, b.profile);
  std::istringstream back(csv.str());
  auto p = load_profile(back);
  auto strata = effective_strata(spec);
  std::vector<std::size_t> size(strata.size(), 0);
  std::vector<std::map<std::string, std::size_t>> hits(strata.size());
  for (std::size_t i = 0; i < p.images(); ++i) {
    const auto s = b.stratum[i];
    ++size[s];
    for (ModelIndex m = 0; m < p.models(); ++m) {
      const auto& r = p.at(i, m);
      EXPECT_TRUE(!r.correct_top1 || r.correct_top5);
      if (r.correct_top1) ++hits[s][p.model_ids()[m]];
      const double base = spec.models[m].latency_s;
      EXPECT_GE(r.latency_s, base * (1 - spec.models[m].latency_jitter) - 1e-12);
      EXPECT_LE(r.latency_s, base * (1 + spec.models[m].latency_jitter) + 1e-12);
    }
  }
  for (std::size_t s = 0; s < strata.size(); ++s) {
    for (const auto& m : spec.models) {
      auto it = strata[s].top1.find(m.id);
      double rate = it == strata[s].top1.end() ? 0.0 : it->second;
      EXPECT_EQ(hits[s][m.id], static_cast<std::size_t>(std::llround(rate * size[s]))) << strata[s].name << " " << m.id;
    }
  }
}

TEST(Synth, OptimalShareModeWithinHalfPoint) {
  auto spec = parse(R"({"images": 10000, "models": [
    {"id": "a", "latency_s": 0.03, "optimal_share": 0.7075},
    {"id": "b", "latency_s": 0.3, "optimal_share": 0.1284},
    {"id": "c", "latency_s": 0.4, "optimal_share": 0.0255}]})");
  auto b = generate_synthetic(spec, 4);
  auto labels = optimum_labels(b.profile, Criterion::kTop1);
  std::vector<double> share(3, 0.0);
  for (const auto& l : labels)
    if (l) share[*l] += 1.0 / 10000.0;
  EXPECT_NEAR(share[0], 0.7075, 0.005);
  EXPECT_NEAR(share[1], 0.1284, 0.005);
  EXPECT_NEAR(share[2], 0.0255, 0.005);
}

TEST(Synth, DeterministicPerSeed) {
  auto spec = load_spec("small.json");
  auto a = generate_synthetic(spec, 5);
  auto b = generate_synthetic(spec, 5);
  auto c = generate_synthetic(spec, 6);
  std::ostringstream pa, pb, pc;
  write_profile(pa, a.profile);
  write_profile(pb, b.profile);
  write_profile(pc, c.profile);
  EXPECT_EQ(pa.str(), pb.str());
  EXPECT_NE(pa.str(), pc.str());
  EXPECT_TRUE(a.features == b.features);
  EXPECT_EQ(a.features.cols(), kCandidateFeatureCount);
}

TEST(Synth, IdenticalModelsGiveSymmetricProfiles) {
  auto spec = parse(R"({"images": 400, "strata": [
    {"name": "s", "share": 1.0, "top1": {"a": 0.4, "b": 0.4}}],
    "models": [{"id": "a", "latency_s": 0.1}, {"id": "b", "latency_s": 0.1}]})");
  auto b = generate_synthetic(spec, 1);
  EXPECT_EQ(model_accuracy(b.profile, 0, Criterion::kTop1), model_accuracy(b.profile, 1, Criterion::kTop1));
  EXPECT_EQ(model_accuracy(b.profile, 0, Criterion::kTop1), 0.4);
  for (std::size_t i = 0; i < b.profile.images(); ++i)
    EXPECT_EQ(b.profile.at(i, 0).latency_s, b.profile.at(i, 1).latency_s);
}

TEST(Synth, RejectsInfeasibleSpecs) {
  auto throws_with = [](const std::string& text, const std::string& needle) {
    try {
      parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1, "optimal_share": 0.7},
      {"id": "b", "latency_s": 0.2, "optimal_share": 0.4}]})",
              "110.0000% (> 100%)");
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1}],
      "strata": [{"share": 0.5, "top1": {"a": 0.6}, "top5": {"a": 0.5}}]})",
              "top5 < top1");
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1}],
      "strata": [{"share": 0.5, "top1": {"zz": 0.6}}]})",
              "unknown model 'zz'");
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1, "latency_jitter": 0.5, "optimal_share": 0.3},
      {"id": "b", "latency_s": 0.12, "optimal_share": 0.3}]})",
              "overlap");
  throws_with(R"({"images": 0, "models": [{"id": "a", "latency_s": 0.1}]})", "images");
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1}, {"id": "a", "latency_s": 0.2}]})",
              "duplicate");
  throws_with(R"({"images": 10, "models": [{"id": "a", "latency_s": 0.1}],
      "strata": [{"share": 0.5, "top1": {"a": 1.5}}]})",
              "outside [0, 1]");
  throws_with("{not json", "invalid JSON");
  throws_with(R"({"models": []})", "malformed");
}

TEST(Synth, RemainderStratumFailsEverywhere) {
  auto spec = load_spec("small.json");
  auto strata = effective_strata(spec);
  ASSERT_EQ(strata.size(), 4u);
  EXPECT_NEAR(strata.back().share, 0.1, 1e-12);
  auto b = generate_synthetic(spec, 2);
  for (std::size_t i = 0; i < b.profile.images(); ++i) {
    if (b.stratum[i] != 3) continue;
    for (ModelIndex m = 0; m < b.profile.models(); ++m) EXPECT_FALSE(b.profile.at(i, m).correct_top1);
  }
}
