#include "adsel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "adsel/error.hpp"
#include "adsel/features.hpp"
#include "adsel/rng.hpp"

namespace adsel {
namespace {

constexpr double kShareSlack = 1e-9;

double rate_or_zero(const std::map<std::string, double>& m, const std::string& id) {
  auto it = m.find(id);
  return it == m.end() ? 0.0 : it->second;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Maps a latent point to the 29 candidate features. Each of the seven default
// features is driven by its own latent coordinate; the brightness, edge-length
// and hue groups carry correlated companions; the remaining features are noise.
CandidateFeatureVector features_from_latent(const std::array<double, kSynthLatentDims>& z, Rng& rng) {
  CandidateFeatureVector v;
  auto noise = [&](double sd) { return rng.normal(0.0, sd); };

  v[Feature::kKeypoints] = std::max(0.0, std::round(220.0 + 120.0 * z[0]));

  const double perceived = std::clamp(125.0 + 35.0 * z[1], 1.0, 254.0);
  v[Feature::kAvgPerceivedBrightness] = perceived;
  v[Feature::kAvgBrightness] = std::clamp(0.92 * perceived + noise(6.0), 0.0, 255.0);
  v[Feature::kBrightnessRms] = std::clamp(1.05 * perceived + noise(9.0), 0.0, 255.0);
  v[Feature::kPerceivedBrightnessRms] = std::clamp(1.08 * perceived + noise(3.0), 0.0, 255.0);

  v[Feature::kContrast] = std::clamp(55.0 + 18.0 * z[2], 0.0, 127.5);

  const auto len0 = static_cast<std::size_t>(Feature::kEdgeLength1);
  const double e1 = 0.05 + 0.6 * sigmoid(z[3]);
  v.values[len0] = e1;
  double tail = 0.0;
  for (std::size_t b = 3; b < kHistogramBins; ++b) {
    double x = std::max(0.0, e1 * (0.05 + 0.01 * static_cast<double>(b)) * (1.0 + noise(0.12)));
    v.values[len0 + b] = x;
    tail += x;
  }
  const double rest = std::max(0.0, 1.0 - e1 - tail);
  const double split = rng.uniform();
  v.values[len0 + 1] = rest * split;
  v.values[len0 + 2] = rest * (1.0 - split);

  const auto ang0 = static_cast<std::size_t>(Feature::kEdgeAngle1);
  double ang_total = 0.0;
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    double x = rng.uniform(0.2, 1.0);
    v.values[ang0 + b] = x;
    ang_total += x;
  }
  for (std::size_t b = 0; b < kHistogramBins; ++b) v.values[ang0 + b] /= ang_total;

  v[Feature::kAreaByPerimeter] = 1.0 + 3.0 * sigmoid(z[4]);
  v[Feature::kAspectRatio] = std::exp(0.35 * z[5]);

  const auto hue0 = static_cast<std::size_t>(Feature::kHue1);
  const double h1 = 0.02 + 0.2 * sigmoid(z[6]);
  v.values[hue0] = h1;
  double hue_sum = h1;
  for (std::size_t b = 1; b < kHistogramBins - 1; ++b) {
    double x = std::max(0.0, h1 * (0.6 + 0.1 * static_cast<double>(b)) * (1.0 + noise(0.02)));
    v.values[hue0 + b] = x;
    hue_sum += x;
  }
  v.values[hue0 + kHistogramBins - 1] = std::max(0.0, 1.0 - hue_sum) * rng.uniform();
  return v;
}

}  // namespace

std::vector<std::size_t> apportion(const std::vector<double>& shares, std::size_t total) {
  std::vector<std::size_t> counts(shares.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    // Round before flooring so that shares like 0.7075 * 10000 land exactly.
    double exact = shares[i] * static_cast<double>(total);
    double fl = std::floor(exact + 1e-9);
    counts[i] = static_cast<std::size_t>(fl);
    assigned += counts[i];
    remainders.emplace_back(exact - fl, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < total && j < remainders.size(); ++j, ++assigned) ++counts[remainders[j].second];
  return counts;
}

void validate_synth_spec(const SynthSpec& spec) {
  if (spec.images == 0) throw Error("synthetic spec: images must be positive");
  if (spec.models.empty()) throw Error("synthetic spec: no models");
  std::map<std::string, std::size_t> ids;
  for (const auto& m : spec.models) {
    if (m.id.empty()) throw Error("synthetic spec: model without id");
    if (!ids.emplace(m.id, ids.size()).second) throw Error(fmt::format("synthetic spec: duplicate model '{}'", m.id));
    if (!(m.latency_s > 0.0)) throw Error(fmt::format("synthetic spec: model '{}' needs positive latency", m.id));
    if (m.latency_jitter < 0.0 || m.latency_jitter >= 1.0) {
      throw Error(fmt::format("synthetic spec: model '{}' jitter must be in [0, 1)", m.id));
    }
    if (m.energy_j < 0.0) throw Error(fmt::format("synthetic spec: model '{}' has negative energy", m.id));
    if (m.optimal_share && (*m.optimal_share < 0.0 || *m.optimal_share > 1.0)) {
      throw Error(fmt::format("synthetic spec: optimal share of '{}' outside [0, 1]", m.id));
    }
  }
  auto check_rate = [&](const std::string& where, const std::string& model, double r) {
    if (!ids.count(model)) throw Error(fmt::format("synthetic spec: {} names unknown model '{}'", where, model));
    if (r < 0.0 || r > 1.0) throw Error(fmt::format("synthetic spec: {} rate for '{}' outside [0, 1]", where, model));
  };
  if (spec.top5_bonus < 0.0 || spec.top5_bonus > 1.0) throw Error("synthetic spec: top5_bonus outside [0, 1]");
  if (spec.slower_accuracy < 0.0 || spec.slower_accuracy > 1.0) {
    throw Error("synthetic spec: slower_accuracy outside [0, 1]");
  }
  if (spec.feature_noise < 0.0) throw Error("synthetic spec: feature_noise must be non-negative");

  double total = 0.0;
  if (!spec.strata.empty()) {
    for (const auto& s : spec.strata) {
      if (s.share < 0.0) throw Error(fmt::format("synthetic spec: stratum '{}' has negative share", s.name));
      total += s.share;
      for (const auto& [m, r] : s.top1) check_rate("stratum '" + s.name + "' top1", m, r);
      for (const auto& [m, r] : s.top5) {
        check_rate("stratum '" + s.name + "' top5", m, r);
        if (r + 1e-12 < rate_or_zero(s.top1, m)) {
          throw Error(fmt::format("synthetic spec: stratum '{}' has top5 < top1 for '{}'", s.name, m));
        }
      }
      if (s.center && s.center->size() != kSynthLatentDims) {
        throw Error(fmt::format("synthetic spec: stratum '{}' centre needs {} values", s.name, kSynthLatentDims));
      }
    }
  } else {
    for (std::size_t i = 0; i < spec.models.size(); ++i) {
      total += spec.models[i].optimal_share.value_or(0.0);
      if (i == 0) continue;
      const auto& a = spec.models[i - 1];
      const auto& b = spec.models[i];
      if (a.latency_s * (1.0 + a.latency_jitter) >= b.latency_s * (1.0 - b.latency_jitter)) {
        throw Error(fmt::format(
            "synthetic spec: latency ranges of '{}' and '{}' overlap; optimal shares need models in strictly "
            "increasing latency order",
            a.id, b.id));
      }
    }
  }
  if (total > 1.0 + kShareSlack) {
    throw Error(fmt::format("synthetic spec: shares sum to {:.4f}% (> 100%)", 100.0 * total));
  }
}

std::vector<SynthStratum> effective_strata(const SynthSpec& spec) {
  std::vector<SynthStratum> strata = spec.strata;
  if (strata.empty()) {
    for (std::size_t i = 0; i < spec.models.size(); ++i) {
      SynthStratum s;
      s.name = "optimal:" + spec.models[i].id;
      s.share = spec.models[i].optimal_share.value_or(0.0);
      s.top1[spec.models[i].id] = 1.0;
      for (std::size_t j = i + 1; j < spec.models.size(); ++j) s.top1[spec.models[j].id] = spec.slower_accuracy;
      strata.push_back(std::move(s));
    }
  }
  double total = 0.0;
  for (const auto& s : strata) total += s.share;
  if (total < 1.0 - kShareSlack) strata.push_back(SynthStratum{"unsolved", 1.0 - total, {}, {}, std::nullopt});
  return strata;
}

SynthBundle generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  validate_synth_spec(spec);
  const Rng root(seed);
  const std::vector<SynthStratum> strata = effective_strata(spec);
  const std::size_t n = spec.images;
  const std::size_t m = spec.models.size();

  std::vector<double> shares;
  for (const auto& s : strata) shares.push_back(s.share);
  const std::vector<std::size_t> counts = apportion(shares, n);

  // Image -> stratum, as a seeded permutation of the stratum blocks.
  std::vector<std::size_t> stratum_of(n);
  {
    std::size_t pos = 0;
    for (std::size_t s = 0; s < strata.size(); ++s)
      for (std::size_t c = 0; c < counts[s]; ++c) stratum_of[pos++] = s;
    Rng rng = root.split("assign");
    rng.shuffle(stratum_of);
  }
  std::vector<std::vector<std::size_t>> members(strata.size());
  for (std::size_t i = 0; i < n; ++i) members[stratum_of[i]].push_back(i);

  std::vector<ProfileRecord> records(n * m);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& st = strata[s];
    for (std::size_t j = 0; j < m; ++j) {
      const std::string& id = spec.models[j].id;
      const double p1 = rate_or_zero(st.top1, id);
      auto it5 = st.top5.find(id);
      const double p5 = it5 != st.top5.end() ? it5->second : p1 + spec.top5_bonus * (1.0 - p1);
      const std::size_t size = members[s].size();
      const auto hits1 = static_cast<std::size_t>(std::llround(p1 * static_cast<double>(size)));
      const auto hits5 = std::max(hits1, static_cast<std::size_t>(std::llround(p5 * static_cast<double>(size))));
      std::vector<std::size_t> order = members[s];
      Rng rng = root.split(fmt::format("hits/{}/{}", s, id));
      rng.shuffle(order);
      for (std::size_t c = 0; c < order.size(); ++c) {
        ProfileRecord& r = records[order[c] * m + j];
        r.correct_top1 = c < hits1;
        r.correct_top5 = c < hits5;
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto& model = spec.models[j];
    Rng rng = root.split("latency/" + model.id);
    for (std::size_t i = 0; i < n; ++i) {
      ProfileRecord& r = records[i * m + j];
      const double factor = 1.0 + model.latency_jitter * rng.uniform(-1.0, 1.0);
      r.latency_s = model.latency_s * factor;
      r.energy_j = spec.energy ? model.energy_j * factor : 0.0;
    }
  }

  const int width = std::max<int>(5, static_cast<int>(std::to_string(n - 1).size()));
  std::vector<std::string> image_ids(n);
  for (std::size_t i = 0; i < n; ++i) image_ids[i] = fmt::format("img{:0{}}", i, width);
  std::vector<std::string> model_ids;
  for (const auto& model : spec.models) model_ids.push_back(model.id);

  std::vector<std::array<double, kSynthLatentDims>> centers(strata.size());
  {
    Rng rng = root.split("centers");
    for (std::size_t s = 0; s < strata.size(); ++s) {
      for (std::size_t d = 0; d < kSynthLatentDims; ++d) {
        double c = rng.normal(0.0, 1.0);
        centers[s][d] = strata[s].center ? (*strata[s].center)[d] : c;
      }
    }
  }
  FeatureTable features(std::vector<std::string>(candidate_feature_names().begin(), candidate_feature_names().end()));
  Rng rng = root.split("features");
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kSynthLatentDims> z = centers[stratum_of[i]];
    for (double& x : z) x += rng.normal(0.0, spec.feature_noise);
    features.add_row(image_ids[i], features_from_latent(z, rng));
  }

  return {ClassifierProfile(image_ids, std::move(model_ids), std::move(records), spec.energy), std::move(features),
          std::move(stratum_of)};
}

SynthSpec parse_synth_spec(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, fmt::format("invalid JSON: {}", e.what()));
  }
  SynthSpec spec;
  try {
    spec.images = j.at("images").get<std::size_t>();
    spec.energy = j.value("energy", false);
    spec.top5_bonus = j.value("top5_bonus", 0.0);
    spec.slower_accuracy = j.value("slower_accuracy", 0.5);
    spec.feature_noise = j.value("feature_noise", 0.35);
    for (const auto& mj : j.at("models")) {
      SynthModel m;
      m.id = mj.at("id").get<std::string>();
      m.latency_s = mj.at("latency_s").get<double>();
      m.latency_jitter = mj.value("latency_jitter", 0.0);
      m.energy_j = mj.value("energy_j", 0.0);
      if (mj.contains("optimal_share")) m.optimal_share = mj.at("optimal_share").get<double>();
      spec.models.push_back(std::move(m));
    }
    if (j.contains("strata")) {
      for (const auto& sj : j.at("strata")) {
        SynthStratum s;
        s.name = sj.value("name", fmt::format("stratum{}", spec.strata.size()));
        s.share = sj.at("share").get<double>();
        if (sj.contains("top1")) s.top1 = sj.at("top1").get<std::map<std::string, double>>();
        if (sj.contains("top5")) s.top5 = sj.at("top5").get<std::map<std::string, double>>();
        if (sj.contains("center")) s.center = sj.at("center").get<std::vector<double>>();
        spec.strata.push_back(std::move(s));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, fmt::format("malformed synthetic spec: {}", e.what()));
  }
  validate_synth_spec(spec);
  return spec;
}

}  // namespace adsel
