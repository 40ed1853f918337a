#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adsel/feature_table.hpp"
#include "adsel/profile.hpp"

namespace adsel {

struct SynthModel {
  std::string id;
  double latency_s = 0.1;
  double latency_jitter = 0.0;  // relative half-width of the uniform jitter
  double energy_j = 0.0;
  // Share of the corpus on which this model is the fastest correct one. Used
  // to derive strata when the spec lists none.
  std::optional<double> optimal_share;
};

// A group of images sharing per-model hit rates. Within a stratum of n images
// exactly round(rate * n) are correct for each model.
struct SynthStratum {
  std::string name;
  double share = 0.0;
  std::map<std::string, double> top1;  // absent model = 0
  std::map<std::string, double> top5;  // absent model = derived from top1
  std::optional<std::vector<double>> center;  // latent feature centre
};

struct SynthSpec {
  std::size_t images = 1000;
  bool energy = false;
  // Default top-5 rate: top1 + top5_bonus * (1 - top1).
  double top5_bonus = 0.0;
  // Derived strata: hit rate of models slower than the stratum's optimum.
  double slower_accuracy = 0.5;
  // Standard deviation of per-image latent noise around the stratum centre.
  double feature_noise = 0.35;
  std::vector<SynthModel> models;
  std::vector<SynthStratum> strata;
};

inline constexpr std::size_t kSynthLatentDims = 7;

// Parses the JSON spec format and validates it (see validate_synth_spec).
SynthSpec parse_synth_spec(std::istream& in, const std::string& source = "<synth spec>");

// Throws on infeasible specs: shares above 100%, rates outside [0, 1], top-5
// below top-1, unknown models, or overlapping latency ranges when strata are
// derived from optimal shares.
void validate_synth_spec(const SynthSpec& spec);

// Strata actually used for generation, including the derived ones and the
// implicit all-fail remainder.
std::vector<SynthStratum> effective_strata(const SynthSpec& spec);

struct SynthBundle {
  ClassifierProfile profile;
  FeatureTable features;  // all candidate features
  std::vector<std::size_t> stratum;  // per image, index into effective_strata
};

SynthBundle generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

// Exact per-group counts for `shares` that sum to `total` (largest remainder,
// earlier groups win ties).
std::vector<std::size_t> apportion(const std::vector<double>& shares, std::size_t total);

}  // namespace adsel
