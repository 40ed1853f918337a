#include <benchmark/benchmark.h>

#include <fstream>

#include "adsel/features.hpp"
#include "adsel/image_io.hpp"
#include "adsel/premodel.hpp"
#include "adsel/rng.hpp"
#include "adsel/selection.hpp"
#include "adsel/synth.hpp"

using namespace adsel;

namespace {

TrainingMatrix random_matrix(std::size_t rows, std::size_t dims) {
  Rng rng(1);
  TrainingMatrix m;
  for (std::size_t d = 0; d < dims; ++d) m.feature_names.push_back("f" + std::to_string(d));
  std::vector<double> row(dims);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& x : row) x = rng.uniform();
    m.add_row("r" + std::to_string(r), row, "m" + std::to_string(rng.below(3)));
  }
  return m;
}

std::vector<double> random_query(Rng& rng, std::size_t dims) {
  std::vector<double> q(dims);
  for (auto& x : q) x = rng.uniform();
  return q;
}

void BM_KNearest(benchmark::State& state) {
  auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 7);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(k_nearest(m, random_query(rng, 7), 5));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KNearest)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_CascadePredict(benchmark::State& state) {
  ModelSelectionTrace trace;
  for (std::size_t i = 0; i < 3; ++i) trace.steps.push_back({i, "m" + std::to_string(i), 0, 0, 0, 0, 1, true});
  Cascade c = train(random_matrix(static_cast<std::size_t>(state.range(0)), 7), trace, 5, Fallback::use("m0"));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(predict(c, random_query(rng, 7)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CascadePredict)->Arg(10000)->Arg(50000);

void BM_ExtractFeatures(benchmark::State& state) {
  const RasterImage img = read_image(std::string(ADSEL_GOLDEN_DIR) + "/g05_noise.ppm");
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(img));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExtractFeatures);

void BM_ExtractFeaturesLarge(benchmark::State& state) {
  Rng rng(4);
  const int side = static_cast<int>(state.range(0));
  RasterImage img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                     static_cast<std::uint8_t>(rng.below(256))});
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(img));
}
BENCHMARK(BM_ExtractFeaturesLarge)->Arg(224)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SelectInferenceModels(benchmark::State& state) {
  std::ifstream in(std::string(ADSEL_SPECS) + "/walkthrough.json");
  SynthSpec spec = parse_synth_spec(in);
  spec.images = static_cast<std::size_t>(state.range(0));
  const auto bundle = generate_synthetic(spec, 0);
  for (auto _ : state) benchmark::DoNotOptimize(select_inference_models(bundle.profile, Criterion::kTop1, 0.5));
}
BENCHMARK(BM_SelectInferenceModels)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
