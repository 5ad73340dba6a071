/*
 Copyright 2026 The OCS Authors.
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


// Serial reference versus OpenMP version of each data-parallel kernel.

#include <benchmark/benchmark.h>

#include <random>

#include "ocs/kernels.hpp"

namespace ocs::kernels {
namespace {

ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  ImageBuffer img(w, h, 3);
  for (auto& v : img.pixels()) v = std::uint8_t(px(rng));
  return img;
}

CascadeModel random_model(int stages, int weak) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CascadeModel m;
  for (int s = 0; s < stages; ++s) {
    CascadeStage st;
    for (int k = 0; k < weak; ++k) {
      auto wc = random_candidate(rng, 3);
      wc.threshold = wc.regionlets.front().feature == FeatureId::kLogArea ? 9.0 : 0.5 + 0.2 * u(rng);
      wc.alpha_plus = u(rng);
      wc.alpha_minus = u(rng);
      st.weak.push_back(wc);
    }
    st.reject_threshold = -1e9;
    m.stages.push_back(st);
  }
  return m;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::kParallel : Exec::kSerial; }

void BM_ScoreWindows(benchmark::State& state) {
  const auto img = noise_image(341, 256, 1);
  const FeatureContext ctx(img);
  const auto model = random_model(4, 50);
  const auto windows = generate_proposals(341, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_windows(model, ctx, windows, false, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(windows.size()));
}
BENCHMARK(BM_ScoreWindows)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SelectCandidate(benchmark::State& state) {
  const auto img = noise_image(256, 256, 2);
  const FeatureContext ctx(img);
  std::mt19937_64 rng(4);
  std::vector<WindowDescriptor> samples;
  std::vector<int> labels;
  for (int i = 0; i < 2000; ++i) {
    const int w = std::uniform_int_distribution<int>(16, 256)(rng), h = std::uniform_int_distribution<int>(16, 256)(rng);
    samples.emplace_back(ctx, Rect::from_size(std::uniform_int_distribution<int>(0, 256 - w)(rng),
                                              std::uniform_int_distribution<int>(0, 256 - h)(rng), w, h));
    labels.push_back(i % 4 == 0 ? 1 : -1);
  }
  const std::vector<double> weights(samples.size(), 1.0 / double(samples.size()));
  Rng crng(5);
  std::vector<WeakClassifier> cands;
  for (int i = 0; i < 100; ++i) cands.push_back(random_candidate(crng, 3));
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_candidate(cands, samples, labels, weights, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(cands.size()));
}
BENCHMARK(BM_SelectCandidate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CropFeatures(benchmark::State& state) {
  const auto img = noise_image(341, 256, 6);
  std::mt19937_64 rng(7);
  std::vector<CropSample> crops;
  for (int i = 0; i < 64; ++i) {
    crops.push_back({std::uniform_int_distribution<int>(0, 117)(rng), std::uniform_int_distribution<int>(0, 32)(rng),
                     i % 2 == 1, 0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(crop_features(img, crops, 224, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(crops.size()));
}
BENCHMARK(BM_CropFeatures)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ocs::kernels

BENCHMARK_MAIN();
