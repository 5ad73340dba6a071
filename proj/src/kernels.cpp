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


#include "ocs/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ocs::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
  if (n < 1) throw std::invalid_argument("thread count must be >= 1");
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

std::vector<double> score_windows(const CascadeModel& model, const FeatureContext& ctx,
                                  std::span<const Rect> windows, bool early_reject, Exec exec) {
  std::vector<double> out(windows.size());
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  if (exec == Exec::kSerial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[std::size_t(i)] = score_window(model, ctx, windows[std::size_t(i)], early_reject).score;
    return out;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[std::size_t(i)] = score_window(model, ctx, windows[std::size_t(i)], early_reject).score;
  }
  return out;
}

namespace {

// Feature values of every sample for a contiguous block of candidates. Samples
// are visited in small groups so each descriptor stays in cache while all
// candidates read it.
void block_values(std::span<const std::vector<WindowDescriptor::Resolved>> cands,
                  std::span<const WindowDescriptor> samples, std::vector<double>& values) {
  constexpr std::size_t kGroup = 8;
  const std::size_t n = samples.size();
  values.resize(cands.size() * n);
  for (std::size_t g = 0; g < n; g += kGroup) {
    const std::size_t end = std::min(n, g + kGroup);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      double* row = values.data() + c * n;
      for (std::size_t i = g; i < end; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& r : cands[c]) best = std::max(best, samples[i].feature(r));
        row[i] = best;
      }
    }
  }
}

std::vector<std::vector<WindowDescriptor::Resolved>> resolve_all(std::span<const WeakClassifier> candidates) {
  std::vector<std::vector<WindowDescriptor::Resolved>> out(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (const auto& spec : candidates[c].regionlets) out[c].push_back(WindowDescriptor::resolve(spec));
  }
  return out;
}

constexpr std::size_t kCandidateBlock = 16;

bool better(const CandidateChoice& a, const CandidateChoice& b) {
  if (a.fit.error != b.fit.error) return a.fit.error < b.fit.error;
  return a.index < b.index;
}

}  // namespace

CandidateChoice select_candidate(std::span<const WeakClassifier> candidates,
                                 std::span<const WindowDescriptor> samples, std::span<const int> labels,
                                 std::span<const double> weights, Exec exec) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  if (labels.size() != samples.size() || weights.size() != samples.size()) {
    throw std::invalid_argument("labels and weights must match samples");
  }
  const auto resolved = resolve_all(candidates);
  const std::span<const std::vector<WindowDescriptor::Resolved>> all(resolved);
  const std::size_t n = samples.size();
  const auto blocks = static_cast<std::ptrdiff_t>((candidates.size() + kCandidateBlock - 1) / kCandidateBlock);

  auto run_block = [&](std::ptrdiff_t b, std::vector<double>& values, CandidateChoice& local, bool& have) {
    const std::size_t c0 = std::size_t(b) * kCandidateBlock;
    const std::size_t c1 = std::min(candidates.size(), c0 + kCandidateBlock);
    block_values(all.subspan(c0, c1 - c0), samples, values);
    for (std::size_t c = c0; c < c1; ++c) {
      const std::span<const double> row(values.data() + (c - c0) * n, n);
      const CandidateChoice cur{c, best_stump(row, labels, weights)};
      if (!have || better(cur, local)) local = cur, have = true;
    }
  };

  CandidateChoice best{0, {}};
  bool have = false;
  if (exec == Exec::kSerial) {
    std::vector<double> values;
    for (std::ptrdiff_t b = 0; b < blocks; ++b) run_block(b, values, best, have);
    return best;
  }
#pragma omp parallel
  {
    std::vector<double> values;
    CandidateChoice local{0, {}};
    bool local_have = false;
#pragma omp for schedule(dynamic, 1) nowait
    for (std::ptrdiff_t b = 0; b < blocks; ++b) run_block(b, values, local, local_have);
#pragma omp critical
    if (local_have && (!have || better(local, best))) best = local, have = true;
  }
  return best;
}

std::vector<CropFeature> crop_features(const ImageBuffer& img, std::span<const CropSample> crops, int crop_size,
                                       Exec exec) {
  std::vector<CropFeature> out(crops.size());
  const auto n = static_cast<std::ptrdiff_t>(crops.size());
  if (exec == Exec::kSerial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto& c = crops[std::size_t(i)];
      out[std::size_t(i)] = extract_crop_feature_at(img, c.x, c.y, crop_size, c.flipped);
    }
    return out;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = crops[std::size_t(i)];
    out[std::size_t(i)] = extract_crop_feature_at(img, c.x, c.y, crop_size, c.flipped);
  }
  return out;
}

}  // namespace ocs::kernels
