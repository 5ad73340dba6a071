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

#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both produce identical results (reductions break ties by
// lowest index), which tests/unit/kernels_test.cpp checks.

#include <span>
#include <vector>

#include "ocs/classifier.hpp"
#include "ocs/detector.hpp"

namespace ocs::kernels {

enum class Exec { kSerial, kParallel };

/// Cascade score of every window.
std::vector<double> score_windows(const CascadeModel& model, const FeatureContext& ctx,
                                  std::span<const Rect> windows, bool early_reject, Exec exec);

struct CandidateChoice {
  std::size_t index = 0;
  StumpFit fit;
};

/// Lowest weighted-error stump over all candidates, ties to the lowest index.
CandidateChoice select_candidate(std::span<const WeakClassifier> candidates,
                                 std::span<const WindowDescriptor> samples,
                                 std::span<const int> labels, std::span<const double> weights,
                                 Exec exec);

/// Crop features for a batch of crop samples of one image.
std::vector<CropFeature> crop_features(const ImageBuffer& img, std::span<const CropSample> crops,
                                       int crop_size, Exec exec);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

/// Thread count for later parallel kernels. Results do not depend on it.
void set_max_threads(int n);

}  // namespace ocs::kernels
