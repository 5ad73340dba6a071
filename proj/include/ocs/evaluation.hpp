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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocs/dataset.hpp"
#include "ocs/detector.hpp"
#include "ocs/geometry.hpp"

namespace ocs {

enum class ApMode { kElevenPoint, kEveryPoint };

/**
 * Detection AP with one ground truth per image. Detections are pooled,
 * sorted by score (descending, ties by image index then input order) and
 * matched greedily; each ground truth is matched at most once.
 * Throws std::invalid_argument when there are no ground truths.
 */
double average_precision(std::span<const std::vector<Detection>> detections, std::span<const Rect> gts,
                         double iou_threshold = 0.80, ApMode mode = ApMode::kElevenPoint);

enum class SizeBinning { kQuantile, kEqualWidth };

struct SizeBin {
  int index = 0;
  std::int64_t min_area = 0;
  std::int64_t max_area = 0;
  std::size_t count = 0;
  double mean_score = 0.0;
};

/**
 * Mean detection score per ground-truth area bin. Images without a detection
 * (or whose best detection falls below min_iou) are skipped; bins with no
 * members are left out of the result.
 */
std::vector<SizeBin> score_vs_size_curve(std::span<const std::vector<Detection>> detections,
                                         std::span<const Rect> gts, int bins,
                                         SizeBinning binning = SizeBinning::kQuantile,
                                         double min_iou = 0.0);

/// Spearman rank correlation with average ranks for ties; 0 if either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// True iff mean scores do not decrease from bin to bin.
bool nondecreasing(std::span<const SizeBin> bins);

struct EvalResult {
  std::string metric;
  double value = 0.0;
  std::size_t support = 0;
  std::vector<SizeBin> bins;
};

/// key=value lines in fixed field order.
std::string format_report(std::span<const EvalResult> results);

struct ClassificationResult {
  std::string test_set;  ///< fingerprint of the test manifest
  std::size_t support = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

/// FNV-1a fingerprint of a manifest's serialized form.
std::string manifest_fingerprint(const DatasetManifest& manifest);

/**
 * Tab-separated Uniform / Multinomial / Delta table plus commented reference
 * rows. Throws std::invalid_argument if the two results come from different
 * test sets.
 */
std::string benchmark_table(const ClassificationResult& uniform, const ClassificationResult& multinomial);

struct BenchmarkTable {
  ClassificationResult uniform;
  ClassificationResult multinomial;
  double delta_top1 = 0.0;
  double delta_top5 = 0.0;
};

/// Inverse of benchmark_table. Throws FormatError.
BenchmarkTable parse_benchmark_table(const std::string& text);

}  // namespace ocs
