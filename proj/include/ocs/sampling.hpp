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

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ocs/geometry.hpp"
#include "ocs/image.hpp"

namespace ocs {

/// Random engine used by every stochastic component.
using Rng = std::mt19937_64;

struct SamplerConfig {
  int crop_size = 224;
  /// Minimum joint overlap (pixels) for a position to be sampled.
  std::int64_t tau = 0;
  double flip_probability = 0.5;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/**
 * Overlap of a sliding 1-D window of length `crop` with the object interval
 * [object_lo, object_hi), for every start k in [0, extent - crop].
 */
struct OverlapProfile {
  int extent = 0;
  int crop = 0;
  std::vector<std::int64_t> weights;
};

OverlapProfile overlap_profile(int extent, int crop, int object_lo, int object_hi);

/**
 * Crop-position distribution over top-left corners (x, y) of s x s crops.
 *
 * The joint weight of (x, y) is |R_xy ∩ R_o| = x_profile[x] * y_profile[y],
 * with positions below tau zeroed. Sampling uses integer prefix sums, so
 * probabilities are exact ratios of integers.
 *
 * With tau <= 1 the two axes are independent. For larger tau the y marginal
 * becomes row masses and x is drawn from the contiguous run of the x profile
 * that clears tau / y_weight (profiles are unimodal, so that run is an interval).
 */
class CropDistribution {
 public:
  int image_width() const { return image_width_; }
  int image_height() const { return image_height_; }
  int crop_size() const { return crop_size_; }
  int positions_x() const { return image_width_ - crop_size_ + 1; }
  int positions_y() const { return image_height_ - crop_size_ + 1; }

  const OverlapProfile& x_profile() const { return x_profile_; }
  const OverlapProfile& y_profile() const { return y_profile_; }
  /// Inclusive prefix sums of x_profile / of the y marginal (row masses).
  const std::vector<std::int64_t>& x_cdf() const { return x_cdf_; }
  const std::vector<std::int64_t>& y_cdf() const { return y_cdf_; }

  std::int64_t total_weight() const { return total_weight_; }
  bool fallback_uniform() const { return fallback_uniform_; }
  std::int64_t tau() const { return tau_; }

  /// Unnormalized weight of position (x, y); 1 everywhere in fallback mode.
  std::int64_t joint_weight(int x, int y) const;

  /// Probability of position (x, y).
  double probability(int x, int y) const;

 private:
  friend CropDistribution build_crop_distribution(int, int, const std::optional<Rect>&,
                                                  const SamplerConfig&);
  friend std::pair<int, int> sample_position(const CropDistribution&, Rng&);

  int image_width_ = 0;
  int image_height_ = 0;
  int crop_size_ = 0;
  std::int64_t tau_ = 0;
  OverlapProfile x_profile_;
  OverlapProfile y_profile_;
  std::vector<std::int64_t> x_cdf_;
  std::vector<std::int64_t> y_cdf_;
  // Per-row admissible x interval [lo, hi] when tau > 1; empty otherwise.
  std::vector<std::pair<int, int>> row_x_range_;
  std::int64_t total_weight_ = 0;
  bool fallback_uniform_ = false;
};

/**
 * Builds the crop distribution for a w x h image. A missing detection, or
 * one that leaves no positive weight, yields the uniform fallback.
 * Throws std::invalid_argument when the image is smaller than the crop.
 */
CropDistribution build_crop_distribution(int image_width, int image_height,
                                         const std::optional<Rect>& detection,
                                         const SamplerConfig& cfg);

/// Inverse-transform draw of a top-left corner.
std::pair<int, int> sample_position(const CropDistribution& dist, Rng& rng);

/// Smallest index k with cdf[k] > u. Requires 0 <= u < cdf.back().
std::size_t cdf_search(std::span<const std::int64_t> cdf, std::int64_t u);

struct CropSample {
  int x = 0;
  int y = 0;
  bool flipped = false;
  std::size_t image_id = 0;

  Rect rect(int crop_size) const { return Rect::from_size(x, y, crop_size, crop_size); }
  friend bool operator==(const CropSample&, const CropSample&) = default;
};

/// Draws `count` crops from dist, each mirrored with cfg.flip_probability.
std::vector<CropSample> sample_training_crops(const CropDistribution& dist, std::size_t count,
                                              const SamplerConfig& cfg, Rng& rng,
                                              std::size_t image_id = 0);

/// Dense normalized probability map, positions_y rows by positions_x columns.
struct ProbabilityMap {
  int columns = 0;
  int rows = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[std::size_t(y) * columns + x]; }
};

ProbabilityMap export_probability_map(const CropDistribution& dist);

/// Grayscale rendering of a probability map, scaled so the maximum maps to 255.
ImageBuffer probability_map_image(const ProbabilityMap& map);

/// Per-worker seed derivation for concurrent sampling streams.
inline std::uint64_t worker_seed(std::uint64_t base, std::uint64_t worker) { return base ^ worker; }

}  // namespace ocs
