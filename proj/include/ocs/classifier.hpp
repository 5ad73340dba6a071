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

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocs/geometry.hpp"
#include "ocs/image.hpp"
#include "ocs/sampling.hpp"

namespace ocs {

inline constexpr int kGridSide = 16;
inline constexpr int kHistBins = 8;
inline constexpr int kCropFeatureDim = kGridSide * kGridSide + 3 * kHistBins;  // 280

/// 16x16 block-mean gray thumbnail in [0,1] followed by three l1-normalized 8-bin channel histograms.
using CropFeature = std::array<double, kCropFeatureDim>;

/// Feature of an s x s crop. Throws std::invalid_argument on any other size.
CropFeature extract_crop_feature(const ImageBuffer& crop, int crop_size = 224);

/// Feature of the s x s crop at (x, y) of img, mirrored if requested, without copying pixels.
CropFeature extract_crop_feature_at(const ImageBuffer& img, int x, int y, int crop_size, bool flipped);

/// Multinomial logistic regression; weights are classes x (dims + 1), bias last.
struct ClassifierModel {
  int classes = 0;
  int dims = kCropFeatureDim;
  std::vector<double> weights;

  static ClassifierModel zeros(int classes, int dims = kCropFeatureDim);
  std::vector<double> predict_proba(std::span<const double> feature) const;
  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

void save_classifier(const ClassifierModel& model, std::ostream& os);
ClassifierModel load_classifier(std::istream& is);
void save_classifier(const ClassifierModel& model, const std::string& path);
ClassifierModel load_classifier(const std::string& path);

enum class SamplerMode { kUniform, kMultinomial };
const char* sampler_mode_name(SamplerMode m);
SamplerMode parse_sampler_mode(const std::string& s);

struct TrainConfig {
  SamplerMode sampler = SamplerMode::kMultinomial;
  int crops_per_image = 4;
  int epochs = 10;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  int batch_size = 32;
  int resize_to = 256;
  SamplerConfig crops;  ///< crop size, tau and flip probability
  std::uint64_t seed = 1;
};

struct TrainReport {
  /// Mean regularized cross-entropy of each epoch's mini-batches, measured before each update.
  std::vector<double> epoch_loss;
};

/// Observer for the crops drawn for one image in one epoch.
using CropObserver =
    std::function<void(std::size_t image, const CropDistribution&, std::span<const CropSample>)>;

/**
 * Mini-batch SGD over crops drawn per epoch. Every image is resized to
 * shorter side resize_to; in multinomial mode its detection is mapped through
 * the same resize and drives the crop distribution (missing -> uniform).
 * Throws ConfigError for labels outside [0, classes).
 */
ClassifierModel train_classifier(std::span<const ImageBuffer> images, std::span<const int> labels,
                                 std::span<const std::optional<Rect>> detections, int classes,
                                 const TrainConfig& cfg, TrainReport* report = nullptr,
                                 const CropObserver& observer = {});

/// Top-left corners of the four corner crops and the center crop.
std::array<std::pair<int, int>, 5> five_crop_positions(int width, int height, int crop_size);

struct TestTimePrediction {
  std::vector<double> probabilities;
  int crops_evaluated = 0;
};

/**
 * Averages the class probabilities of five crops plus mirrors of the resized
 * image and, given a detection, five crops plus mirrors of the detection
 * region resized the same way: 20 crops with a detection, 10 without.
 */
TestTimePrediction predict_test_time(const ClassifierModel& model, const ImageBuffer& img,
                                     const std::optional<Rect>& detection, int resize_to = 256,
                                     int crop_size = 224);

/// Uniform average of per-crop probability vectors.
std::vector<double> average_probabilities(std::span<const std::vector<double>> per_crop);

/// Fraction of rows whose label ranks within the top k (ties to the lower class index).
double topk_accuracy(std::span<const std::vector<double>> predictions, std::span<const int> labels, int k);

}  // namespace ocs
