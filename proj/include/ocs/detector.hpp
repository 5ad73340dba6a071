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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ocs/geometry.hpp"
#include "ocs/image.hpp"
#include "ocs/sampling.hpp"

namespace ocs {

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/**
 * Feature pool. Mean intensity is scale invariant; the two gradient energies
 * and the log area are not, which is what lets the boosted score depend on
 * the absolute size of a window.
 */
enum class FeatureId : int {
  kMeanIntensity = 0,     ///< mean of one color channel, in [0, 1]
  kHorizontalEnergy = 1,  ///< mean |g(x+1,y) - g(x,y)| of the gray image
  kVerticalEnergy = 2,    ///< mean |g(x,y+1) - g(x,y)| of the gray image
  kLogArea = 3,           ///< ln(window area in pixels)
};
inline constexpr int kFeatureCount = 4;

/// Regionlet coordinates produced by training are multiples of 1/kLattice.
inline constexpr int kLattice = 16;

/// A sub-region of the detection window in window-relative coordinates.
struct RegionletSpec {
  double rx0 = 0.0, ry0 = 0.0, rx1 = 1.0, ry1 = 1.0;
  FeatureId feature = FeatureId::kMeanIntensity;
  int channel = 0;  ///< color channel for kMeanIntensity, ignored otherwise

  /// Throws std::invalid_argument unless 0 <= r0 < r1 <= 1 on both axes.
  void validate() const;
  friend bool operator==(const RegionletSpec&, const RegionletSpec&) = default;
};

/// Integral tables the detector needs for one image.
class FeatureContext {
 public:
  explicit FeatureContext(const ImageBuffer& img);

  int width() const { return color_.width(); }
  int height() const { return color_.height(); }
  int channels() const { return color_.channels(); }
  Rect bounds() const { return Rect(0, 0, width(), height()); }
  const IntegralImage& color() const { return color_; }
  /// Plane 0: horizontal gradient magnitude, plane 1: vertical.
  const IntegralImage& energy() const { return energy_; }

 private:
  IntegralImage color_;
  IntegralImage energy_;
};

/// Absolute pixel rectangle of a regionlet inside `window` (at least 1x1).
Rect regionlet_rect(const Rect& window, const RegionletSpec& spec);

/// Feature of a single regionlet on a window.
double extract_feature(const FeatureContext& ctx, const Rect& window, const RegionletSpec& spec);

/// Feature of a regionlet set: max over its members.
double extract_feature(const FeatureContext& ctx, const Rect& window,
                       std::span<const RegionletSpec> set);

/**
 * Lattice-sampled integral tables of one window. Features of any regionlet
 * whose coordinates are multiples of 1/kLattice evaluate from the descriptor
 * with the same value as extract_feature on the full image.
 */
class WindowDescriptor {
 public:
  /// Requires window inside the image and at least kLattice pixels per side.
  WindowDescriptor(const FeatureContext& ctx, const Rect& window);

  int width() const { return width_; }
  int height() const { return height_; }

  double feature(std::span<const RegionletSpec> set) const;
  double feature(const RegionletSpec& spec) const;

  /// A regionlet with its lattice indices resolved once, for repeated evaluation.
  struct Resolved {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    FeatureId feature = FeatureId::kMeanIntensity;
    int channel = 0;
  };
  static Resolved resolve(const RegionletSpec& spec);
  double feature(const Resolved& r) const;

 private:
  static constexpr int kPlanes = 5;  // R, G, B, |dx|, |dy|
  static constexpr int kSide = kLattice + 1;

  std::int64_t corner(int plane, int i, int j) const {
    return corners_[(std::size_t(plane) * kSide + j) * kSide + i];
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::array<int, kSide> ox_{};
  std::array<int, kSide> oy_{};
  std::vector<std::int64_t> corners_;
};

// ---------------------------------------------------------------------------
// Cascade model
// ---------------------------------------------------------------------------

/// Decision stump over a regionlet set: alpha_plus if value > threshold, else alpha_minus.
struct WeakClassifier {
  std::vector<RegionletSpec> regionlets;
  double threshold = 0.0;
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;

  double respond(double value) const { return value > threshold ? alpha_plus : alpha_minus; }
  double evaluate(const FeatureContext& ctx, const Rect& window) const {
    return respond(extract_feature(ctx, window, regionlets));
  }
  void validate() const;
  friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

struct CascadeStage {
  std::vector<WeakClassifier> weak;
  /// A window whose running score drops below this after the stage is rejected.
  double reject_threshold = 0.0;
  friend bool operator==(const CascadeStage&, const CascadeStage&) = default;
};

struct CascadeModel {
  std::vector<CascadeStage> stages;
  /// Free-form training metadata; keys and values contain no whitespace.
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t weak_count() const;
  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

struct WindowScore {
  double score = 0.0;
  std::optional<int> rejected_at;
};

/// Running sum of weak responses; with early_reject, stops at the first failing stage.
WindowScore score_window(const CascadeModel& model, const FeatureContext& ctx, const Rect& window,
                         bool early_reject = true);

struct Detection {
  Rect rect;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

/**
 * Max-response detection: scores every proposal without early rejection and
 * returns the single best one, ties to the lowest proposal index.
 * Throws std::invalid_argument on an empty proposal list.
 */
Detection detect_max(const CascadeModel& model, const FeatureContext& ctx,
                     std::span<const Rect> proposals);

void save_cascade(const CascadeModel& model, std::ostream& os);
CascadeModel load_cascade(std::istream& is);
void save_cascade(const CascadeModel& model, const std::string& path);
CascadeModel load_cascade(const std::string& path);

/// Rounds to 9 significant digits, the precision of every serialized real.
double quantize9(double v);

// ---------------------------------------------------------------------------
// Proposals
// ---------------------------------------------------------------------------

struct ProposalConfig {
  std::vector<double> scales{1.0, 0.8, 0.64, 0.512, 0.41};
  bool square = true;
  bool landscape = true;  ///< 4:3
  bool portrait = true;   ///< 3:4
  double stride_fraction = 0.25;
  int min_window = 16;
};

/// Multi-scale sliding grid; the full image window comes first, duplicates removed.
std::vector<Rect> generate_proposals(int image_width, int image_height,
                                     const ProposalConfig& cfg = {});

struct SamplePartition {
  std::vector<Rect> positives;
  std::vector<Rect> negatives;
  std::vector<Rect> discarded;
};

/// IoU > positive_iou -> positive, IoU < negative_iou -> negative, else discarded.
SamplePartition partition_training_samples(std::span<const Rect> proposals, const Rect& gt,
                                           double positive_iou = 0.70, double negative_iou = 0.30);

// ---------------------------------------------------------------------------
// Boosting
// ---------------------------------------------------------------------------

struct StumpFit {
  double threshold = 0.0;
  double error = 0.5;
  bool positive_above = true;  ///< true: value > threshold predicts the positive class
};

/**
 * Exhaustive minimum weighted-error stump. labels are +1/-1, weights sum to 1.
 * Thresholds are midpoints between distinct sorted values, rounded to 9
 * significant digits, plus one below the minimum.
 */
StumpFit best_stump(std::span<const double> values, std::span<const int> labels,
                    std::span<const double> weights);

/// One boosting round's bookkeeping.
struct RoundStats {
  int stage = 0;
  double weak_error = 0.0;      ///< weighted error of the chosen stump
  double weight_sum = 0.0;      ///< sum of sample weights after renormalization
  double training_error = 0.0;  ///< ensemble 0/1 error under the stage's initial weights
  double exp_loss = 0.0;        ///< ensemble exponential loss under the same weights
};

/**
 * Discrete AdaBoost over a fixed sample set. Each round draws
 * `candidates` random regionlet sets, fits a stump to each and keeps the
 * lowest weighted error (ties to the lowest candidate index).
 */
struct BoostConfig {
  int rounds = 50;
  int candidates = 500;
  int max_regionlets = 3;
  bool parallel = true;
};

struct BoostResult {
  std::vector<WeakClassifier> weak;
  std::vector<RoundStats> rounds;
};

/// `prior` holds the running score of each sample before this stage (may be empty).
BoostResult boost(std::span<const WindowDescriptor> samples, std::span<const int> labels,
                  std::span<const double> prior, const BoostConfig& cfg, Rng& rng);

/// Random candidate weak-classifier shape (stump fields left at zero).
WeakClassifier random_candidate(Rng& rng, int max_regionlets);

struct DetectorTrainConfig {
  int stages = 4;
  int weak_per_stage = 50;
  int candidates = 500;
  int max_regionlets = 3;
  double positive_iou = 0.70;
  double negative_iou = 0.30;
  double stage_margin = 0.99;
  bool include_ground_truth = true;  ///< add each ground-truth box as a positive
  int negatives_per_image = 4;       ///< initial random negatives
  int mined_per_image = 4;           ///< hard negatives added per image between stages
  std::size_t max_negatives = 8000;
  std::size_t max_positives = 6000;
  ProposalConfig proposals;
  bool parallel = true;
  std::uint64_t seed = 1;
};

struct DetectorTrainLog {
  std::vector<RoundStats> rounds;
  std::vector<std::size_t> positives_per_stage;
  std::vector<std::size_t> negatives_per_stage;
};

/**
 * Trains a cascade on images with one salient ground-truth box each.
 * Throws ConfigError if a stage has no positive or no negative window.
 */
CascadeModel train_cascade(std::span<const ImageBuffer> images, std::span<const Rect> ground_truth,
                           const DetectorTrainConfig& cfg, DetectorTrainLog* log = nullptr);

// ---------------------------------------------------------------------------
// Box re-localization
// ---------------------------------------------------------------------------

/// Gradient-energy strip profile around a window, used to refine its edges.
std::vector<double> relocalization_features(const FeatureContext& ctx, const Rect& window);

struct RegressionPair {
  Rect detected;
  Rect truth;
  std::vector<double> features;
  std::size_t image = 0;  ///< index of the source image
};

/// Linear map features -> (dx, dy, dlog w, dlog h); last weight row is the bias.
struct BoxRegressor {
  int dim = 0;
  double lambda = 0.0;
  /// (dim + 1) x 4, row-major.
  std::vector<double> weights;

  std::array<double, 4> predict(std::span<const double> features) const;
  friend bool operator==(const BoxRegressor&, const BoxRegressor&) = default;
};

/// Offsets of `truth` relative to `detected` in detection-normalized coordinates.
std::array<double, 4> box_offsets(const Rect& detected, const Rect& truth);

/// Ridge regression; the bias is not penalized. Throws on a singular system
/// (possible only when lambda == 0) or fewer than dim + 1 pairs.
BoxRegressor fit_box_regressor(std::span<const RegressionPair> pairs, double lambda = 1e-3);

/// Applies predicted offsets, clipped to the image bounds.
Rect apply_box_regressor(const BoxRegressor& reg, const Detection& detection,
                         std::span<const double> features, int image_width, int image_height);

/// Applies offsets directly (used by apply_box_regressor).
Rect apply_box_offsets(const Rect& r, const std::array<double, 4>& offsets, int image_width,
                       int image_height);

void save_regressor(const BoxRegressor& reg, std::ostream& os);
BoxRegressor load_regressor(std::istream& is);

// ---------------------------------------------------------------------------
// End-to-end helpers
// ---------------------------------------------------------------------------

struct Detector {
  CascadeModel cascade;
  /// Re-localization steps applied in order; each was fit to the boxes the previous steps produce.
  std::vector<BoxRegressor> relocalizers;
  ProposalConfig proposals;
};

/// Regressor training pairs from proposals overlapping the ground truth by at
/// least min_iou, plus as many boxes jittered around the ground truth.
std::vector<RegressionPair> collect_regression_pairs(std::span<const ImageBuffer> images,
                                                     std::span<const Rect> ground_truth,
                                                     const ProposalConfig& proposals,
                                                     double min_iou = 0.5,
                                                     std::size_t max_per_image = 8);

struct RelocalizationConfig {
  int steps = 3;
  double lambda = 1e-3;
  double min_iou = 0.5;
  std::size_t max_per_image = 8;
};

/**
 * Cascaded re-localization: step k is a ridge regressor fit to the pairs
 * obtained by running steps 0..k-1 on the initial pairs.
 */
std::vector<BoxRegressor> train_relocalizers(std::span<const ImageBuffer> images,
                                             std::span<const Rect> ground_truth,
                                             const ProposalConfig& proposals,
                                             const RelocalizationConfig& cfg = {});

/// One re-localization step on a box of the image behind ctx.
Rect relocalize(const BoxRegressor& reg, const FeatureContext& ctx, const Rect& box);

/// "OCSRELOC v1 <steps>" followed by one regressor block per step.
void save_relocalizers(std::span<const BoxRegressor> steps, std::ostream& os);
std::vector<BoxRegressor> load_relocalizers(std::istream& is);

/// Max-response detection on one image, then the re-localization steps.
Detection detect(const Detector& detector, const ImageBuffer& img);

struct DetectionRecord {
  std::string image_path;
  Detection detection;
  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// "OCSDET v1", then one "<image-path>\t<x0> <y0> <x1> <y1>\t<score>" line per record.
void save_detections(std::span<const DetectionRecord> records, std::ostream& os);
void save_detections(std::span<const DetectionRecord> records, const std::string& path);
/// Throws FormatError with the offending line.
std::vector<DetectionRecord> load_detections(std::istream& is);
std::vector<DetectionRecord> load_detections(const std::string& path);

}  // namespace ocs
