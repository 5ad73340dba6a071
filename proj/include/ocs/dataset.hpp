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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocs/geometry.hpp"
#include "ocs/image.hpp"
#include "ocs/sampling.hpp"

namespace ocs {

struct ObjectAnnotation {
  Rect box;
  int label = 0;
  bool occluded = false;
  bool truncated = false;
  friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

/// One image: its class label, every candidate object, and the salient one.
struct AnnotationRecord {
  std::string image_path;
  int label = 0;
  std::vector<ObjectAnnotation> objects;
  std::optional<std::size_t> salient;

  /// The salient ground-truth box. Throws std::logic_error when unset.
  const Rect& salient_box() const;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

enum class Split { kTrain, kTest };
const char* split_name(Split s);

struct DatasetManifest {
  Split split = Split::kTrain;
  int num_classes = 0;
  std::vector<AnnotationRecord> records;

  /// Class names are positional: "class_<id>".
  std::vector<std::string> class_names() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/**
 * Picks the one salient ground truth among candidates. Label-consistent
 * candidates only; then visible over occluded, larger over smaller, closer to
 * the image center over farther. Exact ties are broken by rng over the tied
 * candidates in canonical (box, flags) order.
 * Throws ConfigError("unlabelable image") if no candidate carries image_label.
 */
std::size_t select_salient_ground_truth(std::span<const ObjectAnnotation> candidates,
                                        int image_label, int image_width, int image_height,
                                        Rng& rng);

// ---------------------------------------------------------------------------
// Manifest and pixmap I/O
// ---------------------------------------------------------------------------

/// Writes the manifest text format (header line, one tab-separated record per line).
void save_manifest(const DatasetManifest& manifest, std::ostream& os);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/**
 * Parses a manifest. When image_root is given, each record's image header is
 * read from image_root/<path> and every box is checked against its bounds.
 * Errors are FormatError with the offending line number.
 */
DatasetManifest load_manifest(std::istream& is, const std::optional<std::string>& image_root);
DatasetManifest load_manifest(const std::string& path, bool verify_images = true);

struct PixmapInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};

/// P5 (gray) / P6 (RGB), maxval 255.
ImageBuffer read_pixmap(std::istream& is);
ImageBuffer read_pixmap(const std::string& path);
PixmapInfo read_pixmap_info(const std::string& path);
void write_pixmap(const ImageBuffer& img, std::ostream& os);
void write_pixmap(const ImageBuffer& img, const std::string& path);

/// Loads every image of a manifest, paths relative to image_root.
std::vector<ImageBuffer> load_images(const DatasetManifest& manifest, const std::string& image_root);

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

/**
 * Cluttered-scene generator. Each scene holds one large object whose
 * oriented, colored grating identifies its class, plus smaller distractor
 * objects of other classes on a smooth noisy background with clutter blocks.
 */
struct SceneSpec {
  int short_side = 256;
  double min_aspect = 1.25;  ///< long / short side
  double max_aspect = 1.8;
  double portrait_probability = 0.3;
  int num_classes = 10;
  double salient_area_min = 0.20;  ///< fraction of image area
  double salient_area_max = 0.60;
  int distractors_min = 0;
  int distractors_max = 3;
  double distractor_area_min = 0.02;
  double distractor_area_max = 0.12;
  double distractor_occlusion_probability = 0.3;
  double clutter_density = 2.0;  ///< clutter blocks per 10^4 pixels
  std::uint64_t seed = 7;

  void validate() const;
};

/// Texture signature of a class: grating orientation/period and two colors.
struct ClassSignature {
  double orientation = 0.0;  ///< radians
  double period = 0.0;       ///< pixels
  std::uint8_t color_a[3]{};
  std::uint8_t color_b[3]{};
};
ClassSignature class_signature(int class_id, int num_classes);

struct Scene {
  ImageBuffer image;
  AnnotationRecord record;
};

Scene generate_synthetic_scene(const SceneSpec& spec, int class_id, Rng& rng);

/// Seed for scene `index` of a dataset (splitmix64 of base and index).
std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index);

struct SyntheticDataset {
  DatasetManifest train;
  DatasetManifest test;
  std::vector<ImageBuffer> train_images;
  std::vector<ImageBuffer> test_images;
};

/// Class-balanced train/test sets; image paths are "<split>/<index>.ppm".
SyntheticDataset generate_dataset(const SceneSpec& spec, std::size_t n_train, std::size_t n_test);

/// Writes images and train.manifest / test.manifest under dir.
void write_dataset(const SyntheticDataset& data, const std::string& dir);

}  // namespace ocs
