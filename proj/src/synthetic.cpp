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

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "ocs/dataset.hpp"

namespace ocs {

void SceneSpec::validate() const {
  if (short_side < 32) throw std::invalid_argument("short_side must be >= 32");
  if (!(min_aspect >= 1.0 && min_aspect <= max_aspect)) throw std::invalid_argument("bad aspect range");
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (!(salient_area_min > 0.0 && salient_area_min <= salient_area_max && salient_area_max <= 0.9)) {
    throw std::invalid_argument("bad salient area range");
  }
  if (!(distractor_area_min > 0.0 && distractor_area_min <= distractor_area_max)) {
    throw std::invalid_argument("bad distractor area range");
  }
  if (!(distractor_area_max < salient_area_min)) {
    throw std::invalid_argument("distractor areas must lie strictly below salient areas");
  }
  if (distractors_min < 0 || distractors_min > distractors_max) {
    throw std::invalid_argument("bad distractor count range");
  }
  if (!(distractor_occlusion_probability >= 0.0 && distractor_occlusion_probability <= 1.0) ||
      !(portrait_probability >= 0.0 && portrait_probability <= 1.0) || clutter_density < 0.0) {
    throw std::invalid_argument("bad probability or density");
  }
}

std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

using Color = std::array<double, 3>;

Color hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Color rgb{};
  switch (int(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = v - c;
  for (auto& ch : rgb) ch = 255.0 * (ch + m);
  return rgb;
}

std::uint8_t to_byte(double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); }

struct Placed {
  Rect box;
  int label;
  bool truncated;
};

Rect random_box(double area, int w, int h, double margin, Rng& rng) {
  // aspect (box w/h) range keeping both sides within margin * image side
  double lo = std::max(0.6, area / std::pow(margin * h, 2));
  double hi = std::min(1.6, std::pow(margin * w, 2) / area);
  if (lo > hi) lo = hi = std::sqrt(lo * hi);
  const double aspect = std::uniform_real_distribution<double>(lo, hi)(rng);
  const int bw = std::clamp(int(std::lround(std::sqrt(area * aspect))), 1, w);
  const int bh = std::clamp(int(std::lround(area / bw)), 1, h);
  return Rect(0, 0, bw, bh);
}

void paint_texture(ImageBuffer& img, const Rect& box, const ClassSignature& sig, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phase = 2.0 * std::numbers::pi * u(rng);
  const double theta = sig.orientation + (u(rng) - 0.5) * 0.1;
  const double period = sig.period * (0.9 + 0.2 * u(rng));
  const double gain = 0.9 + 0.2 * u(rng);
  const double cx = std::cos(theta) / period, cy = std::sin(theta) / period;
  std::uniform_int_distribution<int> noise(-4, 4);
  for (int y = box.y0(); y < box.y1(); ++y) {
    for (int x = box.x0(); x < box.x1(); ++x) {
      const double t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (x * cx + y * cy) + phase);
      for (int c = 0; c < 3; ++c) {
        const double v = (sig.color_a[c] * t + sig.color_b[c] * (1.0 - t)) * gain;
        img.at(x, y, c) = to_byte(v + noise(rng));
      }
    }
  }
}

}  // namespace

ClassSignature class_signature(int class_id, int num_classes) {
  ClassSignature sig;
  const double hue = double(class_id) / num_classes;
  sig.orientation = std::numbers::pi * (class_id % 4) / 4.0;
  sig.period = 4.0 + 2.0 * (class_id % 3);
  const Color a = hsv(hue, 0.8, 0.95);
  const Color b = hsv(hue + 0.45, 0.7, 0.35);
  for (int c = 0; c < 3; ++c) {
    sig.color_a[c] = to_byte(a[c]);
    sig.color_b[c] = to_byte(b[c]);
  }
  return sig;
}

Scene generate_synthetic_scene(const SceneSpec& spec, int class_id, Rng& rng) {
  spec.validate();
  if (class_id < 0 || class_id >= spec.num_classes) throw std::invalid_argument("class id out of range");
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const double aspect = spec.min_aspect + (spec.max_aspect - spec.min_aspect) * u(rng);
  const int long_side = int(std::lround(spec.short_side * aspect));
  const bool portrait = u(rng) < spec.portrait_probability;
  const int w = portrait ? spec.short_side : long_side;
  const int h = portrait ? long_side : spec.short_side;
  const double image_area = double(w) * h;
  ImageBuffer img(w, h, 3);

  // Smooth background: bilinear blend of a coarse grid of muted colors, plus noise.
  constexpr int kGrid = 5;
  std::array<Color, kGrid * kGrid> grid{};
  for (auto& g : grid) g = hsv(u(rng), 0.1 + 0.25 * u(rng), 0.3 + 0.5 * u(rng));
  std::uniform_int_distribution<int> noise(-4, 4);
  for (int y = 0; y < h; ++y) {
    const double gy = double(y) / (h - 1) * (kGrid - 1);
    const int y0 = std::min(int(gy), kGrid - 2);
    const double fy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = double(x) / (w - 1) * (kGrid - 1);
      const int x0 = std::min(int(gx), kGrid - 2);
      const double fx = gx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = grid[y0 * kGrid + x0][c] * (1 - fx) + grid[y0 * kGrid + x0 + 1][c] * fx;
        const double bot = grid[(y0 + 1) * kGrid + x0][c] * (1 - fx) + grid[(y0 + 1) * kGrid + x0 + 1][c] * fx;
        img.at(x, y, c) = to_byte(top * (1 - fy) + bot * fy + noise(rng));
      }
    }
  }

  // Clutter blocks.
  const int n_clutter = int(std::lround(spec.clutter_density * image_area / 1e4));
  for (int k = 0; k < n_clutter; ++k) {
    const int cw = std::max(2, int(w * (0.04 + 0.16 * u(rng))));
    const int ch = std::max(2, int(h * (0.04 + 0.16 * u(rng))));
    const int cx = std::uniform_int_distribution<int>(0, w - cw)(rng);
    const int cy = std::uniform_int_distribution<int>(0, h - ch)(rng);
    const Color col = hsv(u(rng), 0.15 + 0.35 * u(rng), 0.25 + 0.6 * u(rng));
    for (int y = cy; y < cy + ch; ++y) {
      for (int x = cx; x < cx + cw; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = to_byte(col[c] + noise(rng));
      }
    }
  }

  // Salient object: size from the salient range, center in the middle 60%.
  const double frac = spec.salient_area_min + (spec.salient_area_max - spec.salient_area_min) * u(rng);
  Rect sal = random_box(frac * image_area, w, h, 0.95, rng);
  {
    const double lo_x = std::max(0.2 * w, sal.width() / 2.0), hi_x = std::min(0.8 * w, w - sal.width() / 2.0);
    const double lo_y = std::max(0.2 * h, sal.height() / 2.0), hi_y = std::min(0.8 * h, h - sal.height() / 2.0);
    const double cx = lo_x + (hi_x - lo_x) * u(rng);
    const double cy = lo_y + (hi_y - lo_y) * u(rng);
    const int x0 = std::clamp(int(std::lround(cx - sal.width() / 2.0)), 0, w - sal.width());
    const int y0 = std::clamp(int(std::lround(cy - sal.height() / 2.0)), 0, h - sal.height());
    sal = sal.translated(x0, y0);
  }

  // Distractors: other classes, smaller; some are placed to overlap the salient object.
  const int n_dis = std::uniform_int_distribution<int>(spec.distractors_min, spec.distractors_max)(rng);
  std::vector<Placed> under, over;
  for (int k = 0; k < n_dis; ++k) {
    int label = std::uniform_int_distribution<int>(0, spec.num_classes - 2)(rng);
    if (label >= class_id) ++label;
    const double dfrac =
        spec.distractor_area_min + (spec.distractor_area_max - spec.distractor_area_min) * u(rng);
    const Rect shape = random_box(dfrac * image_area, w, h, 0.9, rng);
    const bool hidden = u(rng) < spec.distractor_occlusion_probability;
    if (hidden) {
      // overlap between a quarter and three quarters of the distractor with the salient box
      bool placed = false;
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        const int x = std::uniform_int_distribution<int>(0, w - shape.width())(rng);
        const int y = std::uniform_int_distribution<int>(0, h - shape.height())(rng);
        const Rect r = shape.translated(x, y);
        const double f = double(intersect_area(r, sal)) / r.area();
        if (f >= 0.3 && f <= 0.75) {
          under.push_back({r, label, false});
          placed = true;
        }
      }
      if (placed) continue;
    }
    // anywhere, up to 30% of each side hanging off the image (clipped, marked truncated)
    const int mx = shape.width() * 3 / 10, my = shape.height() * 3 / 10;
    const int x = std::uniform_int_distribution<int>(-mx, w - shape.width() + mx)(rng);
    const int y = std::uniform_int_distribution<int>(-my, h - shape.height() + my)(rng);
    const Rect r = shape.translated(x, y);
    const auto clipped = intersection(r, Rect(0, 0, w, h));
    over.push_back({*clipped, label, *clipped != r});
  }

  const int n_classes = spec.num_classes;
  // Draw order: under..., over..., salient; the salient object is never covered.
  // An object is occluded when >= 25% of it is covered by later objects.
  std::vector<Placed> order = under;
  order.insert(order.end(), over.begin(), over.end());
  order.push_back({sal, class_id, false});
  for (const auto& p : order) paint_texture(img, p.box, class_signature(p.label, n_classes), rng);
  std::vector<ObjectAnnotation> objects;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Rect& box = order[i].box;
    std::vector<std::uint8_t> covered(std::size_t(box.area()), 0);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto inter = intersection(box, order[j].box);
      if (!inter) continue;
      for (int y = inter->y0(); y < inter->y1(); ++y) {
        for (int x = inter->x0(); x < inter->x1(); ++x) {
          covered[std::size_t(y - box.y0()) * box.width() + (x - box.x0())] = 1;
        }
      }
    }
    const auto n_cov = std::count(covered.begin(), covered.end(), std::uint8_t(1));
    objects.push_back({box, order[i].label, 4 * n_cov >= box.area(), order[i].truncated});
  }
  std::shuffle(objects.begin(), objects.end(), rng);

  Scene scene{std::move(img), {}};
  scene.record.label = class_id;
  scene.record.objects = std::move(objects);
  scene.record.salient = select_salient_ground_truth(scene.record.objects, class_id, w, h, rng);
  return scene;
}

SyntheticDataset generate_dataset(const SceneSpec& spec, std::size_t n_train, std::size_t n_test) {
  spec.validate();
  SyntheticDataset data;
  data.train.split = Split::kTrain;
  data.test.split = Split::kTest;
  data.train.num_classes = data.test.num_classes = spec.num_classes;

  const std::size_t total = n_train + n_test;
  std::vector<Scene> scenes;
  scenes.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(scene_seed(spec.seed, i));
    const std::size_t local = i < n_train ? i : i - n_train;
    scenes.push_back(generate_synthetic_scene(spec, int(local % std::size_t(spec.num_classes)), rng));
  }
  for (std::size_t i = 0; i < total; ++i) {
    const bool train = i < n_train;
    auto& scene = scenes[i];
    scene.record.image_path =
        fmt::format("{}/{:06d}.ppm", train ? "train" : "test", train ? i : i - n_train);
    auto& manifest = train ? data.train : data.test;
    auto& images = train ? data.train_images : data.test_images;
    manifest.records.push_back(std::move(scene.record));
    images.push_back(std::move(scene.image));
  }
  return data;
}

void write_dataset(const SyntheticDataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "train");
  fs::create_directories(fs::path(dir) / "test");
  for (const auto* part : {&data.train, &data.test}) {
    const auto& images = part == &data.train ? data.train_images : data.test_images;
    for (std::size_t i = 0; i < part->records.size(); ++i) {
      write_pixmap(images[i], (fs::path(dir) / part->records[i].image_path).string());
    }
  }
  save_manifest(data.train, (fs::path(dir) / "train.manifest").string());
  save_manifest(data.test, (fs::path(dir) / "test.manifest").string());
}

}  // namespace ocs
