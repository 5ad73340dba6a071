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

#include "ocs/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ocs {

void SamplerConfig::validate() const {
  if (crop_size < 1) throw std::invalid_argument("crop_size must be >= 1");
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw std::invalid_argument("flip_probability must lie in [0, 1]");
  }
}

OverlapProfile overlap_profile(int extent, int crop, int object_lo, int object_hi) {
  if (crop < 1) throw std::invalid_argument("crop must be >= 1");
  if (crop > extent) {
    throw std::invalid_argument("crop exceeds image (" + std::to_string(crop) + " > " +
                                std::to_string(extent) + ")");
  }
  if (object_lo < 0 || object_lo >= object_hi || object_hi > extent) {
    throw std::invalid_argument("object interval must satisfy 0 <= lo < hi <= extent");
  }
  OverlapProfile p;
  p.extent = extent;
  p.crop = crop;
  p.weights.resize(std::size_t(extent - crop + 1));
  for (int k = 0; k <= extent - crop; ++k) {
    p.weights[k] = std::max(0, std::min(k + crop, object_hi) - std::max(k, object_lo));
  }
  return p;
}

namespace {

std::vector<std::int64_t> prefix_sums(const std::vector<std::int64_t>& w) {
  std::vector<std::int64_t> cdf(w.size());
  std::int64_t run = 0;
  for (std::size_t i = 0; i < w.size(); ++i) cdf[i] = run += w[i];
  return cdf;
}

}  // namespace

std::int64_t CropDistribution::joint_weight(int x, int y) const {
  if (x < 0 || y < 0 || x >= positions_x() || y >= positions_y()) return 0;
  if (fallback_uniform_) return 1;
  const std::int64_t w = x_profile_.weights[x] * y_profile_.weights[y];
  return w < tau_ ? 0 : w;
}

double CropDistribution::probability(int x, int y) const {
  if (fallback_uniform_) {
    if (x < 0 || y < 0 || x >= positions_x() || y >= positions_y()) return 0.0;
    return 1.0 / (double(positions_x()) * positions_y());
  }
  return double(joint_weight(x, y)) / double(total_weight_);
}

CropDistribution build_crop_distribution(int image_width, int image_height,
                                         const std::optional<Rect>& detection,
                                         const SamplerConfig& cfg) {
  cfg.validate();
  const int s = cfg.crop_size;
  if (image_width < s || image_height < s) {
    throw std::invalid_argument("image " + std::to_string(image_width) + "x" +
                                std::to_string(image_height) + " is smaller than crop " +
                                std::to_string(s));
  }
  CropDistribution d;
  d.image_width_ = image_width;
  d.image_height_ = image_height;
  d.crop_size_ = s;
  d.tau_ = cfg.tau;

  const auto object =
      detection ? intersection(*detection, Rect(0, 0, image_width, image_height)) : std::nullopt;
  if (!object) {
    d.fallback_uniform_ = true;
    return d;
  }

  d.x_profile_ = overlap_profile(image_width, s, object->x0(), object->x1());
  d.y_profile_ = overlap_profile(image_height, s, object->y0(), object->y1());
  d.x_cdf_ = prefix_sums(d.x_profile_.weights);

  if (cfg.tau <= 1) {
    // Every positive joint weight is >= 1, so only zero-overlap positions are dropped,
    // and those already carry zero weight.
    d.y_cdf_ = prefix_sums(d.y_profile_.weights);
    d.total_weight_ = d.x_cdf_.back() * d.y_cdf_.back();
  } else {
    const auto& wx = d.x_profile_.weights;
    const int nx = int(wx.size());
    std::vector<std::int64_t> row_mass(d.y_profile_.weights.size(), 0);
    d.row_x_range_.assign(row_mass.size(), {0, -1});
    for (std::size_t y = 0; y < row_mass.size(); ++y) {
      const std::int64_t wy = d.y_profile_.weights[y];
      if (wy == 0) continue;
      const std::int64_t need = (cfg.tau + wy - 1) / wy;
      int lo = 0;
      while (lo < nx && wx[lo] < need) ++lo;
      int hi = nx - 1;
      while (hi >= lo && wx[hi] < need) --hi;
      if (lo > hi) continue;
      d.row_x_range_[y] = {lo, hi};
      row_mass[y] = wy * (d.x_cdf_[hi] - (lo > 0 ? d.x_cdf_[lo - 1] : 0));
    }
    d.y_cdf_ = prefix_sums(row_mass);
    d.total_weight_ = d.y_cdf_.back();
  }

  if (d.total_weight_ == 0) {
    d.fallback_uniform_ = true;
    d.row_x_range_.clear();
  }
  return d;
}

std::size_t cdf_search(std::span<const std::int64_t> cdf, std::int64_t u) {
  return std::size_t(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

std::pair<int, int> sample_position(const CropDistribution& dist, Rng& rng) {
  if (dist.fallback_uniform_) {
    std::uniform_int_distribution<int> ux(0, dist.positions_x() - 1);
    std::uniform_int_distribution<int> uy(0, dist.positions_y() - 1);
    const int x = ux(rng);
    return {x, uy(rng)};
  }
  std::uniform_int_distribution<std::int64_t> draw_y(0, dist.y_cdf_.back() - 1);
  const int y = int(cdf_search(dist.y_cdf_, draw_y(rng)));
  if (dist.row_x_range_.empty()) {
    std::uniform_int_distribution<std::int64_t> draw_x(0, dist.x_cdf_.back() - 1);
    return {int(cdf_search(dist.x_cdf_, draw_x(rng))), y};
  }
  const auto [lo, hi] = dist.row_x_range_[y];
  const std::int64_t base = lo > 0 ? dist.x_cdf_[lo - 1] : 0;
  std::uniform_int_distribution<std::int64_t> draw_x(0, dist.x_cdf_[hi] - base - 1);
  const std::int64_t u = base + draw_x(rng);
  const auto run = std::span<const std::int64_t>(dist.x_cdf_).subspan(lo, hi - lo + 1);
  return {lo + int(cdf_search(run, u)), y};
}

std::vector<CropSample> sample_training_crops(const CropDistribution& dist, std::size_t count,
                                              const SamplerConfig& cfg, Rng& rng,
                                              std::size_t image_id) {
  cfg.validate();
  std::vector<CropSample> out;
  out.reserve(count);
  std::bernoulli_distribution flip(cfg.flip_probability);
  for (std::size_t i = 0; i < count; ++i) {
    const auto [x, y] = sample_position(dist, rng);
    out.push_back({x, y, flip(rng), image_id});
  }
  return out;
}

ProbabilityMap export_probability_map(const CropDistribution& dist) {
  ProbabilityMap m;
  m.columns = dist.positions_x();
  m.rows = dist.positions_y();
  m.values.resize(std::size_t(m.columns) * m.rows);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.columns; ++x) m.values[std::size_t(y) * m.columns + x] = dist.probability(x, y);
  }
  return m;
}

ImageBuffer probability_map_image(const ProbabilityMap& map) {
  ImageBuffer img(map.columns, map.rows, 1);
  const double peak = *std::max_element(map.values.begin(), map.values.end());
  for (int y = 0; y < map.rows; ++y) {
    for (int x = 0; x < map.columns; ++x) {
      const double v = peak > 0.0 ? map.at(x, y) / peak : 0.0;
      img.at(x, y) = std::uint8_t(std::lround(255.0 * v));
    }
  }
  return img;
}

}  // namespace ocs
