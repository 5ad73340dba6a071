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
#include <span>
#include <vector>

#include "ocs/geometry.hpp"

namespace ocs {

/**
 * 8-bit raster, row-major, channel-interleaved. Channels is 1 (gray) or 3 (RGB).
 */
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, int channels);
  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Rect bounds() const { return Rect(0, 0, width_, height_); }

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[(std::size_t(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[(std::size_t(y) * width_ + x) * channels_ + c];
  }

  /// Samples of row y (width * channels bytes).
  std::span<const std::uint8_t> row(int y) const {
    return {pixels_.data() + std::size_t(y) * width_ * channels_, std::size_t(width_) * channels_};
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_;
  int height_;
  int channels_;
  std::vector<std::uint8_t> pixels_;
};

/**
 * Summed-area table with a zero first row and column; one table per channel.
 *
 * Works over any per-pixel integer plane, not just raw samples: the detector
 * builds tables over gradient magnitudes with from_planes().
 */
class IntegralImage {
 public:
  IntegralImage() = default;

  /// Tables over the raw samples of img.
  explicit IntegralImage(const ImageBuffer& img);

  /// Tables over `channels` planes of width x height values, plane-major.
  static IntegralImage from_planes(int width, int height, int channels,
                                   std::span<const std::int32_t> planes);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  /// Table entry: sum over [0, x) x [0, y) for channel c.
  std::int64_t table(int x, int y, int c = 0) const {
    return tables_[(std::size_t(c) * (height_ + 1) + y) * (width_ + 1) + x];
  }

  /// Sum of channel c over r; r must lie inside the image.
  std::int64_t sum(const Rect& r, int c = 0) const {
    return table(r.x1(), r.y1(), c) - table(r.x0(), r.y1(), c) - table(r.x1(), r.y0(), c) +
           table(r.x0(), r.y0(), c);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::int64_t> tables_;
};

/// Integral image of img. Equivalent to IntegralImage(img).
IntegralImage integral_image(const ImageBuffer& img);

/**
 * Bilinear resize so that the shorter side equals target exactly.
 * The long side becomes round-half-up(long * target / short), at least 1.
 * Returns a copy when the shorter side already equals target.
 */
ImageBuffer resize_shorter_side(const ImageBuffer& img, int target);

/// Output size of resize_shorter_side for a w x h input: {width, height}.
std::pair<int, int> shorter_side_size(int width, int height, int target);

/// Bilinear resize to an explicit size (pixel-center aligned).
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_width, int out_height);

ImageBuffer flip_horizontal(const ImageBuffer& img);

/// Copy of the pixels under r. Throws std::out_of_range if r leaves the image.
ImageBuffer crop_image(const ImageBuffer& img, const Rect& r);

/// Maps a rectangle through a resize from (src_w, src_h) to (dst_w, dst_h),
/// rounding to the nearest pixel and keeping at least one pixel per side.
Rect scale_rect(const Rect& r, int src_w, int src_h, int dst_w, int dst_h);

/// Gray value of pixel (x, y): the sample for 1 channel, (r+g+b)/3 (truncated) for 3.
inline int gray_at(const ImageBuffer& img, int x, int y) {
  if (img.channels() == 1) return img.at(x, y);
  return (int(img.at(x, y, 0)) + img.at(x, y, 1) + img.at(x, y, 2)) / 3;
}

}  // namespace ocs
