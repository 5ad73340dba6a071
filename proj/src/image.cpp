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

#include "ocs/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ocs {

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : ImageBuffer(width, height, channels,
                  std::vector<std::uint8_t>(std::size_t(std::max(width, 0)) *
                                            std::max(height, 0) * std::max(channels, 0))) {}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw std::invalid_argument("image must be at least 1x1");
  if (channels != 1 && channels != 3) throw std::invalid_argument("image channels must be 1 or 3");
  if (pixels_.size() != std::size_t(width) * height * channels) {
    throw std::invalid_argument("pixel count " + std::to_string(pixels_.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height) + "x" + std::to_string(channels));
  }
}

IntegralImage::IntegralImage(const ImageBuffer& img)
    : width_(img.width()), height_(img.height()), channels_(img.channels()) {
  const std::size_t stride = std::size_t(width_) + 1;
  const std::size_t plane = stride * (height_ + 1);
  tables_.assign(plane * channels_, 0);
  for (int c = 0; c < channels_; ++c) {
    std::int64_t* t = tables_.data() + plane * c;
    for (int y = 0; y < height_; ++y) {
      const auto row = img.row(y);
      std::int64_t run = 0;
      std::int64_t* above = t + stride * y;
      std::int64_t* cur = t + stride * (y + 1);
      for (int x = 0; x < width_; ++x) {
        run += row[std::size_t(x) * channels_ + c];
        cur[x + 1] = above[x + 1] + run;
      }
    }
  }
}

IntegralImage IntegralImage::from_planes(int width, int height, int channels,
                                         std::span<const std::int32_t> planes) {
  if (planes.size() != std::size_t(width) * height * channels) {
    throw std::invalid_argument("plane data size mismatch");
  }
  IntegralImage ii;
  ii.width_ = width;
  ii.height_ = height;
  ii.channels_ = channels;
  const std::size_t stride = std::size_t(width) + 1;
  const std::size_t plane = stride * (height + 1);
  ii.tables_.assign(plane * channels, 0);
  for (int c = 0; c < channels; ++c) {
    std::int64_t* t = ii.tables_.data() + plane * c;
    const std::int32_t* src = planes.data() + std::size_t(c) * width * height;
    for (int y = 0; y < height; ++y) {
      std::int64_t run = 0;
      for (int x = 0; x < width; ++x) {
        run += src[std::size_t(y) * width + x];
        t[stride * (y + 1) + x + 1] = t[stride * y + x + 1] + run;
      }
    }
  }
  return ii;
}

IntegralImage integral_image(const ImageBuffer& img) { return IntegralImage(img); }

std::pair<int, int> shorter_side_size(int width, int height, int target) {
  if (target < 1) throw std::invalid_argument("resize target must be >= 1");
  // round-half-up of long * target / short, in integers
  auto scaled = [target](int len, int shorter) {
    const std::int64_t num = 2 * std::int64_t(len) * target + shorter;
    return int(std::max<std::int64_t>(1, num / (2 * std::int64_t(shorter))));
  };
  if (width <= height) return {target, width == height ? target : scaled(height, width)};
  return {scaled(width, height), target};
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_width, int out_height) {
  if (out_width == img.width() && out_height == img.height()) return img;
  ImageBuffer out(out_width, out_height, img.channels());
  const int ch = img.channels();
  const double sx = double(img.width()) / out_width;
  const double sy = double(img.height()) / out_height;

  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      double src = (i + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, double(n_in - 1));
      const int i0 = int(std::floor(src));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, src - i0};
    }
    return t;
  };
  const auto tx = taps(out_width, img.width(), sx);
  const auto ty = taps(out_height, img.height(), sy);

  for (int y = 0; y < out_height; ++y) {
    const auto r0 = img.row(ty[y].i0);
    const auto r1 = img.row(ty[y].i1);
    const double fy = ty[y].f;
    for (int x = 0; x < out_width; ++x) {
      const auto [x0, x1, fx] = tx[x];
      for (int c = 0; c < ch; ++c) {
        const double top = r0[x0 * ch + c] * (1.0 - fx) + r0[x1 * ch + c] * fx;
        const double bot = r1[x0 * ch + c] * (1.0 - fx) + r1[x1 * ch + c] * fx;
        const double v = top * (1.0 - fy) + bot * fy;
        out.at(x, y, c) = std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

ImageBuffer resize_shorter_side(const ImageBuffer& img, int target) {
  const auto [w, h] = shorter_side_size(img.width(), img.height(), target);
  return resize_bilinear(img, w, h);
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(w - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

ImageBuffer crop_image(const ImageBuffer& img, const Rect& r) {
  if (!img.bounds().contains(r)) {
    throw std::out_of_range("crop rect out of image bounds");
  }
  ImageBuffer out(r.width(), r.height(), img.channels());
  const std::size_t row_bytes = std::size_t(r.width()) * img.channels();
  for (int y = 0; y < r.height(); ++y) {
    const auto src = img.row(r.y0() + y).subspan(std::size_t(r.x0()) * img.channels(), row_bytes);
    std::copy(src.begin(), src.end(), out.pixels().begin() + std::ptrdiff_t(y * row_bytes));
  }
  return out;
}

Rect scale_rect(const Rect& r, int src_w, int src_h, int dst_w, int dst_h) {
  auto map = [](int v, int src, int dst) {
    return int(std::lround(double(v) * dst / src));
  };
  int x0 = std::clamp(map(r.x0(), src_w, dst_w), 0, dst_w - 1);
  int y0 = std::clamp(map(r.y0(), src_h, dst_h), 0, dst_h - 1);
  int x1 = std::clamp(map(r.x1(), src_w, dst_w), x0 + 1, dst_w);
  int y1 = std::clamp(map(r.y1(), src_h, dst_h), y0 + 1, dst_h);
  return Rect(x0, y0, x1, y1);
}

}  // namespace ocs
