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
#include <random>

#include "ocs/geometry.hpp"
#include "ocs/image.hpp"

namespace ocs::testing {

inline ImageBuffer random_image(int w, int h, int channels, std::mt19937_64& rng) {
  ImageBuffer img(w, h, channels);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& v : img.pixels()) v = std::uint8_t(px(rng));
  return img;
}

inline ImageBuffer constant_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageBuffer img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

/// Uniformly random rect inside [0, w) x [0, h).
inline Rect random_rect(int w, int h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ax(0, w - 1), ay(0, h - 1);
  int x0 = ax(rng), x1 = ax(rng), y0 = ay(rng), y1 = ay(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return Rect(x0, y0, x1 + 1, y1 + 1);
}

}  // namespace ocs::testing
