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

#include "ocs/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

namespace ocs {

Rect::Rect(int x0, int y0, int x1, int y1) : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (x0 >= x1 || y0 >= y1) {
    throw std::invalid_argument("Rect requires positive area: [" + std::to_string(x0) + "," +
                                std::to_string(x1) + ")x[" + std::to_string(y0) + "," +
                                std::to_string(y1) + ")");
  }
}

std::ostream& operator<<(std::ostream& os, const Rect& r) {
  return os << "[" << r.x0() << "," << r.x1() << ")x[" << r.y0() << "," << r.y1() << ")";
}

std::int64_t intersect_area(const Rect& a, const Rect& b) {
  const std::int64_t w = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const std::int64_t h = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

std::optional<Rect> intersection(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x0(), b.x0());
  const int y0 = std::max(a.y0(), b.y0());
  const int x1 = std::min(a.x1(), b.x1());
  const int y1 = std::min(a.y1(), b.y1());
  if (x0 >= x1 || y0 >= y1) return std::nullopt;
  return Rect(x0, y0, x1, y1);
}

double iou(const Rect& a, const Rect& b) {
  const std::int64_t inter = intersect_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  return double(inter) / double(uni);
}

Rect mirror_horizontal(const Rect& r, int image_width) {
  return Rect(image_width - r.x1(), r.y0(), image_width - r.x0(), r.y1());
}

bool rect_less(const Rect& a, const Rect& b) {
  return std::tuple(a.x0(), a.y0(), a.x1(), a.y1()) < std::tuple(b.x0(), b.y0(), b.x1(), b.y1());
}

}  // namespace ocs
