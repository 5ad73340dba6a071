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
#include <ostream>

namespace ocs {

/**
 * Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
 *
 * A Rect always has positive area; the constructor throws
 * std::invalid_argument otherwise, so every Rect in flight is valid.
 */
class Rect {
 public:
  Rect(int x0, int y0, int x1, int y1);

  /// Rect of size w x h with top-left corner (x, y).
  static Rect from_size(int x, int y, int w, int h) { return Rect(x, y, x + w, y + h); }

  int x0() const { return x0_; }
  int y0() const { return y0_; }
  int x1() const { return x1_; }
  int y1() const { return y1_; }
  int width() const { return x1_ - x0_; }
  int height() const { return y1_ - y0_; }
  std::int64_t area() const { return std::int64_t(width()) * height(); }

  /// Center in pixel units (may be fractional).
  double center_x() const { return 0.5 * (x0_ + x1_); }
  double center_y() const { return 0.5 * (y0_ + y1_); }

  bool contains(const Rect& other) const {
    return other.x0_ >= x0_ && other.y0_ >= y0_ && other.x1_ <= x1_ && other.y1_ <= y1_;
  }
  bool contains_point(int x, int y) const { return x >= x0_ && x < x1_ && y >= y0_ && y < y1_; }

  /// Same rect shifted by (dx, dy).
  Rect translated(int dx, int dy) const { return Rect(x0_ + dx, y0_ + dy, x1_ + dx, y1_ + dy); }

  friend bool operator==(const Rect&, const Rect&) = default;

 private:
  int x0_, y0_, x1_, y1_;
};

std::ostream& operator<<(std::ostream& os, const Rect& r);

/// Number of pixels shared by a and b; 0 when disjoint.
std::int64_t intersect_area(const Rect& a, const Rect& b);

/// a ∩ b, or nullopt when it is empty.
std::optional<Rect> intersection(const Rect& a, const Rect& b);

/// Intersection over union, in [0, 1].
double iou(const Rect& a, const Rect& b);

/// Mirror of r inside an image of the given width (column c -> width-1-c).
Rect mirror_horizontal(const Rect& r, int image_width);

/// Lexicographic order on (x0, y0, x1, y1); used for canonical sorting.
bool rect_less(const Rect& a, const Rect& b);

}  // namespace ocs
