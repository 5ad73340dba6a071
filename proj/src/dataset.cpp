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
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "ocs/dataset.hpp"
#include "ocs/error.hpp"

namespace ocs {

const Rect& AnnotationRecord::salient_box() const {
  if (!salient || *salient >= objects.size()) throw std::logic_error("record has no salient object");
  return objects[*salient].box;
}

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::vector<std::string> DatasetManifest::class_names() const {
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) names.push_back("class_" + std::to_string(c));
  return names;
}

std::size_t select_salient_ground_truth(std::span<const ObjectAnnotation> candidates,
                                        int image_label, int image_width, int image_height,
                                        Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].label == image_label) pool.push_back(i);
  }
  if (pool.empty()) throw ConfigError("unlabelable image: no candidate carries the image label");

  // Squared distance from box center to image center, in doubled pixel units (exact integers).
  auto center_dist = [&](const Rect& r) {
    const std::int64_t dx = std::int64_t(r.x0()) + r.x1() - image_width;
    const std::int64_t dy = std::int64_t(r.y0()) + r.y1() - image_height;
    return dx * dx + dy * dy;
  };
  auto key = [&](std::size_t i) {
    const auto& c = candidates[i];
    return std::tuple(c.occluded, -c.box.area(), center_dist(c.box));
  };
  const auto best = key(*std::min_element(pool.begin(), pool.end(),
                                          [&](std::size_t a, std::size_t b) { return key(a) < key(b); }));
  std::erase_if(pool, [&](std::size_t i) { return key(i) != best; });
  if (pool.size() == 1) return pool.front();

  std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = candidates[a];
    const auto& cb = candidates[b];
    if (ca.box != cb.box) return rect_less(ca.box, cb.box);
    return std::tuple(ca.occluded, ca.truncated) < std::tuple(cb.occluded, cb.truncated);
  });
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

void save_manifest(const DatasetManifest& manifest, std::ostream& os) {
  os << "OCSMANIFEST v1 " << split_name(manifest.split) << ' ' << manifest.num_classes << '\n';
  for (const auto& r : manifest.records) {
    os << r.image_path << '\t' << r.label << '\t'
       << (r.salient ? std::to_string(*r.salient) : std::string("-1")) << '\t' << r.objects.size();
    for (const auto& o : r.objects) {
      os << '\t' << o.box.x0() << ',' << o.box.y0() << ',' << o.box.x1() << ',' << o.box.y1() << ','
         << o.label << ',' << int(o.occluded) << ',' << int(o.truncated);
    }
    os << '\n';
  }
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_manifest(manifest, os);
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

long long parse_int(const std::string& s, const char* what, int line) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw FormatError(std::string("bad integer for ") + what + ": '" + s + "'", line);
  }
  return v;
}

}  // namespace

DatasetManifest load_manifest(std::istream& is, const std::optional<std::string>& image_root) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty manifest", 1);
  DatasetManifest m;
  {
    std::istringstream hs(line);
    std::string magic, version, split, extra;
    int classes = 0;
    if (!(hs >> magic >> version >> split >> classes) || magic != "OCSMANIFEST" || version != "v1") {
      throw FormatError("expected 'OCSMANIFEST v1 <split> <num_classes>'", 1);
    }
    if (hs >> extra) throw FormatError("unexpected header field '" + extra + "'", 1);
    if (split == "train") {
      m.split = Split::kTrain;
    } else if (split == "test") {
      m.split = Split::kTest;
    } else {
      throw FormatError("unknown split '" + split + "'", 1);
    }
    if (classes < 1) throw FormatError("num_classes must be >= 1", 1);
    m.num_classes = classes;
  }

  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) throw FormatError("empty record line", line_no);
    const auto fields = split_on(line, '\t');
    if (fields.size() < 4) throw FormatError("record needs at least 4 fields", line_no);
    AnnotationRecord r;
    r.image_path = fields[0];
    if (r.image_path.empty()) throw FormatError("empty image path", line_no);
    r.label = int(parse_int(fields[1], "label", line_no));
    if (r.label < 0 || r.label >= m.num_classes) throw FormatError("label out of range", line_no);
    const long long salient = parse_int(fields[2], "salient index", line_no);
    const long long n = parse_int(fields[3], "object count", line_no);
    if (n < 0) throw FormatError("negative object count", line_no);
    if (fields.size() != 4 + std::size_t(n)) {
      throw FormatError("expected " + std::to_string(n) + " objects, found " +
                            std::to_string(fields.size() - 4) + " fields",
                        line_no);
    }
    for (long long k = 0; k < n; ++k) {
      const auto parts = split_on(fields[4 + std::size_t(k)], ',');
      if (parts.size() != 7) throw FormatError("object needs 7 comma-separated values", line_no);
      int v[7];
      for (int j = 0; j < 7; ++j) v[j] = int(parse_int(parts[std::size_t(j)], "object value", line_no));
      if (v[0] < 0 || v[1] < 0 || v[0] >= v[2] || v[1] >= v[3]) {
        throw FormatError("invalid or out-of-bounds box", line_no);
      }
      if (v[4] < 0 || v[4] >= m.num_classes) throw FormatError("object label out of range", line_no);
      if ((v[5] != 0 && v[5] != 1) || (v[6] != 0 && v[6] != 1)) {
        throw FormatError("occluded/truncated flags must be 0 or 1", line_no);
      }
      r.objects.push_back({Rect(v[0], v[1], v[2], v[3]), v[4], v[5] == 1, v[6] == 1});
    }
    if (salient >= 0) {
      if (salient >= n) throw FormatError("salient index out of range", line_no);
      r.salient = std::size_t(salient);
      if (r.objects[r.salient.value()].label != r.label) {
        throw FormatError("salient object label differs from image label", line_no);
      }
    } else if (salient != -1) {
      throw FormatError("salient index must be -1 or an object index", line_no);
    }
    if (image_root) {
      const auto path = (std::filesystem::path(*image_root) / r.image_path).string();
      PixmapInfo info;
      try {
        info = read_pixmap_info(path);
      } catch (const std::exception& e) {
        throw FormatError(std::string("cannot read image: ") + e.what(), line_no);
      }
      const Rect bounds(0, 0, info.width, info.height);
      for (const auto& o : r.objects) {
        if (!bounds.contains(o.box)) throw FormatError("box outside image bounds", line_no);
      }
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const std::string& path, bool verify_images) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::optional<std::string> root;
  if (verify_images) root = std::filesystem::path(path).parent_path().string();
  return load_manifest(is, root);
}

std::vector<ImageBuffer> load_images(const DatasetManifest& manifest, const std::string& image_root) {
  std::vector<ImageBuffer> images;
  images.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    images.push_back(read_pixmap((std::filesystem::path(image_root) / r.image_path).string()));
  }
  return images;
}

// ---------------------------------------------------------------------------
// Pixmaps
// ---------------------------------------------------------------------------

namespace {

int read_header_int(std::istream& is) {
  // skip whitespace and comments
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(is, ignored);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v = -1;
  if (!(is >> v) || v < 0) throw FormatError("bad pixmap header");
  return v;
}

PixmapInfo read_header(std::istream& is) {
  char magic[2] = {};
  if (!is.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError("not a binary pixmap (P5/P6)");
  }
  PixmapInfo info;
  info.channels = magic[1] == '5' ? 1 : 3;
  info.width = read_header_int(is);
  info.height = read_header_int(is);
  const int maxval = read_header_int(is);
  if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval) + " (need 255)");
  if (info.width < 1 || info.height < 1) throw FormatError("pixmap must be at least 1x1");
  if (!std::isspace(is.get())) throw FormatError("missing whitespace after pixmap header");
  return info;
}

}  // namespace

ImageBuffer read_pixmap(std::istream& is) {
  const auto info = read_header(is);
  std::vector<std::uint8_t> pixels(std::size_t(info.width) * info.height * info.channels);
  if (!is.read(reinterpret_cast<char*>(pixels.data()), std::streamsize(pixels.size()))) {
    throw FormatError("truncated pixmap payload");
  }
  return ImageBuffer(info.width, info.height, info.channels, std::move(pixels));
}

ImageBuffer read_pixmap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_pixmap(is);
}

PixmapInfo read_pixmap_info(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_header(is);
}

void write_pixmap(const ImageBuffer& img, std::ostream& os) {
  os << (img.channels() == 1 ? "P5" : "P6") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  const auto px = img.pixels();
  os.write(reinterpret_cast<const char*>(px.data()), std::streamsize(px.size()));
}

void write_pixmap(const ImageBuffer& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_pixmap(img, os);
}

}  // namespace ocs
