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

#include "ocs/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "ocs/detector.hpp"
#include "ocs/error.hpp"
#include "ocs/kernels.hpp"

namespace ocs {

CropFeature extract_crop_feature_at(const ImageBuffer& img, int x, int y, int s, bool flipped) {
  if (s < kGridSide) throw std::invalid_argument("crop size must be >= 16");
  if (!img.bounds().contains(Rect::from_size(x, y, s, s))) {
    throw std::out_of_range("crop outside image");
  }
  // column -> thumbnail column, mirrored for flipped crops
  std::vector<int> col_block(static_cast<std::size_t>(s));
  for (int c = 0; c < s; ++c) {
    const int src = flipped ? s - 1 - c : c;
    col_block[std::size_t(src)] = c * kGridSide / s;
  }
  std::array<std::int64_t, kGridSide * kGridSide> block{};
  std::array<std::int64_t, 3 * kHistBins> hist{};
  std::array<std::int64_t, kGridSide> block_count_x{}, block_count_y{};
  for (int c = 0; c < s; ++c) ++block_count_x[std::size_t(c * kGridSide / s)];
  for (int r = 0; r < s; ++r) ++block_count_y[std::size_t(r * kGridSide / s)];

  const int ch = img.channels();
  for (int r = 0; r < s; ++r) {
    const auto row = img.row(y + r).subspan(std::size_t(x) * ch, std::size_t(s) * ch);
    std::int64_t* brow = block.data() + std::size_t(r * kGridSide / s) * kGridSide;
    if (ch == 3) {
      for (int c = 0; c < s; ++c) {
        const int rv = row[3 * c], gv = row[3 * c + 1], bv = row[3 * c + 2];
        brow[col_block[std::size_t(c)]] += rv + gv + bv;
        ++hist[std::size_t(rv >> 5)];
        ++hist[std::size_t(kHistBins + (gv >> 5))];
        ++hist[std::size_t(2 * kHistBins + (bv >> 5))];
      }
    } else {
      for (int c = 0; c < s; ++c) {
        const int v = row[std::size_t(c)];
        brow[col_block[std::size_t(c)]] += 3 * v;
        for (int k = 0; k < 3; ++k) ++hist[std::size_t(k * kHistBins + (v >> 5))];
      }
    }
  }

  CropFeature f{};
  for (int by = 0; by < kGridSide; ++by) {
    for (int bx = 0; bx < kGridSide; ++bx) {
      const double n = double(block_count_x[std::size_t(bx)]) * block_count_y[std::size_t(by)];
      f[std::size_t(by * kGridSide + bx)] = double(block[std::size_t(by * kGridSide + bx)]) / (3.0 * 255.0 * n);
    }
  }
  const double pixels = double(s) * s;
  for (int k = 0; k < 3 * kHistBins; ++k) {
    f[std::size_t(kGridSide * kGridSide + k)] = double(hist[std::size_t(k)]) / pixels;
  }
  return f;
}

CropFeature extract_crop_feature(const ImageBuffer& crop, int crop_size) {
  if (crop.width() != crop_size || crop.height() != crop_size) {
    throw std::invalid_argument(fmt::format("crop must be {0}x{0}, got {1}x{2}", crop_size,
                                            crop.width(), crop.height()));
  }
  return extract_crop_feature_at(crop, 0, 0, crop_size, false);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

ClassifierModel ClassifierModel::zeros(int classes, int dims) {
  if (classes < 1 || dims < 1) throw std::invalid_argument("classifier needs classes >= 1, dims >= 1");
  ClassifierModel m;
  m.classes = classes;
  m.dims = dims;
  m.weights.assign(std::size_t(classes) * (dims + 1), 0.0);
  return m;
}

namespace {

void softmax_inplace(std::vector<double>& z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) sum += v = std::exp(v - peak);
  for (auto& v : z) v /= sum;
}

}  // namespace

std::vector<double> ClassifierModel::predict_proba(std::span<const double> feature) const {
  if (int(feature.size()) != dims) throw std::invalid_argument("feature dimension mismatch");
  std::vector<double> z(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    const double* w = weights.data() + std::size_t(c) * (dims + 1);
    double v = w[dims];
    for (int j = 0; j < dims; ++j) v += w[j] * feature[std::size_t(j)];
    z[std::size_t(c)] = v;
  }
  softmax_inplace(z);
  return z;
}

void save_classifier(const ClassifierModel& model, std::ostream& os) {
  os << "OCSCLS v1 " << model.classes << ' ' << model.dims << '\n';
  for (int c = 0; c < model.classes; ++c) {
    for (int j = 0; j <= model.dims; ++j) {
      if (j) os << ' ';
      os << fmt::format("{:.9g}", model.weights[std::size_t(c) * (model.dims + 1) + j]);
    }
    os << '\n';
  }
}

ClassifierModel load_classifier(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty classifier file", 1);
  std::istringstream hs(line);
  std::string magic, version, extra;
  int classes = 0, dims = 0;
  if (!(hs >> magic >> version >> classes >> dims) || magic != "OCSCLS" || version != "v1" ||
      classes < 1 || dims < 1 || (hs >> extra)) {
    throw FormatError("expected 'OCSCLS v1 <classes> <dims>'", 1);
  }
  auto m = ClassifierModel::zeros(classes, dims);
  for (int c = 0; c < classes; ++c) {
    if (!std::getline(is, line)) throw FormatError("missing weight row", c + 2);
    std::istringstream rs(line);
    for (int j = 0; j <= dims; ++j) {
      std::string tok;
      if (!(rs >> tok)) throw FormatError("short weight row", c + 2);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0') throw FormatError("bad weight '" + tok + "'", c + 2);
      m.weights[std::size_t(c) * (dims + 1) + j] = v;
    }
    if (rs >> extra) throw FormatError("long weight row", c + 2);
  }
  if (std::getline(is, line) && !line.empty()) throw FormatError("trailing content", classes + 2);
  return m;
}

void save_classifier(const ClassifierModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_classifier(model, os);
}

ClassifierModel load_classifier(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_classifier(is);
}

const char* sampler_mode_name(SamplerMode m) {
  return m == SamplerMode::kUniform ? "uniform" : "multinomial";
}

SamplerMode parse_sampler_mode(const std::string& s) {
  if (s == "uniform") return SamplerMode::kUniform;
  if (s == "multinomial") return SamplerMode::kMultinomial;
  throw std::invalid_argument("sampler must be 'uniform' or 'multinomial', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ClassifierModel train_classifier(std::span<const ImageBuffer> images, std::span<const int> labels,
                                 std::span<const std::optional<Rect>> detections, int classes,
                                 const TrainConfig& cfg, TrainReport* report,
                                 const CropObserver& observer) {
  if (labels.size() != images.size()) throw std::invalid_argument("one label per image");
  if (!detections.empty() && detections.size() != images.size()) {
    throw std::invalid_argument("detections must be empty or one per image");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ConfigError("class label " + std::to_string(y) + " outside model range");
  }
  if (cfg.epochs < 0 || cfg.crops_per_image < 0 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0) {
    throw ConfigError("invalid training configuration");
  }
  cfg.crops.validate();
  const int s = cfg.crops.crop_size;
  if (cfg.resize_to < s) throw ConfigError("resize_to must be >= crop size");

  auto model = ClassifierModel::zeros(classes);
  const int dims = model.dims;
  const std::size_t stride = std::size_t(dims) + 1;
  Rng rng(cfg.seed);

  std::vector<const CropFeature*> batch_f;
  std::vector<int> batch_y;
  std::vector<CropFeature> pending_f;
  std::vector<int> pending_y;
  std::vector<double> grad(model.weights.size());
  std::vector<double> z(static_cast<std::size_t>(classes));

  auto step = [&](std::size_t begin, std::size_t end) -> double {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& f = pending_f[i];
      for (int c = 0; c < classes; ++c) {
        const double* w = model.weights.data() + std::size_t(c) * stride;
        double v = w[dims];
        for (int j = 0; j < dims; ++j) v += w[j] * f[std::size_t(j)];
        z[std::size_t(c)] = v;
      }
      softmax_inplace(z);
      const int y = pending_y[i];
      loss -= std::log(std::max(z[std::size_t(y)], 1e-300));
      for (int c = 0; c < classes; ++c) {
        const double g = z[std::size_t(c)] - (c == y ? 1.0 : 0.0);
        double* gr = grad.data() + std::size_t(c) * stride;
        for (int j = 0; j < dims; ++j) gr[j] += g * f[std::size_t(j)];
        gr[dims] += g;
      }
    }
    const double n = double(end - begin);
    double reg = 0.0;
    for (int c = 0; c < classes; ++c) {
      double* w = model.weights.data() + std::size_t(c) * stride;
      const double* gr = grad.data() + std::size_t(c) * stride;
      for (int j = 0; j < dims; ++j) {
        reg += w[j] * w[j];
        w[j] -= cfg.learning_rate * (gr[j] / n + cfg.l2 * w[j]);
      }
      w[dims] -= cfg.learning_rate * gr[dims] / n;
    }
    return loss / n + 0.5 * cfg.l2 * reg;
  };

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    pending_f.clear();
    pending_y.clear();
    for (std::size_t idx : order) {
      const ImageBuffer& src = images[idx];
      const auto [rw, rh] = shorter_side_size(src.width(), src.height(), cfg.resize_to);
      std::optional<ImageBuffer> resized;
      if (rw != src.width() || rh != src.height()) resized = resize_bilinear(src, rw, rh);
      const ImageBuffer& img = resized ? *resized : src;

      std::optional<Rect> det;
      if (cfg.sampler == SamplerMode::kMultinomial && !detections.empty() && detections[idx]) {
        det = scale_rect(*detections[idx], src.width(), src.height(), rw, rh);
      }
      const auto dist = build_crop_distribution(rw, rh, det, cfg.crops);
      const auto crops = sample_training_crops(dist, std::size_t(cfg.crops_per_image), cfg.crops, rng, idx);
      if (observer) observer(idx, dist, crops);
      for (auto& f : kernels::crop_features(img, crops, s, kernels::Exec::kParallel)) {
        pending_f.push_back(f);
        pending_y.push_back(labels[idx]);
      }
    }
    // Crops are shuffled across images before batching, deterministically.
    std::vector<std::size_t> perm(pending_f.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    {
      std::vector<CropFeature> f2(pending_f.size());
      std::vector<int> y2(pending_y.size());
      for (std::size_t i = 0; i < perm.size(); ++i) {
        f2[i] = pending_f[perm[i]];
        y2[i] = pending_y[perm[i]];
      }
      pending_f.swap(f2);
      pending_y.swap(y2);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < pending_f.size(); b += std::size_t(cfg.batch_size)) {
      loss_sum += step(b, std::min(pending_f.size(), b + std::size_t(cfg.batch_size)));
      ++batches;
    }
    if (report) report->epoch_loss.push_back(batches ? loss_sum / double(batches) : 0.0);
  }
  for (auto& w : model.weights) w = quantize9(w);
  return model;
}

// ---------------------------------------------------------------------------
// Test-time ensemble and metrics
// ---------------------------------------------------------------------------

std::array<std::pair<int, int>, 5> five_crop_positions(int width, int height, int s) {
  if (width < s || height < s) throw std::invalid_argument("image smaller than crop");
  return {{{0, 0}, {width - s, 0}, {0, height - s}, {width - s, height - s},
           {(width - s) / 2, (height - s) / 2}}};
}

std::vector<double> average_probabilities(std::span<const std::vector<double>> per_crop) {
  if (per_crop.empty()) throw std::invalid_argument("no crops to average");
  std::vector<double> avg(per_crop.front().size(), 0.0);
  for (const auto& p : per_crop) {
    for (std::size_t c = 0; c < avg.size(); ++c) avg[c] += p[c];
  }
  for (auto& v : avg) v /= double(per_crop.size());
  return avg;
}

TestTimePrediction predict_test_time(const ClassifierModel& model, const ImageBuffer& img,
                                     const std::optional<Rect>& detection, int resize_to, int s) {
  std::vector<ImageBuffer> sources;
  sources.push_back(resize_shorter_side(img, resize_to));
  if (detection) {
    if (const auto region = intersection(*detection, img.bounds())) {
      sources.push_back(resize_shorter_side(crop_image(img, *region), resize_to));
    }
  }
  std::vector<std::vector<double>> per_crop;
  for (const auto& src : sources) {
    std::vector<CropSample> crops;
    for (const auto& [x, y] : five_crop_positions(src.width(), src.height(), s)) {
      crops.push_back({x, y, false, 0});
      crops.push_back({x, y, true, 0});
    }
    for (const auto& f : kernels::crop_features(src, crops, s, kernels::Exec::kParallel)) {
      per_crop.push_back(model.predict_proba(f));
    }
  }
  return {average_probabilities(per_crop), int(per_crop.size())};
}

double topk_accuracy(std::span<const std::vector<double>> predictions, std::span<const int> labels, int k) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("one label per prediction");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (int(p.size()) < k) throw std::invalid_argument("prediction dimension smaller than k");
    const int y = labels[i];
    int ahead = 0;  // classes ranked strictly before the true one
    for (int c = 0; c < int(p.size()); ++c) {
      if (p[std::size_t(c)] > p[std::size_t(y)] || (p[std::size_t(c)] == p[std::size_t(y)] && c < y)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return double(hits) / double(predictions.size());
}

}  // namespace ocs
