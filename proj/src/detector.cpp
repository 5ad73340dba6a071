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

#include "ocs/detector.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "ocs/error.hpp"
#include "ocs/kernels.hpp"

namespace ocs {

double quantize9(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt::format("{:.9g}", v).c_str(), nullptr);
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

void RegionletSpec::validate() const {
  auto ok = [](double a, double b) { return a >= 0.0 && a < b && b <= 1.0; };
  if (!ok(rx0, rx1) || !ok(ry0, ry1)) {
    throw std::invalid_argument("regionlet needs 0 <= r0 < r1 <= 1 on both axes");
  }
  const int f = int(feature);
  if (f < 0 || f >= kFeatureCount) throw std::invalid_argument("unknown feature id");
  if (channel < 0 || channel > 2) throw std::invalid_argument("regionlet channel must be 0..2");
}

FeatureContext::FeatureContext(const ImageBuffer& img) : color_(img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<std::int32_t> gray(std::size_t(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) gray[std::size_t(y) * w + x] = gray_at(img, x, y);
  }
  std::vector<std::int32_t> planes(2 * gray.size(), 0);
  std::int32_t* dx = planes.data();
  std::int32_t* dy = planes.data() + gray.size();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      if (x + 1 < w) dx[i] = std::abs(gray[i + 1] - gray[i]);
      if (y + 1 < h) dy[i] = std::abs(gray[i + w] - gray[i]);
    }
  }
  energy_ = IntegralImage::from_planes(w, h, 2, planes);
}

namespace {

std::pair<int, int> relative_span(int origin, int length, double r0, double r1) {
  int a = origin + int(std::lround(r0 * length));
  int b = origin + int(std::lround(r1 * length));
  if (b <= a) {
    b = a + 1;
    if (b > origin + length) {
      b = origin + length;
      a = b - 1;
    }
  }
  return {a, b};
}

double feature_from_sum(FeatureId f, std::int64_t sum, std::int64_t area) {
  if (f == FeatureId::kMeanIntensity) return double(sum) / (double(area) * 255.0);
  return double(sum) / double(area);
}

int lattice_index(double r) {
  const double scaled = r * kLattice;
  const long k = std::lround(scaled);
  if (std::abs(scaled - double(k)) > 1e-9) {
    throw std::invalid_argument("regionlet coordinate is not on the 1/16 lattice");
  }
  return int(k);
}

}  // namespace

Rect regionlet_rect(const Rect& window, const RegionletSpec& spec) {
  const auto [x0, x1] = relative_span(window.x0(), window.width(), spec.rx0, spec.rx1);
  const auto [y0, y1] = relative_span(window.y0(), window.height(), spec.ry0, spec.ry1);
  return Rect(x0, y0, x1, y1);
}

double extract_feature(const FeatureContext& ctx, const Rect& window, const RegionletSpec& spec) {
  switch (spec.feature) {
    case FeatureId::kLogArea:
      return std::log(double(window.area()));
    case FeatureId::kMeanIntensity: {
      const Rect r = regionlet_rect(window, spec);
      const int c = std::min(spec.channel, ctx.channels() - 1);
      return feature_from_sum(spec.feature, ctx.color().sum(r, c), r.area());
    }
    case FeatureId::kHorizontalEnergy:
    case FeatureId::kVerticalEnergy: {
      const Rect r = regionlet_rect(window, spec);
      const int plane = spec.feature == FeatureId::kHorizontalEnergy ? 0 : 1;
      return feature_from_sum(spec.feature, ctx.energy().sum(r, plane), r.area());
    }
  }
  throw std::invalid_argument("unknown feature id");
}

double extract_feature(const FeatureContext& ctx, const Rect& window,
                       std::span<const RegionletSpec> set) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& spec : set) best = std::max(best, extract_feature(ctx, window, spec));
  return best;
}

WindowDescriptor::WindowDescriptor(const FeatureContext& ctx, const Rect& window)
    : width_(window.width()), height_(window.height()), channels_(ctx.channels()) {
  if (!ctx.bounds().contains(window)) throw std::invalid_argument("window outside image");
  if (width_ < kLattice || height_ < kLattice) {
    throw std::invalid_argument("descriptor window must be at least 16x16");
  }
  for (int k = 0; k < kSide; ++k) {
    ox_[k] = int(std::lround(double(k) / kLattice * width_));
    oy_[k] = int(std::lround(double(k) / kLattice * height_));
  }
  corners_.resize(std::size_t(kPlanes) * kSide * kSide);
  for (int p = 0; p < kPlanes; ++p) {
    for (int j = 0; j < kSide; ++j) {
      for (int i = 0; i < kSide; ++i) {
        const int x = window.x0() + ox_[i];
        const int y = window.y0() + oy_[j];
        const std::int64_t v = p < 3 ? ctx.color().table(x, y, std::min(p, channels_ - 1))
                                     : ctx.energy().table(x, y, p - 3);
        corners_[(std::size_t(p) * kSide + j) * kSide + i] = v;
      }
    }
  }
}

WindowDescriptor::Resolved WindowDescriptor::resolve(const RegionletSpec& spec) {
  Resolved r;
  r.feature = spec.feature;
  r.channel = spec.channel;
  if (spec.feature != FeatureId::kLogArea) {
    r.i0 = lattice_index(spec.rx0);
    r.i1 = lattice_index(spec.rx1);
    r.j0 = lattice_index(spec.ry0);
    r.j1 = lattice_index(spec.ry1);
  }
  return r;
}

double WindowDescriptor::feature(const Resolved& r) const {
  int plane = 0;
  switch (r.feature) {
    case FeatureId::kLogArea: return std::log(double(width_) * height_);
    case FeatureId::kMeanIntensity: plane = std::min(r.channel, channels_ - 1); break;
    case FeatureId::kHorizontalEnergy: plane = 3; break;
    case FeatureId::kVerticalEnergy: plane = 4; break;
  }
  const std::int64_t sum = corner(plane, r.i1, r.j1) - corner(plane, r.i0, r.j1) - corner(plane, r.i1, r.j0) +
                           corner(plane, r.i0, r.j0);
  const std::int64_t area = std::int64_t(ox_[r.i1] - ox_[r.i0]) * (oy_[r.j1] - oy_[r.j0]);
  return feature_from_sum(r.feature, sum, area);
}

double WindowDescriptor::feature(const RegionletSpec& spec) const { return feature(resolve(spec)); }

double WindowDescriptor::feature(std::span<const RegionletSpec> set) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& spec : set) best = std::max(best, feature(spec));
  return best;
}

// ---------------------------------------------------------------------------
// Cascade
// ---------------------------------------------------------------------------

void WeakClassifier::validate() const {
  if (regionlets.empty() || regionlets.size() > 3) {
    throw std::invalid_argument("weak classifier needs 1 to 3 regionlets");
  }
  for (const auto& r : regionlets) r.validate();
  if (alpha_plus == alpha_minus) throw std::invalid_argument("degenerate stump outputs");
}

std::size_t CascadeModel::weak_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.weak.size();
  return n;
}

WindowScore score_window(const CascadeModel& model, const FeatureContext& ctx, const Rect& window,
                         bool early_reject) {
  WindowScore out;
  for (std::size_t k = 0; k < model.stages.size(); ++k) {
    for (const auto& wc : model.stages[k].weak) out.score += wc.evaluate(ctx, window);
    if (early_reject && out.score < model.stages[k].reject_threshold) {
      out.rejected_at = int(k);
      return out;
    }
  }
  return out;
}

Detection detect_max(const CascadeModel& model, const FeatureContext& ctx,
                     std::span<const Rect> proposals) {
  if (proposals.empty()) throw std::invalid_argument("no proposals");
  const auto scores =
      kernels::score_windows(model, ctx, proposals, /*early_reject=*/false, kernels::Exec::kParallel);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return {proposals[best], scores[best]};
}

// ---------------------------------------------------------------------------
// Proposals
// ---------------------------------------------------------------------------

namespace {

std::vector<int> grid_positions(int extent, int window, int stride) {
  std::vector<int> pos;
  for (int p = 0; p + window <= extent; p += stride) pos.push_back(p);
  if (!pos.empty() && pos.back() != extent - window) pos.push_back(extent - window);
  return pos;
}

}  // namespace

std::vector<Rect> generate_proposals(int image_width, int image_height, const ProposalConfig& cfg) {
  std::vector<Rect> out;
  if (image_width < cfg.min_window || image_height < cfg.min_window) return out;
  out.emplace_back(0, 0, image_width, image_height);

  const int shorter = std::min(image_width, image_height);
  std::vector<std::pair<int, int>> shapes;  // (w, h)
  for (double scale : cfg.scales) {
    const int side = int(std::lround(scale * shorter));
    const int short_side = int(std::lround(side * 0.75));
    if (cfg.square) shapes.emplace_back(side, side);
    if (cfg.landscape) shapes.emplace_back(side, short_side);
    if (cfg.portrait) shapes.emplace_back(short_side, side);
  }
  for (const auto& [ww, wh] : shapes) {
    if (ww > image_width || wh > image_height) continue;
    if (std::min(ww, wh) < cfg.min_window) continue;
    const int stride = std::max(1, int(std::lround(cfg.stride_fraction * std::max(ww, wh))));
    for (int y : grid_positions(image_height, wh, stride)) {
      for (int x : grid_positions(image_width, ww, stride)) out.push_back(Rect::from_size(x, y, ww, wh));
    }
  }

  // stable dedupe: keep the first occurrence of every rect
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rect_less(out[a], out[b]); });
  std::vector<bool> keep(out.size(), true);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (out[order[i]] == out[order[i - 1]]) keep[order[i]] = false;
  }
  std::vector<Rect> unique;
  unique.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (keep[i]) unique.push_back(out[i]);
  }
  return unique;
}

SamplePartition partition_training_samples(std::span<const Rect> proposals, const Rect& gt,
                                           double positive_iou, double negative_iou) {
  SamplePartition p;
  for (const auto& r : proposals) {
    const double o = iou(r, gt);
    if (o > positive_iou) {
      p.positives.push_back(r);
    } else if (o < negative_iou) {
      p.negatives.push_back(r);
    } else {
      p.discarded.push_back(r);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Boosting
// ---------------------------------------------------------------------------

namespace {

// Order-preserving unsigned key of a double (-0.0 and 0.0 compare equal).
std::uint64_t sort_key(double v) {
  if (v == 0.0) v = 0.0;
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return (bits & 0x8000000000000000ULL) ? ~bits : bits | 0x8000000000000000ULL;
}

// Indices sorted by value, equal values by index: LSD radix sort on 8-bit digits.
std::vector<std::uint32_t> stable_value_order(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::uint64_t> keys(n), keys_tmp(n);
  std::vector<std::uint32_t> order(n), order_tmp(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = sort_key(values[i]);
    order[i] = std::uint32_t(i);
  }
  for (int shift = 0; shift < 64; shift += 8) {
    std::array<std::size_t, 257> count{};
    for (std::size_t i = 0; i < n; ++i) ++count[((keys[i] >> shift) & 0xFF) + 1];
    if (std::any_of(count.begin() + 1, count.end(), [n](std::size_t c) { return c == n; })) continue;
    for (std::size_t b = 1; b < count.size(); ++b) count[b] += count[b - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t dst = count[(keys[i] >> shift) & 0xFF]++;
      keys_tmp[dst] = keys[i];
      order_tmp[dst] = order[i];
    }
    keys.swap(keys_tmp);
    order.swap(order_tmp);
  }
  return order;
}

}  // namespace

StumpFit best_stump(std::span<const double> values, std::span<const int> labels,
                    std::span<const double> weights) {
  const std::size_t n = values.size();
  if (labels.size() != n || weights.size() != n) throw std::invalid_argument("size mismatch");
  if (n == 0) throw std::invalid_argument("no samples");

  const std::vector<std::uint32_t> order = stable_value_order(values);

  double w_pos = 0.0, w_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) (labels[i] > 0 ? w_pos : w_neg) += weights[i];

  // Threshold below every value: all samples lie above it.
  StumpFit best;
  const double vmin = values[order.front()];
  best.threshold = quantize9(vmin - std::max(1.0, std::abs(vmin)));
  if (w_neg <= w_pos) {
    best.error = w_neg;
    best.positive_above = true;
  } else {
    best.error = w_pos;
    best.positive_above = false;
  }

  double cum_pos = 0.0, cum_neg = 0.0;  // weight at or below the candidate threshold
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::uint32_t i = order[k];
    (labels[i] > 0 ? cum_pos : cum_neg) += weights[i];
    const double lo = values[i];
    const double hi = values[order[k + 1]];
    if (lo == hi) continue;
    const double err_above = cum_pos + (w_neg - cum_neg);
    const double err_below = cum_neg + (w_pos - cum_pos);
    if (std::min(err_above, err_below) >= best.error) continue;
    // quantized only on improvement; formatting is the expensive part
    const double t = quantize9(0.5 * (lo + hi));
    if (!(t >= lo && t < hi)) continue;
    if (err_above < best.error) best = {t, err_above, true};
    if (err_below < best.error) best = {t, err_below, false};
  }
  return best;
}

WeakClassifier random_candidate(Rng& rng, int max_regionlets) {
  WeakClassifier wc;
  std::uniform_int_distribution<int> pick_feature(0, 9);
  const int roll = pick_feature(rng);
  // 30% intensity, 30% horizontal, 30% vertical, 10% log area
  const FeatureId f = roll < 3 ? FeatureId::kMeanIntensity
                      : roll < 6 ? FeatureId::kHorizontalEnergy
                      : roll < 9 ? FeatureId::kVerticalEnergy
                                 : FeatureId::kLogArea;
  if (f == FeatureId::kLogArea) {
    wc.regionlets.push_back({0.0, 0.0, 1.0, 1.0, f, 0});
    return wc;
  }
  std::uniform_int_distribution<int> pick_count(1, std::max(1, std::min(3, max_regionlets)));
  std::uniform_int_distribution<int> pick_channel(0, 2);
  std::uniform_int_distribution<int> pick_lattice(0, kLattice);
  const int count = pick_count(rng);
  const int channel = pick_channel(rng);
  for (int r = 0; r < count; ++r) {
    int a = pick_lattice(rng), b = pick_lattice(rng);
    while (a == b) b = pick_lattice(rng);
    int c = pick_lattice(rng), d = pick_lattice(rng);
    while (c == d) d = pick_lattice(rng);
    RegionletSpec spec;
    spec.rx0 = double(std::min(a, b)) / kLattice;
    spec.rx1 = double(std::max(a, b)) / kLattice;
    spec.ry0 = double(std::min(c, d)) / kLattice;
    spec.ry1 = double(std::max(c, d)) / kLattice;
    spec.feature = f;
    spec.channel = channel;
    wc.regionlets.push_back(spec);
  }
  return wc;
}

BoostResult boost(std::span<const WindowDescriptor> samples, std::span<const int> labels,
                  std::span<const double> prior, const BoostConfig& cfg, Rng& rng) {
  const std::size_t n = samples.size();
  if (labels.size() != n || (!prior.empty() && prior.size() != n)) {
    throw std::invalid_argument("boost: size mismatch");
  }
  const auto n_pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y > 0; });
  if (n_pos == 0) throw ConfigError("empty positive set");
  if (std::size_t(n_pos) == n) throw ConfigError("empty negative set");

  std::vector<double> score(n, 0.0);
  if (!prior.empty()) std::copy(prior.begin(), prior.end(), score.begin());

  // Initial weights: exp(-y F_prior), each class rescaled to total 1/2.
  std::vector<double> d1(n);
  double mass_pos = 0.0, mass_neg = 0.0;
  double shift = 0.0;  // keeps exp() in range for large prior scores
  for (std::size_t i = 0; i < n; ++i) shift = std::max(shift, -labels[i] * score[i]);
  for (std::size_t i = 0; i < n; ++i) {
    d1[i] = std::exp(-labels[i] * score[i] - shift);
    (labels[i] > 0 ? mass_pos : mass_neg) += d1[i];
  }
  for (std::size_t i = 0; i < n; ++i) d1[i] *= 0.5 / (labels[i] > 0 ? mass_pos : mass_neg);
  std::vector<double> weights = d1;
  std::vector<double> stage_score(n, 0.0);

  const auto exec = cfg.parallel ? kernels::Exec::kParallel : kernels::Exec::kSerial;
  BoostResult result;
  std::vector<WeakClassifier> candidates(std::size_t(cfg.candidates));
  for (int round = 0; round < cfg.rounds; ++round) {
    for (auto& c : candidates) c = random_candidate(rng, cfg.max_regionlets);
    const auto choice = kernels::select_candidate(candidates, samples, labels, weights, exec);

    const double err = std::clamp(choice.fit.error, 1e-10, 1.0 - 1e-10);
    const double alpha = std::max(quantize9(0.5 * std::log((1.0 - err) / err)), 1e-6);
    WeakClassifier wc = candidates[choice.index];
    wc.threshold = choice.fit.threshold;
    wc.alpha_plus = choice.fit.positive_above ? alpha : -alpha;
    wc.alpha_minus = -wc.alpha_plus;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = wc.respond(samples[i].feature(wc.regionlets));
      score[i] += h;
      stage_score[i] += h;
      weights[i] *= std::exp(-labels[i] * h);
      z += weights[i];
    }
    RoundStats stats;
    stats.weak_error = choice.fit.error;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] /= z;
      stats.weight_sum += weights[i];
      if (labels[i] * score[i] <= 0.0) stats.training_error += d1[i];
      stats.exp_loss += d1[i] * std::exp(-labels[i] * stage_score[i]);
    }
    result.rounds.push_back(stats);
    result.weak.push_back(std::move(wc));
  }
  return result;
}

CascadeModel train_cascade(std::span<const ImageBuffer> images, std::span<const Rect> ground_truth,
                           const DetectorTrainConfig& cfg, DetectorTrainLog* log) {
  if (images.size() != ground_truth.size()) throw std::invalid_argument("one ground truth per image");
  if (cfg.stages < 1 || cfg.weak_per_stage < 1 || cfg.candidates < 1) {
    throw ConfigError("stages, weak_per_stage and candidates must be >= 1");
  }
  Rng rng(cfg.seed);

  struct Sample {
    WindowDescriptor desc;
    int label;
    double score;
  };
  std::vector<Sample> pos, neg;

  auto subsample = [&rng](std::vector<Rect> v, std::size_t k) {
    if (v.size() <= k) return v;
    std::shuffle(v.begin(), v.end(), rng);
    v.erase(v.begin() + std::ptrdiff_t(k), v.end());
    return v;
  };

  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    const FeatureContext ctx(img);
    const auto proposals = generate_proposals(img.width(), img.height(), cfg.proposals);
    auto part = partition_training_samples(proposals, ground_truth[i], cfg.positive_iou, cfg.negative_iou);
    if (cfg.include_ground_truth) part.positives.push_back(ground_truth[i]);
    for (const auto& r : part.positives) {
      if (r.width() >= kLattice && r.height() >= kLattice) pos.push_back({WindowDescriptor(ctx, r), 1, 0.0});
    }
    for (const auto& r : subsample(part.negatives, std::size_t(cfg.negatives_per_image))) {
      neg.push_back({WindowDescriptor(ctx, r), -1, 0.0});
    }
  }
  auto cap = [&rng](std::vector<Sample>& v, std::size_t k) {
    if (v.size() <= k) return;
    std::shuffle(v.begin(), v.end(), rng);
    v.erase(v.begin() + std::ptrdiff_t(k), v.end());
  };
  cap(pos, cfg.max_positives);
  cap(neg, cfg.max_negatives);

  CascadeModel model;
  model.metadata = {{"stages", std::to_string(cfg.stages)},
                    {"weak_per_stage", std::to_string(cfg.weak_per_stage)},
                    {"candidates", std::to_string(cfg.candidates)},
                    {"seed", std::to_string(cfg.seed)},
                    {"images", std::to_string(images.size())}};

  for (int stage = 0; stage < cfg.stages; ++stage) {
    if (pos.empty()) throw ConfigError("empty positive set at stage " + std::to_string(stage));
    if (neg.empty()) throw ConfigError("empty negative set at stage " + std::to_string(stage));
    if (log) {
      log->positives_per_stage.push_back(pos.size());
      log->negatives_per_stage.push_back(neg.size());
    }

    std::vector<WindowDescriptor> descs;
    std::vector<int> labels;
    std::vector<double> prior;
    descs.reserve(pos.size() + neg.size());
    for (const auto* set : {&pos, &neg}) {
      for (const auto& s : *set) {
        descs.push_back(s.desc);
        labels.push_back(s.label);
        prior.push_back(s.score);
      }
    }
    BoostConfig bc;
    bc.rounds = cfg.weak_per_stage;
    bc.candidates = cfg.candidates;
    bc.max_regionlets = cfg.max_regionlets;
    bc.parallel = cfg.parallel;
    auto result = boost(descs, labels, prior, bc, rng);
    if (log) {
      for (auto& r : result.rounds) {
        r.stage = stage;
        log->rounds.push_back(r);
      }
    }

    for (auto* set : {&pos, &neg}) {
      for (auto& s : *set) {
        for (const auto& wc : result.weak) s.score += wc.respond(s.desc.feature(wc.regionlets));
      }
    }
    double min_pos = std::numeric_limits<double>::infinity();
    for (const auto& s : pos) min_pos = std::min(min_pos, s.score);
    const double margin = 1.0 - cfg.stage_margin;
    CascadeStage cs;
    cs.weak = std::move(result.weak);
    cs.reject_threshold = quantize9(min_pos - margin * std::abs(min_pos));
    const double threshold = cs.reject_threshold;
    model.stages.push_back(std::move(cs));

    if (stage + 1 == cfg.stages) break;

    // Hard negative mining: keep surviving negatives, add false positives.
    std::erase_if(neg, [&](const Sample& s) { return s.score < threshold; });
    std::erase_if(pos, [&](const Sample& s) { return s.score < threshold; });
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto& img = images[i];
      const FeatureContext ctx(img);
      const auto proposals = generate_proposals(img.width(), img.height(), cfg.proposals);
      const auto part =
          partition_training_samples(proposals, ground_truth[i], cfg.positive_iou, cfg.negative_iou);
      const auto exec = cfg.parallel ? kernels::Exec::kParallel : kernels::Exec::kSerial;
      const auto scores = kernels::score_windows(model, ctx, part.negatives, true, exec);
      std::vector<std::size_t> hard;
      for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k] >= threshold && part.negatives[k].width() >= kLattice &&
            part.negatives[k].height() >= kLattice) {
          hard.push_back(k);
        }
      }
      std::stable_sort(hard.begin(), hard.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      if (hard.size() > std::size_t(cfg.mined_per_image)) hard.resize(std::size_t(cfg.mined_per_image));
      for (std::size_t k : hard) neg.push_back({WindowDescriptor(ctx, part.negatives[k]), -1, scores[k]});
    }
    cap(neg, cfg.max_negatives);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Re-localization
// ---------------------------------------------------------------------------

std::vector<double> relocalization_features(const FeatureContext& ctx, const Rect& window) {
  // For each edge, candidate positions at offsets k/kSteps of the window size,
  // k in [-kReach, kReach]. A position scores high when the strip just inside
  // looks like the window center (mean color, gradient energy) and the strip
  // just outside does not. Positive scores, squared and normalized per edge,
  // form an edge-position distribution; the strongest offset of each edge is
  // appended.
  constexpr int kSteps = 32;
  constexpr int kReach = 16;
  constexpr int kPositions = 2 * kReach + 1;
  constexpr double kEnergyWeight = 2.0;
  const Rect bounds = ctx.bounds();
  const int w = window.width();
  const int h = window.height();
  const int channels = ctx.channels();

  struct Stats {
    std::array<double, 3> color{};
    std::array<double, 2> energy{};  // mean |dx|, |dy|
  };
  auto stats = [&](int x0, int y0, int x1, int y1) -> std::optional<Stats> {
    const auto r = intersection(Rect(x0, y0, std::max(x1, x0 + 1), std::max(y1, y0 + 1)), bounds);
    if (!r) return std::nullopt;
    const double area = double(r->area());
    Stats st;
    for (int c = 0; c < 3; ++c) st.color[std::size_t(c)] = double(ctx.color().sum(*r, std::min(c, channels - 1))) / (area * 255.0);
    for (int p = 0; p < 2; ++p) st.energy[std::size_t(p)] = double(ctx.energy().sum(*r, p)) / area;
    return st;
  };
  auto at = [](int origin, int len, double frac) { return origin + int(std::lround(frac * len)); };

  const int band_y0 = at(window.y0(), h, 0.25), band_y1 = at(window.y0(), h, 0.75);
  const int band_x0 = at(window.x0(), w, 0.25), band_x1 = at(window.x0(), w, 0.75);
  const Stats ref = *stats(band_x0, band_y0, band_x1, band_y1);
  const double energy_scale = kEnergyWeight / (ref.energy[0] + ref.energy[1] + 1.0);
  // Dissimilarity to the center; an out-of-image strip is maximally dissimilar.
  auto distance = [&](const std::optional<Stats>& st) {
    if (!st) return 2.0;
    double d = 0.0;
    for (int c = 0; c < 3; ++c) d += std::abs(st->color[std::size_t(c)] - ref.color[std::size_t(c)]);
    for (int p = 0; p < 2; ++p) d += std::abs(st->energy[std::size_t(p)] - ref.energy[std::size_t(p)]) * energy_scale;
    return d;
  };
  const int strip_w = std::max(2, w / 24), strip_h = std::max(2, h / 24);

  std::vector<double> f;
  f.reserve(4 * kPositions + 4);
  std::array<double, 4> peaks{};
  for (int edge = 0; edge < 4; ++edge) {
    std::array<double, kPositions> c{};
    double total = 0.0;
    for (int k = -kReach; k <= kReach; ++k) {
      const double off = double(k) / kSteps;
      std::optional<Stats> in, out;
      switch (edge) {
        case 0: {  // left: inside is to the right
          const int x = at(window.x0(), w, off);
          in = stats(x, band_y0, x + strip_w, band_y1);
          out = stats(x - strip_w, band_y0, x, band_y1);
          break;
        }
        case 1: {  // right
          const int x = at(window.x1(), w, off);
          in = stats(x - strip_w, band_y0, x, band_y1);
          out = stats(x, band_y0, x + strip_w, band_y1);
          break;
        }
        case 2: {  // top
          const int y = at(window.y0(), h, off);
          in = stats(band_x0, y, band_x1, y + strip_h);
          out = stats(band_x0, y - strip_h, band_x1, y);
          break;
        }
        default: {  // bottom
          const int y = at(window.y1(), h, off);
          in = stats(band_x0, y - strip_h, band_x1, y);
          out = stats(band_x0, y, band_x1, y + strip_h);
          break;
        }
      }
      const double d = in ? distance(out) - distance(in) : 0.0;
      const double v = d > 0.0 ? d * d : 0.0;
      c[std::size_t(k + kReach)] = v;
      total += v;
    }
    for (double v : c) f.push_back(total > 0.0 ? v / total : 1.0 / kPositions);
    peaks[std::size_t(edge)] = double(std::max_element(c.begin(), c.end()) - c.begin() - kReach) / kSteps;
  }
  f.insert(f.end(), peaks.begin(), peaks.end());
  return f;
}

std::array<double, 4> box_offsets(const Rect& detected, const Rect& truth) {
  return {(truth.center_x() - detected.center_x()) / detected.width(),
          (truth.center_y() - detected.center_y()) / detected.height(),
          std::log(double(truth.width()) / detected.width()),
          std::log(double(truth.height()) / detected.height())};
}

std::array<double, 4> BoxRegressor::predict(std::span<const double> features) const {
  if (int(features.size()) != dim) throw std::invalid_argument("regressor feature size mismatch");
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) {
    double v = weights[std::size_t(dim) * 4 + k];
    for (int j = 0; j < dim; ++j) v += features[j] * weights[std::size_t(j) * 4 + k];
    out[k] = v;
  }
  return out;
}

Rect apply_box_offsets(const Rect& r, const std::array<double, 4>& off, int image_width,
                       int image_height) {
  const double clamp_log = 2.0;  // at most e^2 growth or shrink per application
  const double cx = r.center_x() + off[0] * r.width();
  const double cy = r.center_y() + off[1] * r.height();
  const double w = r.width() * std::exp(std::clamp(off[2], -clamp_log, clamp_log));
  const double h = r.height() * std::exp(std::clamp(off[3], -clamp_log, clamp_log));
  auto edge = [](double v, int hi) { return int(std::clamp(std::lround(v), 0L, long(hi))); };
  int x0 = edge(cx - 0.5 * w, image_width), x1 = edge(cx + 0.5 * w, image_width);
  int y0 = edge(cy - 0.5 * h, image_height), y1 = edge(cy + 0.5 * h, image_height);
  if (x1 <= x0) {
    x0 = std::min(x0, image_width - 1);
    x1 = x0 + 1;
  }
  if (y1 <= y0) {
    y0 = std::min(y0, image_height - 1);
    y1 = y0 + 1;
  }
  return Rect(x0, y0, x1, y1);
}

Rect apply_box_regressor(const BoxRegressor& reg, const Detection& detection,
                         std::span<const double> features, int image_width, int image_height) {
  return apply_box_offsets(detection.rect, reg.predict(features), image_width, image_height);
}

constexpr double kNearJitter = 0.15;

std::vector<RegressionPair> collect_regression_pairs(std::span<const ImageBuffer> images,
                                                     std::span<const Rect> ground_truth,
                                                     const ProposalConfig& proposals,
                                                     double min_iou, std::size_t max_per_image) {
  std::vector<RegressionPair> pairs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const FeatureContext ctx(images[i]);
    std::vector<Rect> near;
    for (const auto& r : generate_proposals(images[i].width(), images[i].height(), proposals)) {
      if (iou(r, ground_truth[i]) >= min_iou) near.push_back(r);
    }
    // keep an evenly spread subset, deterministic
    const std::size_t step = near.size() > max_per_image ? near.size() / max_per_image : 1;
    for (std::size_t k = 0, taken = 0; k < near.size() && taken < max_per_image; k += step, ++taken) {
      pairs.push_back({near[k], ground_truth[i], relocalization_features(ctx, near[k]), i});
    }
    // Boxes close to the truth, as seen after a first refinement step.
    Rng rng(i);
    std::uniform_real_distribution<double> jitter(-kNearJitter, kNearJitter);
    const Rect& g = ground_truth[i];
    const Rect img_bounds = images[i].bounds();
    for (std::size_t k = 0; k < max_per_image; ++k) {
      const int x0 = g.x0() + int(std::lround(jitter(rng) * g.width()));
      const int x1 = g.x1() + int(std::lround(jitter(rng) * g.width()));
      const int y0 = g.y0() + int(std::lround(jitter(rng) * g.height()));
      const int y1 = g.y1() + int(std::lround(jitter(rng) * g.height()));
      if (x1 - x0 < kLattice || y1 - y0 < kLattice) continue;
      const auto r = intersection(Rect(x0, y0, x1, y1), img_bounds);
      if (!r || r->width() < kLattice || r->height() < kLattice) continue;
      pairs.push_back({*r, g, relocalization_features(ctx, *r), i});
    }
  }
  return pairs;
}

Rect relocalize(const BoxRegressor& reg, const FeatureContext& ctx, const Rect& box) {
  const auto f = relocalization_features(ctx, box);
  return apply_box_offsets(box, reg.predict(f), ctx.bounds().width(), ctx.bounds().height());
}

std::vector<BoxRegressor> train_relocalizers(std::span<const ImageBuffer> images,
                                             std::span<const Rect> ground_truth,
                                             const ProposalConfig& proposals,
                                             const RelocalizationConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("relocalization needs at least one step");
  auto pairs = collect_regression_pairs(images, ground_truth, proposals, cfg.min_iou, cfg.max_per_image);
  std::vector<BoxRegressor> steps;
  for (int s = 0; s < cfg.steps; ++s) {
    steps.push_back(fit_box_regressor(pairs, cfg.lambda));
    if (s + 1 == cfg.steps) break;
    std::vector<RegressionPair> next;
    next.reserve(pairs.size());
    std::optional<FeatureContext> ctx;
    std::size_t ctx_image = 0;
    for (const auto& p : pairs) {
      if (!ctx || ctx_image != p.image) {
        ctx.emplace(images[p.image]);
        ctx_image = p.image;
      }
      const Rect moved = apply_box_offsets(p.detected, steps.back().predict(p.features),
                                           images[p.image].width(), images[p.image].height());
      if (moved.width() < kLattice || moved.height() < kLattice) continue;
      next.push_back({moved, p.truth, relocalization_features(*ctx, moved), p.image});
    }
    pairs = std::move(next);
  }
  return steps;
}

Detection detect(const Detector& detector, const ImageBuffer& img) {
  const FeatureContext ctx(img);
  const auto proposals = generate_proposals(img.width(), img.height(), detector.proposals);
  Detection det = detect_max(detector.cascade, ctx, proposals);
  for (const auto& step : detector.relocalizers) det.rect = relocalize(step, ctx, det.rect);
  return det;
}

}  // namespace ocs
