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


// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "ocs/classifier.hpp"
#include "ocs/dataset.hpp"
#include "ocs/detector.hpp"
#include "ocs/evaluation.hpp"
#include "ocs/geometry.hpp"
#include "ocs/image.hpp"
#include "ocs/sampling.hpp"

namespace fs = std::filesystem;
using namespace ocs;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};
std::map<int, Outcome> outcomes;

void record(int id, bool pass, std::string detail) {
  outcomes[id] = {pass, std::move(detail)};
  fmt::print(stderr, "[criterion {}] {} {}\n", id, pass ? "pass" : "FAIL", outcomes[id].detail);
}

Rect random_rect(int w, int h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ax(0, w - 1), ay(0, h - 1);
  int x0 = ax(rng), x1 = ax(rng), y0 = ay(rng), y1 = ay(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return Rect(x0, y0, x1 + 1, y1 + 1);
}

SamplerConfig crop_cfg(int s, std::int64_t tau = 0) {
  SamplerConfig c;
  c.crop_size = s;
  c.tau = tau;
  return c;
}

// |crop ∩ det| by counting pixels.
std::int64_t brute_overlap(int x, int y, int s, const Rect& det) {
  std::int64_t n = 0;
  for (int j = y; j < y + s; ++j) {
    for (int i = x; i < x + s; ++i) n += det.contains_point(i, j);
  }
  return n;
}

// Upper 0.01 quantile of chi-square (Wilson-Hilferty).
double chi_square_critical(double df) {
  const double z = 2.3263478740408408;
  const double t = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - t + z * std::sqrt(t), 3.0);
}

// --- 1 ----------------------------------------------------------------------

struct FitStats {
  double max_dev = 0.0;
  double chi2 = 0.0;
  double critical = 0.0;
  bool zero_drawn = false;
};

// Analytic probabilities from brute-force overlaps, compared with 10^6 draws on the joint grid and both marginals.
FitStats goodness_of_fit(int w, int h, const Rect& det, int s, std::uint64_t seed) {
  const auto d = build_crop_distribution(w, h, det, crop_cfg(s));
  const int px = d.positions_x(), py = d.positions_y();
  std::vector<double> p(std::size_t(px) * py);
  double total = 0.0;
  for (int y = 0; y < py; ++y) {
    for (int x = 0; x < px; ++x) total += p[std::size_t(y) * px + x] = double(brute_overlap(x, y, s, det));
  }
  for (auto& v : p) v /= total;
  Rng rng(seed);
  const int n = 1000000;
  std::vector<int> counts(p.size(), 0);
  for (int i = 0; i < n; ++i) {
    const auto [x, y] = sample_position(d, rng);
    ++counts[std::size_t(y) * px + x];
  }
  FitStats f;
  std::vector<double> mx(std::size_t(px), 0.0), my(std::size_t(py), 0.0), ex(std::size_t(px), 0.0),
      ey(std::size_t(py), 0.0);
  int cells = 0;
  for (int y = 0; y < py; ++y) {
    for (int x = 0; x < px; ++x) {
      const std::size_t k = std::size_t(y) * px + x;
      const double freq = counts[k] / double(n);
      f.max_dev = std::max(f.max_dev, std::abs(freq - p[k]));
      mx[std::size_t(x)] += freq;
      my[std::size_t(y)] += freq;
      ex[std::size_t(x)] += p[k];
      ey[std::size_t(y)] += p[k];
      if (p[k] == 0.0) {
        f.zero_drawn |= counts[k] != 0;
        continue;
      }
      const double e = p[k] * n;
      f.chi2 += (counts[k] - e) * (counts[k] - e) / e;
      ++cells;
    }
  }
  for (int x = 0; x < px; ++x) f.max_dev = std::max(f.max_dev, std::abs(mx[std::size_t(x)] - ex[std::size_t(x)]));
  for (int y = 0; y < py; ++y) f.max_dev = std::max(f.max_dev, std::abs(my[std::size_t(y)] - ey[std::size_t(y)]));
  f.critical = chi_square_critical(cells - 1);
  return f;
}

void criterion_1() {
  const auto t = Clock::now();
  // toy: x probabilities 2/8, 3/8, 3/8; y uniform
  const auto d = build_crop_distribution(6, 6, Rect(2, 0, 5, 6), crop_cfg(4));
  bool analytic = true;
  for (int y = 0; y < 3; ++y) {
    analytic &= d.probability(0, y) == 2.0 / 8.0 / 3.0;
    analytic &= d.probability(1, y) == 3.0 / 8.0 / 3.0;
    analytic &= d.probability(2, y) == 3.0 / 8.0 / 3.0;
  }
  const auto toy = goodness_of_fit(6, 6, Rect(2, 0, 5, 6), 4, 101);
  const auto real = goodness_of_fit(341, 256, Rect(60, 40, 250, 230), 224, 102);
  const double secs = seconds_since(t);
  const bool pass = analytic && toy.max_dev <= 3e-3 && real.max_dev <= 3e-3 && toy.chi2 < toy.critical &&
                    real.chi2 < real.critical && !toy.zero_drawn && !real.zero_drawn && secs < 10.0;
  record(1, pass,
         fmt::format("toy analytic={} maxdev={:.2e} chi2={:.1f}/{:.1f}; 341x256 maxdev={:.2e} chi2={:.1f}/{:.1f}; {:.1f}s",
                     analytic, toy.max_dev, toy.chi2, toy.critical, real.max_dev, real.chi2, real.critical, secs));
}

// --- 2 ----------------------------------------------------------------------

void criterion_2() {
  std::mt19937_64 rng(201);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const int w = std::uniform_int_distribution<int>(1, 64)(rng);
    const int h = std::uniform_int_distribution<int>(1, 64)(rng);
    const int s = std::uniform_int_distribution<int>(1, std::min(w, h))(rng);
    const Rect det = random_rect(w, h, rng);
    const auto d = build_crop_distribution(w, h, det, crop_cfg(s));
    for (int y = 0; y < d.positions_y(); ++y) {
      for (int x = 0; x < d.positions_x(); ++x) {
        const std::int64_t b = brute_overlap(x, y, s, det);
        const std::int64_t outer = d.x_profile().weights[std::size_t(x)] * d.y_profile().weights[std::size_t(y)];
        const std::int64_t joint = d.fallback_uniform() ? 0 : d.joint_weight(x, y);
        mismatches += (outer != b) + (joint != b);
      }
    }
  }
  record(2, mismatches == 0, fmt::format("200 triples, {} mismatching positions", mismatches));
}

// --- 3 ----------------------------------------------------------------------

bool exactly_uniform(const CropDistribution& d) {
  const double u = 1.0 / (double(d.positions_x()) * d.positions_y());
  const std::int64_t w0 = d.joint_weight(0, 0);
  for (int y = 0; y < d.positions_y(); ++y) {
    for (int x = 0; x < d.positions_x(); ++x) {
      if (d.probability(x, y) != u || d.joint_weight(x, y) != w0) return false;
    }
  }
  return true;
}

void criterion_3() {
  std::mt19937_64 rng(301);
  bool full_ok = true, missing_ok = true;
  std::vector<std::array<int, 3>> cases{{341, 256, 224}, {256, 420, 224}, {6, 6, 4}};
  for (int t = 0; t < 50; ++t) {
    const int w = std::uniform_int_distribution<int>(1, 64)(rng);
    const int h = std::uniform_int_distribution<int>(1, 64)(rng);
    cases.push_back({w, h, std::uniform_int_distribution<int>(1, std::min(w, h))(rng)});
  }
  for (const auto& [w, h, s] : cases) {
    const auto full = build_crop_distribution(w, h, Rect(0, 0, w, h), crop_cfg(s));
    full_ok &= !full.fallback_uniform() && exactly_uniform(full);
    const auto none = build_crop_distribution(w, h, std::nullopt, crop_cfg(s));
    missing_ok &= none.fallback_uniform() && exactly_uniform(none);
  }
  record(3, full_ok && missing_ok,
         fmt::format("{} sizes: full-image uniform={} missing fallback+uniform={}", cases.size(), full_ok, missing_ok));
}

// --- 7 ----------------------------------------------------------------------

void criterion_7() {
  const Rect gt(0, 0, 100, 100), hit(0, 0, 100, 95), miss(0, 0, 100, 70);
  const std::vector<Rect> gts(5, gt);
  const std::vector<std::vector<Detection>> toy{{{hit, 0.9}}, {{miss, 0.8}}, {{hit, 0.7}}, {{hit, 0.6}}, {{miss, 0.5}}};
  // precision/recall: 1/.2, .5/.2, .667/.4, .75/.6, .6/.6; envelope 1 for r<=.2, .75 for r in (.2,.6]
  const double want = (3 * 1.0 + 4 * 0.75) / 11.0;
  const double got = average_precision(toy, gts, 0.8);
  std::vector<std::vector<Detection>> perfect, all_miss;
  for (int i = 0; i < 5; ++i) {
    perfect.push_back({{gt, 1.0 - 0.1 * i}});
    all_miss.push_back({{miss, 1.0 - 0.1 * i}});
  }
  const double p = average_precision(perfect, gts, 0.8), m = average_precision(all_miss, gts, 0.8);
  record(7, got == want && p == 1.0 && m == 0.0,
         fmt::format("toy={:.17g} (6/11={:.17g}) perfect={} all-miss={}", got, want, p, m));
}

// --- 8 ----------------------------------------------------------------------

void criterion_8() {
  std::mt19937_64 rng(801);
  int bad_pairs = 0;
  for (int t = 0; t < 1000; ++t) {
    const Rect a = random_rect(48, 48, rng), b = random_rect(48, 48, rng);
    std::int64_t inter = 0, uni = 0;
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 48; ++x) {
        const bool ia = a.contains_point(x, y), ib = b.contains_point(x, y);
        inter += ia && ib;
        uni += ia || ib;
      }
    }
    bad_pairs += intersect_area(a, b) != inter || iou(a, b) != double(inter) / double(uni);
  }
  ImageBuffer img(97, 83, 3);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& v : img.pixels()) v = std::uint8_t(px(rng));
  const auto ii = integral_image(img);
  int bad_sums = 0;
  for (int t = 0; t < 200; ++t) {
    const Rect r = random_rect(97, 83, rng);
    for (int c = 0; c < 3; ++c) {
      std::int64_t s = 0;
      for (int y = r.y0(); y < r.y1(); ++y) {
        for (int x = r.x0(); x < r.x1(); ++x) s += img.at(x, y, c);
      }
      bad_sums += ii.sum(r, c) != s;
    }
  }
  record(8, bad_pairs == 0 && bad_sums == 0,
         fmt::format("1000 pairs: {} mismatches; 200 rects x 3 channels: {} mismatches", bad_pairs, bad_sums));
}

// --- 9 ----------------------------------------------------------------------

void criterion_9() {
  std::mt19937_64 rng(901);
  ImageBuffer img(200, 200, 3);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& v : img.pixels()) v = std::uint8_t(px(rng));
  const FeatureContext ctx(img);
  // separable toy: big windows versus small ones, split by the log-area feature
  std::vector<WindowDescriptor> toy;
  std::vector<int> toy_labels;
  for (int i = 0; i < 80; ++i) {
    const bool big = i % 2 == 0;
    const int side = std::uniform_int_distribution<int>(big ? 100 : 16, big ? 200 : 60)(rng);
    toy.emplace_back(ctx, Rect::from_size(std::uniform_int_distribution<int>(0, 200 - side)(rng),
                                          std::uniform_int_distribution<int>(0, 200 - side)(rng), side, side));
    toy_labels.push_back(big ? 1 : -1);
  }
  // random labels: no ensemble separates them
  std::vector<WindowDescriptor> noisy;
  std::vector<int> noisy_labels;
  for (int i = 0; i < 300; ++i) {
    const int w = std::uniform_int_distribution<int>(16, 200)(rng), h = std::uniform_int_distribution<int>(16, 200)(rng);
    noisy.emplace_back(ctx, Rect::from_size(std::uniform_int_distribution<int>(0, 200 - w)(rng),
                                            std::uniform_int_distribution<int>(0, 200 - h)(rng), w, h));
    noisy_labels.push_back(std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1);
  }
  BoostConfig cfg;
  cfg.rounds = 10;
  cfg.candidates = 200;
  Rng brng(902);
  const auto a = boost(toy, toy_labels, {}, cfg, brng);
  cfg.rounds = 40;
  const auto b = boost(noisy, noisy_labels, {}, cfg, brng);

  bool toy_mono = true, loss_mono = true;
  double max_sum_dev = 0.0;
  int zero_round = -1;
  for (std::size_t k = 0; k < a.rounds.size(); ++k) {
    if (k > 0) toy_mono &= a.rounds[k].training_error <= a.rounds[k - 1].training_error;
    if (zero_round < 0 && a.rounds[k].training_error == 0.0) zero_round = int(k) + 1;
    max_sum_dev = std::max(max_sum_dev, std::abs(a.rounds[k].weight_sum - 1.0));
  }
  double prev = 1.0;
  for (const auto& r : b.rounds) {
    loss_mono &= r.exp_loss <= prev;
    prev = r.exp_loss;
    max_sum_dev = std::max(max_sum_dev, std::abs(r.weight_sum - 1.0));
  }
  record(9, toy_mono && zero_round > 0 && zero_round <= 10 && loss_mono && max_sum_dev <= 1e-12,
         fmt::format("toy error nonincreasing={} zero at round {}; noisy exp-loss nonincreasing={} final error={:.3f}; "
                     "max |sum w - 1|={:.1e}",
                     toy_mono, zero_round, loss_mono, b.rounds.back().training_error, max_sum_dev));
}

// --- 10 ---------------------------------------------------------------------

void criterion_10(const ClassifierModel& model, std::span<const ImageBuffer> images, std::span<const Rect> boxes) {
  std::mt19937_64 rng(1001);
  bool counts = true, sums = true, order = true;
  double worst_sum = 0.0, worst_order = 0.0;
  const std::size_t n = std::min<std::size_t>(images.size(), 25);
  for (std::size_t i = 0; i < n; ++i) {
    const auto with = predict_test_time(model, images[i], boxes[i]);
    const auto without = predict_test_time(model, images[i], std::nullopt);
    counts &= with.crops_evaluated == 20 && without.crops_evaluated == 10;
    for (const auto* p : {&with.probabilities, &without.probabilities}) {
      const double dev = std::abs(std::accumulate(p->begin(), p->end(), 0.0) - 1.0);
      worst_sum = std::max(worst_sum, dev);
      sums &= dev <= 1e-9;
    }
    // rebuild the 20 crop outputs independently and average them in shuffled orders
    std::vector<std::vector<double>> per_crop;
    for (const auto& src : {resize_shorter_side(images[i], 256), resize_shorter_side(crop_image(images[i], boxes[i]), 256)}) {
      for (const auto& [x, y] : five_crop_positions(src.width(), src.height(), 224)) {
        for (bool flip : {false, true}) {
          auto c = crop_image(src, Rect::from_size(x, y, 224, 224));
          if (flip) c = flip_horizontal(c);
          per_crop.push_back(model.predict_proba(extract_crop_feature(c)));
        }
      }
    }
    for (int t = 0; t < 3; ++t) {
      std::shuffle(per_crop.begin(), per_crop.end(), rng);
      const auto avg = average_probabilities(per_crop);
      for (std::size_t c = 0; c < avg.size(); ++c) {
        const double dev = std::abs(avg[c] - with.probabilities[c]);
        worst_order = std::max(worst_order, dev);
        order &= dev <= 1e-12;
      }
    }
  }
  record(10, counts && sums && order,
         fmt::format("{} images: crop counts 20/10={} max |sum-1|={:.1e} shuffled-order max dev={:.1e}", n, counts,
                     worst_sum, worst_order));
}

// --- 11 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

bool run_cli_pipeline(const fs::path& root, std::string& failed) {
  const std::string cli = OCS_CLI_PATH;
  const std::string r = root.string();
  {
    std::ofstream cfg(root / "gen.cfg");
    cfg << "# synthetic data\nclasses = 4\ntrain = 40\ntest = 16\nshort-side = 96\nseed = 5\n";
  }
  const std::vector<std::string> cmds{
      fmt::format("synth-gen --out {0}/data --classes 4 --train 40 --test 16 --short-side 96 --seed 5", r),
      fmt::format("synth-gen --config {0}/gen.cfg --out {0}/data_cfg", r),
      fmt::format("det-train --manifest {0}/data/train.manifest --model-dir {0}/det --stages 2 --weak-per-stage 6 "
                  "--candidates 40 --seed 5",
                  r),
      fmt::format("det-run --model-dir {0}/det --manifest {0}/data/train.manifest --out {0}/train.det", r),
      fmt::format("det-run --model-dir {0}/det --manifest {0}/data/test.manifest --out {0}/test.det --report "
                  "{0}/det_report.txt",
                  r),
      fmt::format("cls-train --sampler multinomial --manifest {0}/data/train.manifest --model {0}/multi.cls --boxes "
                  "file --detections {0}/train.det --epochs 2 --resize-to 64 --crop-size 48 --seed 5",
                  r),
      fmt::format("cls-train --sampler uniform --manifest {0}/data/train.manifest --model {0}/uni.cls --epochs 2 "
                  "--resize-to 64 --crop-size 48 --seed 5",
                  r),
      fmt::format("cls-eval --model {0}/multi.cls --manifest {0}/data/test.manifest --report {0}/eval.txt --boxes file "
                  "--detections {0}/test.det --resize-to 64 --crop-size 48",
                  r),
      fmt::format("sample-map --image {0}/data/test/000000.ppm --box 10,8,70,80 --out {0}/map.pgm --resize-to 64 "
                  "--crop-size 48",
                  r),
      fmt::format("benchmark --data-dir {0}/data --out {0}/bench.tsv --repeats 2 --epochs 2 --resize-to 64 "
                  "--crop-size 48 --seed 5",
                  r),
  };
  for (const auto& c : cmds) {
    const std::string line = fmt::format("{} {} > {}/cli.log 2>&1", cli, c, r);
    if (std::system(line.c_str()) != 0) {
      failed = c;
      return false;
    }
  }
  fs::remove(root / "cli.log");
  return true;
}

void criterion_11() {
  const fs::path base = fs::temp_directory_path() / fmt::format("ocs_acceptance_{}", ::getpid());
  const fs::path work = base / "run", first = base / "first";
  fs::remove_all(base);
  std::string failed;
  std::map<std::string, std::string> a, b;
  bool ok = true;
  for (int rep = 0; rep < 2 && ok; ++rep) {
    fs::create_directories(work);
    ok = run_cli_pipeline(work, failed);
    if (rep == 0) {
      a = snapshot(work);
      fs::rename(work, first);
    } else {
      b = snapshot(work);
    }
  }
  int differing = 0;
  std::string first_diff;
  if (ok) {
    for (const auto& [name, bytes] : a) {
      const auto it = b.find(name);
      if (it == b.end() || it->second != bytes) {
        if (!differing++) first_diff = name;
      }
    }
    differing += int(b.size() > a.size() ? b.size() - a.size() : 0);
  }
  fs::remove_all(base);
  record(11, ok && differing == 0 && a.size() > 10,
         ok ? fmt::format("{} output files from 10 commands, {} differ{}", a.size(), differing,
                          first_diff.empty() ? "" : " (first: " + first_diff + ")")
            : "command failed: " + failed);
}

// --- 4, 5, 6 ----------------------------------------------------------------

struct SeedRun {
  double uniform_top1 = 0.0;
  double gt_top1 = 0.0;
  double det_top1 = 0.0;
  double seconds = 0.0;
};

std::vector<int> labels_of(const DatasetManifest& m) {
  std::vector<int> y;
  for (const auto& r : m.records) y.push_back(r.label);
  return y;
}

double top1(const ClassifierModel& model, std::span<const ImageBuffer> images, std::span<const int> labels,
            const std::vector<std::optional<Rect>>& boxes) {
  std::vector<std::vector<double>> preds;
  for (std::size_t i = 0; i < images.size(); ++i) {
    preds.push_back(predict_test_time(model, images[i], boxes.empty() ? std::nullopt : boxes[i]).probabilities);
  }
  return topk_accuracy(preds, labels, 1);
}

void criteria_4_5_6() {
  constexpr int kSeeds = 5;
  std::vector<SeedRun> runs;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto t0 = Clock::now();
    SceneSpec spec;  // 10 classes, salient 20-60%, 0-3 distractors, clutter on
    spec.seed = std::uint64_t(seed);
    const auto data = generate_dataset(spec, 2000, 500);
    std::vector<Rect> gt_train, gt_test;
    for (const auto& r : data.train.records) gt_train.push_back(r.salient_box());
    for (const auto& r : data.test.records) gt_test.push_back(r.salient_box());

    // detector on the first 1,000 training images
    const auto t_det = Clock::now();
    const std::span<const ImageBuffer> det_images(data.train_images.data(), 1000);
    const std::span<const Rect> det_boxes(gt_train.data(), 1000);
    Detector det;
    det.cascade = train_cascade(det_images, det_boxes, DetectorTrainConfig{});
    det.relocalizers = train_relocalizers(det_images, det_boxes, det.proposals);
    const double det_train_secs = seconds_since(t_det);

    std::vector<std::vector<Detection>> test_dets;
    std::vector<std::optional<Rect>> det_train_boxes, det_test_boxes, gt_train_boxes, gt_test_boxes;
    for (const auto& img : data.train_images) det_train_boxes.push_back(detect(det, img).rect);
    for (const auto& img : data.test_images) {
      test_dets.push_back({detect(det, img)});
      det_test_boxes.push_back(test_dets.back().front().rect);
    }
    for (const auto& b : gt_train) gt_train_boxes.push_back(b);
    for (const auto& b : gt_test) gt_test_boxes.push_back(b);

    if (seed == 1) {
      const double ap = average_precision(test_dets, gt_test, 0.8);
      record(6, ap >= 0.90 && det_train_secs < 120.0,
             fmt::format("AP@0.8={:.4f} on {} test images, detector training {:.1f}s", ap, gt_test.size(),
                         det_train_secs));
      const auto bins = score_vs_size_curve(test_dets, gt_test, 5);
      std::vector<double> idx, means;
      std::string curve;
      for (const auto& b : bins) {
        idx.push_back(b.index);
        means.push_back(b.mean_score);
        curve += fmt::format(" {:.3f}", b.mean_score);
      }
      const double rho = spearman(idx, means);
      record(5, bins.size() == 5 && nondecreasing(bins) && rho >= 0.8,
             fmt::format("quintile means{} nondecreasing={} spearman={:.3f}", curve, nondecreasing(bins), rho));
    }

    const auto train_labels = labels_of(data.train), test_labels = labels_of(data.test);
    TrainConfig tc;
    tc.seed = std::uint64_t(seed);
    SeedRun run;
    tc.sampler = SamplerMode::kUniform;
    run.uniform_top1 = top1(train_classifier(data.train_images, train_labels, {}, spec.num_classes, tc),
                            data.test_images, test_labels, {});
    tc.sampler = SamplerMode::kMultinomial;
    const auto gt_model = train_classifier(data.train_images, train_labels, gt_train_boxes, spec.num_classes, tc);
    run.gt_top1 = top1(gt_model, data.test_images, test_labels, gt_test_boxes);
    run.det_top1 = top1(train_classifier(data.train_images, train_labels, det_train_boxes, spec.num_classes, tc),
                        data.test_images, test_labels, det_test_boxes);
    run.seconds = seconds_since(t0);
    fmt::print(stderr, "seed {}: uniform {:.4f} multinomial(gt) {:.4f} multinomial(det) {:.4f} in {:.0f}s\n", seed,
               run.uniform_top1, run.gt_top1, run.det_top1, run.seconds);
    runs.push_back(run);

    if (seed == 1) criterion_10(gt_model, data.test_images, gt_test);
  }
  double gap_gt = 0.0, gap_det = 0.0, slowest = 0.0;
  for (const auto& r : runs) {
    gap_gt += 100.0 * (r.gt_top1 - r.uniform_top1) / kSeeds;
    gap_det += 100.0 * (r.det_top1 - r.uniform_top1) / kSeeds;
    slowest = std::max(slowest, r.seconds);
  }
  record(4, gap_gt >= 5.0 && gap_det >= 3.0 && slowest < 300.0,
         fmt::format("mean top-1 gap over {} seeds: gt boxes {:+.2f} points, detector boxes {:+.2f} points; "
                     "slowest seed {:.0f}s",
                     kSeeds, gap_gt, gap_det, slowest));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_11();
  criteria_4_5_6();

  int failed = 0;
  for (const auto& [id, o] : outcomes) {
    fmt::print("criterion {:>2}: {} | {}\n", id, o.pass ? "PASS" : "FAIL", o.detail);
    failed += !o.pass;
  }
  fmt::print("{} of {} criteria passed\n", int(outcomes.size()) - failed, outcomes.size());
  return failed == 0 ? 0 : 1;
}
