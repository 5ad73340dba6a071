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

// ocs: dataset generation, detector and classifier training, evaluation.
//
//   ocs <command> [--config FILE] [--key value ...]
//
// Config files hold "key = value" lines using the long flag names; flags on
// the command line win. Logs go to stderr, results only to the named files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "ocs/classifier.hpp"
#include "ocs/dataset.hpp"
#include "ocs/detector.hpp"
#include "ocs/error.hpp"
#include "ocs/evaluation.hpp"
#include "ocs/kernels.hpp"
#include "ocs/sampling.hpp"

namespace fs = std::filesystem;
using namespace ocs;

namespace {

/// Command-line misuse found after parsing; exits 2 like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename... Args>
void log(fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "ocs: {}\n", fmt::format(f, std::forward<Args>(args)...));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

/**
 * Removes "--config FILE" from args and splices the file's entries in right
 * after the command name, skipping keys the command line already sets.
 */
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + std::ptrdiff_t(i), args.begin() + std::ptrdiff_t(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + std::ptrdiff_t(i));
      break;
    }
  }
  if (!path) return args;
  const auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("--", 0) != 0; });
  if (cmd == args.end()) throw UsageError("--config needs a command");
  const auto insert_at = std::distance(args.begin(), cmd) + 1;

  std::ifstream is(*path);
  if (!is) throw std::runtime_error("cannot read config " + *path);
  std::vector<std::string> extra;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("expected key = value", line_no);
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789-") != std::string::npos) {
      throw FormatError("bad key '" + key + "'", line_no);
    }
    if (key == "config") throw FormatError("config files cannot include other config files", line_no);
    if (given_on_command_line(args, key)) continue;
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  args.insert(args.begin() + insert_at, extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct LoadedSplit {
  DatasetManifest manifest;
  std::vector<ImageBuffer> images;
};

LoadedSplit load_split(const std::string& manifest_path) {
  Stopwatch sw;
  LoadedSplit s;
  s.manifest = load_manifest(manifest_path, /*verify_images=*/true);
  s.images = load_images(s.manifest, fs::path(manifest_path).parent_path().string());
  log("loaded {} images from {} ({:.1f}s)", s.images.size(), manifest_path, sw.seconds());
  return s;
}

std::vector<Rect> salient_boxes(const DatasetManifest& m) {
  std::vector<Rect> out;
  for (const auto& r : m.records) {
    if (!r.salient) throw ConfigError("record " + r.image_path + " has no salient object");
    out.push_back(r.salient_box());
  }
  return out;
}

std::vector<int> labels_of(const DatasetManifest& m) {
  std::vector<int> out;
  for (const auto& r : m.records) out.push_back(r.label);
  return out;
}

/// Detections matched to manifest records by image path; unmatched records get none.
std::vector<std::optional<Rect>> boxes_from_file(const DatasetManifest& m, const std::string& path) {
  std::map<std::string, Rect> by_path;
  for (const auto& d : load_detections(path)) {
    if (!by_path.emplace(d.image_path, d.detection.rect).second) {
      throw ConfigError("duplicate detection for " + d.image_path + " in " + path);
    }
  }
  std::vector<std::optional<Rect>> out;
  std::size_t missing = 0;
  for (const auto& r : m.records) {
    const auto it = by_path.find(r.image_path);
    if (it == by_path.end()) {
      out.push_back(std::nullopt);
      ++missing;
    } else {
      out.push_back(it->second);
    }
  }
  if (missing > 0) log("{} of {} images have no detection in {}", missing, m.records.size(), path);
  return out;
}

/// Box source for the multinomial sampler and the detection crops: "none", "gt" or "file".
std::vector<std::optional<Rect>> resolve_boxes(const DatasetManifest& m, const std::string& source,
                                               const std::string& detections) {
  if (source == "file" && detections.empty()) throw UsageError("--boxes file needs --detections");
  if (source != "file" && !detections.empty()) throw UsageError("--detections needs --boxes file");
  if (source == "none") return std::vector<std::optional<Rect>>(m.records.size());
  if (source == "gt") {
    std::vector<std::optional<Rect>> out;
    for (const auto& b : salient_boxes(m)) out.push_back(b);
    return out;
  }
  return boxes_from_file(m, detections);
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

template <typename Fn>
void write_text(const std::string& path, Fn&& fill) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  fill(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

Rect parse_box(const std::string& s) {
  int v[4];
  char c[3];
  std::istringstream is(s);
  std::string extra;
  if (!(is >> v[0] >> c[0] >> v[1] >> c[1] >> v[2] >> c[2] >> v[3]) || c[0] != ',' || c[1] != ',' ||
      c[2] != ',' || (is >> extra)) {
    throw UsageError("--box expects x0,y0,x1,y1");
  }
  if (v[0] < 0 || v[1] < 0 || v[0] >= v[2] || v[1] >= v[3]) throw UsageError("--box must be a non-empty rect");
  return Rect(v[0], v[1], v[2], v[3]);
}

std::string detector_cascade_path(const std::string& dir) { return (fs::path(dir) / "cascade.model").string(); }
std::string detector_reloc_path(const std::string& dir) { return (fs::path(dir) / "relocalizers.model").string(); }

Detector load_detector(const std::string& dir) {
  Detector d;
  d.cascade = load_cascade(detector_cascade_path(dir));
  std::ifstream is(detector_reloc_path(dir), std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + detector_reloc_path(dir));
  d.relocalizers = load_relocalizers(is);
  return d;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SynthGenArgs {
  std::string out;
  std::size_t train = 2000;
  std::size_t test = 500;
  SceneSpec spec;
};

int run_synth_gen(const SynthGenArgs& a) {
  a.spec.validate();
  Stopwatch sw;
  const auto data = generate_dataset(a.spec, a.train, a.test);
  write_dataset(data, a.out);
  log("wrote {} train / {} test images to {} ({:.1f}s)", a.train, a.test, a.out, sw.seconds());
  return 0;
}

struct DetTrainArgs {
  std::string manifest;
  std::string model_dir;
  std::size_t limit = 0;
  DetectorTrainConfig cfg;
  RelocalizationConfig reloc;
};

int run_det_train(const DetTrainArgs& a) {
  auto split = load_split(a.manifest);
  auto gts = salient_boxes(split.manifest);
  std::size_t n = split.images.size();
  if (a.limit > 0 && a.limit < n) n = a.limit;
  const std::span<const ImageBuffer> images(split.images.data(), n);
  const std::span<const Rect> boxes(gts.data(), n);

  Stopwatch sw;
  DetectorTrainLog tlog;
  Detector det;
  det.cascade = train_cascade(images, boxes, a.cfg, &tlog);
  for (std::size_t s = 0; s < tlog.positives_per_stage.size(); ++s) {
    log("stage {}: {} positives, {} negatives", s, tlog.positives_per_stage[s], tlog.negatives_per_stage[s]);
  }
  log("cascade: {} weak classifiers ({:.1f}s)", det.cascade.weak_count(), sw.seconds());
  det.relocalizers = train_relocalizers(images, boxes, a.cfg.proposals, a.reloc);
  log("re-localization: {} steps ({:.1f}s total)", det.relocalizers.size(), sw.seconds());

  fs::create_directories(a.model_dir);
  save_cascade(det.cascade, detector_cascade_path(a.model_dir));
  write_text(detector_reloc_path(a.model_dir), [&](std::ostream& os) { save_relocalizers(det.relocalizers, os); });
  return 0;
}

struct DetRunArgs {
  std::string model_dir;
  std::string manifest;
  std::string out;
  std::string report;
  double iou = 0.80;
  std::string ap_mode = "eleven";
  int bins = 5;
  std::string binning = "quantile";
};

int run_det_run(const DetRunArgs& a) {
  const auto det = load_detector(a.model_dir);
  const auto split = load_split(a.manifest);
  Stopwatch sw;
  std::vector<DetectionRecord> records;
  for (std::size_t i = 0; i < split.images.size(); ++i) {
    records.push_back({split.manifest.records[i].image_path, detect(det, split.images[i])});
  }
  log("detected {} images ({:.1f}s)", records.size(), sw.seconds());
  write_text(a.out, [&](std::ostream& os) { save_detections(records, os); });

  if (!a.report.empty()) {
    const auto gts = salient_boxes(split.manifest);
    std::vector<std::vector<Detection>> per_image;
    for (const auto& r : records) per_image.push_back({r.detection});
    EvalResult ap;
    ap.metric = fmt::format("ap@{}", a.iou);
    ap.value = average_precision(per_image, gts, a.iou,
                                 a.ap_mode == "every" ? ApMode::kEveryPoint : ApMode::kElevenPoint);
    ap.support = gts.size();
    EvalResult curve;
    curve.metric = "size_score_spearman";
    curve.bins = score_vs_size_curve(per_image, gts, a.bins,
                                     a.binning == "equal-width" ? SizeBinning::kEqualWidth : SizeBinning::kQuantile);
    std::vector<double> idx, means;
    for (const auto& b : curve.bins) {
      idx.push_back(b.index);
      means.push_back(b.mean_score);
      curve.support += b.count;
    }
    curve.value = spearman(idx, means);
    const std::vector<EvalResult> results{ap, curve};
    log("AP {:.4f}, size-score spearman {:.3f}", ap.value, curve.value);
    write_text(a.report, [&](std::ostream& os) { os << format_report(results); });
  }
  return 0;
}

struct ClsTrainArgs {
  std::string manifest;
  std::string model;
  std::string boxes = "gt";
  std::string detections;
  std::string sampler;
  TrainConfig cfg;
};

int run_cls_train(ClsTrainArgs a) {
  a.cfg.sampler = parse_sampler_mode(a.sampler);
  const auto split = load_split(a.manifest);
  std::vector<std::optional<Rect>> boxes;
  if (a.cfg.sampler == SamplerMode::kMultinomial) {
    boxes = resolve_boxes(split.manifest, a.boxes, a.detections);
  }
  Stopwatch sw;
  TrainReport report;
  const auto model = train_classifier(split.images, labels_of(split.manifest), boxes, split.manifest.num_classes,
                                      a.cfg, &report);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) log("epoch {}: loss {:.4f}", e, report.epoch_loss[e]);
  log("{} classifier trained ({:.1f}s)", a.sampler, sw.seconds());
  ensure_parent(a.model);
  save_classifier(model, a.model);
  return 0;
}

ClassificationResult evaluate_classifier(const ClassifierModel& model, const LoadedSplit& split,
                                         std::span<const std::optional<Rect>> boxes, int resize_to,
                                         int crop_size) {
  if (model.classes != split.manifest.num_classes) {
    throw ConfigError(fmt::format("model has {} classes, test set {}", model.classes, split.manifest.num_classes));
  }
  std::vector<std::vector<double>> preds;
  for (std::size_t i = 0; i < split.images.size(); ++i) {
    preds.push_back(predict_test_time(model, split.images[i], boxes[i], resize_to, crop_size).probabilities);
  }
  const auto labels = labels_of(split.manifest);
  ClassificationResult r;
  r.test_set = manifest_fingerprint(split.manifest);
  r.support = labels.size();
  r.top1 = topk_accuracy(preds, labels, 1);
  r.top5 = topk_accuracy(preds, labels, std::min(5, model.classes));  // trivially 1 below five classes
  return r;
}

struct ClsEvalArgs {
  std::string model;
  std::string manifest;
  std::string report;
  std::string boxes = "none";
  std::string detections;
  int resize_to = 256;
  int crop_size = 224;
};

int run_cls_eval(const ClsEvalArgs& a) {
  const auto model = load_classifier(a.model);
  const auto split = load_split(a.manifest);
  const auto boxes = resolve_boxes(split.manifest, a.boxes, a.detections);
  const auto r = evaluate_classifier(model, split, boxes, a.resize_to, a.crop_size);
  log("top1 {:.4f}, top5 {:.4f} on {} images", r.top1, r.top5, r.support);
  const std::vector<EvalResult> results{{"top1", r.top1, r.support, {}}, {"top5", r.top5, r.support, {}}};
  write_text(a.report, [&](std::ostream& os) { os << "test_set=" << r.test_set << '\n' << format_report(results); });
  return 0;
}

struct SampleMapArgs {
  std::string image;
  std::string box;
  std::string out;
  int resize_to = 0;
  SamplerConfig sampler;
};

int run_sample_map(const SampleMapArgs& a) {
  a.sampler.validate();
  ImageBuffer img = read_pixmap(a.image);
  std::optional<Rect> det;
  if (!a.box.empty()) {
    det = parse_box(a.box);
    if (!Rect(0, 0, img.width(), img.height()).contains(*det)) throw ConfigError("--box lies outside the image");
  }
  if (a.resize_to > 0) {
    const auto [w, h] = shorter_side_size(img.width(), img.height(), a.resize_to);
    if (det) det = scale_rect(*det, img.width(), img.height(), w, h);
    img = resize_bilinear(img, w, h);
  }
  const auto dist = build_crop_distribution(img.width(), img.height(), det, a.sampler);
  if (dist.fallback_uniform()) log("no usable detection, distribution is uniform");
  const auto map = export_probability_map(dist);
  ensure_parent(a.out);
  write_pixmap(probability_map_image(map), a.out);
  log("wrote {}x{} probability map", map.columns, map.rows);
  return 0;
}

struct BenchmarkArgs {
  std::string data_dir;
  std::string out;
  std::string train_detections;
  std::string test_detections;
  int repeats = 5;
  TrainConfig cfg;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

int run_benchmark(const BenchmarkArgs& a) {
  if (a.train_detections.empty() != a.test_detections.empty()) {
    throw UsageError("--train-detections and --test-detections go together");
  }
  const auto train = load_split((fs::path(a.data_dir) / "train.manifest").string());
  const auto test = load_split((fs::path(a.data_dir) / "test.manifest").string());
  const bool gt = a.train_detections.empty();
  const auto train_boxes = gt ? resolve_boxes(train.manifest, "gt", "")
                              : resolve_boxes(train.manifest, "file", a.train_detections);
  const auto test_boxes = gt ? resolve_boxes(test.manifest, "gt", "")
                             : resolve_boxes(test.manifest, "file", a.test_detections);
  const std::vector<std::optional<Rect>> no_boxes(test.images.size());
  const auto labels = labels_of(train.manifest);

  std::vector<double> u1, u5, m1, m5;
  std::string per_seed;
  for (int k = 0; k < a.repeats; ++k) {
    TrainConfig cfg = a.cfg;
    cfg.seed = a.cfg.seed + std::uint64_t(k);
    Stopwatch sw;
    cfg.sampler = SamplerMode::kUniform;
    const auto uni = train_classifier(train.images, labels, {}, train.manifest.num_classes, cfg);
    const auto ru = evaluate_classifier(uni, test, no_boxes, cfg.resize_to, cfg.crops.crop_size);
    cfg.sampler = SamplerMode::kMultinomial;
    const auto mul = train_classifier(train.images, labels, train_boxes, train.manifest.num_classes, cfg);
    const auto rm = evaluate_classifier(mul, test, test_boxes, cfg.resize_to, cfg.crops.crop_size);
    log("seed {}: uniform {:.4f}, multinomial {:.4f} ({:.1f}s)", cfg.seed, ru.top1, rm.top1, sw.seconds());
    u1.push_back(ru.top1);
    u5.push_back(ru.top5);
    m1.push_back(rm.top1);
    m5.push_back(rm.top5);
    per_seed += fmt::format("# seed {}: Uniform {} {} Multinomial {} {}\n", cfg.seed, ru.top1, ru.top5, rm.top1,
                            rm.top5);
  }

  ClassificationResult uniform{manifest_fingerprint(test.manifest), test.images.size(), mean_of(u1), mean_of(u5)};
  ClassificationResult multinomial = uniform;
  multinomial.top1 = mean_of(m1);
  multinomial.top5 = mean_of(m5);
  write_text(a.out, [&](std::ostream& os) {
    os << benchmark_table(uniform, multinomial);
    os << fmt::format("# boxes: {}\n# repeats: {} (rows are means)\n", gt ? "ground truth" : "detections",
                      a.repeats);
    os << per_seed;
    os << fmt::format("# top1 mean+-sd: Uniform {:.4f}+-{:.4f} Multinomial {:.4f}+-{:.4f}\n", mean_of(u1),
                      sd_of(u1), mean_of(m1), sd_of(m1));
    os << fmt::format("# top5 mean+-sd: Uniform {:.4f}+-{:.4f} Multinomial {:.4f}+-{:.4f}\n", mean_of(u5),
                      sd_of(u5), mean_of(m5), sd_of(m5));
  });
  log("top1 uniform {:.4f} multinomial {:.4f}", uniform.top1, multinomial.top1);
  return 0;
}

// ---------------------------------------------------------------------------
// Option wiring
// ---------------------------------------------------------------------------

void add_train_options(CLI::App* sub, TrainConfig& cfg) {
  sub->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--crops-per-image", cfg.crops_per_image, "crops drawn per image and epoch")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--learning-rate", cfg.learning_rate, "SGD step size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--l2", cfg.l2, "weight decay")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--batch-size", cfg.batch_size, "mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--resize-to", cfg.resize_to, "shorter side after resizing")->capture_default_str();
  sub->add_option("--crop-size", cfg.crops.crop_size, "square crop side")->capture_default_str();
  sub->add_option("--tau", cfg.crops.tau, "minimum crop/detection overlap in pixels")->capture_default_str();
  sub->add_option("--flip-probability", cfg.crops.flip_probability, "mirror probability per crop")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
}

const std::vector<std::string> kBoxSources{"none", "gt", "file"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-centric crop sampling experiments"};
  app.name("ocs");
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.footer("Every command also takes --config FILE with 'key = value' lines; flags override it.");

  SynthGenArgs sg;
  auto* c_sg = app.add_subcommand("synth-gen", "generate a synthetic cluttered-scene dataset");
  c_sg->add_option("--out", sg.out, "output directory")->required();
  c_sg->add_option("--classes", sg.spec.num_classes, "number of classes")->capture_default_str();
  c_sg->add_option("--train", sg.train, "training images")->capture_default_str();
  c_sg->add_option("--test", sg.test, "test images")->capture_default_str();
  c_sg->add_option("--seed", sg.spec.seed, "random seed")->capture_default_str();
  c_sg->add_option("--short-side", sg.spec.short_side, "image shorter side")->capture_default_str();
  c_sg->add_option("--min-aspect", sg.spec.min_aspect, "smallest long/short side ratio")->capture_default_str();
  c_sg->add_option("--max-aspect", sg.spec.max_aspect, "largest long/short side ratio")->capture_default_str();
  c_sg->add_option("--portrait-probability", sg.spec.portrait_probability)->capture_default_str();
  c_sg->add_option("--salient-min", sg.spec.salient_area_min, "salient object area fraction, low")->capture_default_str();
  c_sg->add_option("--salient-max", sg.spec.salient_area_max, "salient object area fraction, high")->capture_default_str();
  c_sg->add_option("--distractors-min", sg.spec.distractors_min)->capture_default_str();
  c_sg->add_option("--distractors-max", sg.spec.distractors_max)->capture_default_str();
  c_sg->add_option("--distractor-area-min", sg.spec.distractor_area_min)->capture_default_str();
  c_sg->add_option("--distractor-area-max", sg.spec.distractor_area_max)->capture_default_str();
  c_sg->add_option("--occlusion-probability", sg.spec.distractor_occlusion_probability)->capture_default_str();
  c_sg->add_option("--clutter-density", sg.spec.clutter_density, "clutter blocks per 10^4 pixels")
      ->capture_default_str();

  DetTrainArgs dt;
  auto* c_dt = app.add_subcommand("det-train", "train the cascade detector and its re-localization steps");
  c_dt->add_option("--manifest", dt.manifest, "training manifest")->required();
  c_dt->add_option("--model-dir", dt.model_dir, "output directory for the detector files")->required();
  c_dt->add_option("--limit", dt.limit, "use only the first N images (0: all)")->capture_default_str();
  c_dt->add_option("--stages", dt.cfg.stages)->capture_default_str()->check(CLI::PositiveNumber);
  c_dt->add_option("--weak-per-stage", dt.cfg.weak_per_stage)->capture_default_str()->check(CLI::PositiveNumber);
  c_dt->add_option("--candidates", dt.cfg.candidates, "random regionlet sets per round")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_dt->add_option("--max-regionlets", dt.cfg.max_regionlets)->capture_default_str()->check(CLI::PositiveNumber);
  c_dt->add_option("--positive-iou", dt.cfg.positive_iou)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_dt->add_option("--negative-iou", dt.cfg.negative_iou)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_dt->add_option("--reloc-steps", dt.reloc.steps, "re-localization steps")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  c_dt->add_option("--reloc-lambda", dt.reloc.lambda, "ridge penalty")->capture_default_str();
  c_dt->add_option("--seed", dt.cfg.seed, "random seed")->capture_default_str();

  DetRunArgs dr;
  auto* c_dr = app.add_subcommand("det-run", "detect the salient object of every image in a manifest");
  c_dr->add_option("--model-dir", dr.model_dir, "detector directory")->required();
  c_dr->add_option("--manifest", dr.manifest, "images to process")->required();
  c_dr->add_option("--out", dr.out, "detection file")->required();
  c_dr->add_option("--report", dr.report, "also write AP and score-vs-size against the salient boxes");
  c_dr->add_option("--iou", dr.iou, "overlap required for a true positive")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_dr->add_option("--ap-mode", dr.ap_mode)->capture_default_str()->check(CLI::IsMember({"eleven", "every"}));
  c_dr->add_option("--bins", dr.bins, "size bins")->capture_default_str()->check(CLI::PositiveNumber);
  c_dr->add_option("--binning", dr.binning)->capture_default_str()->check(CLI::IsMember({"quantile", "equal-width"}));

  ClsTrainArgs ct;
  auto* c_ct = app.add_subcommand("cls-train", "train a crop classifier");
  c_ct->add_option("--sampler", ct.sampler, "crop sampler")->required()->check(CLI::IsMember({"uniform", "multinomial"}));
  c_ct->add_option("--manifest", ct.manifest, "training manifest")->required();
  c_ct->add_option("--model", ct.model, "output model file")->required();
  c_ct->add_option("--boxes", ct.boxes, "multinomial boxes: gt or file")->capture_default_str()->check(CLI::IsMember({"gt", "file"}));
  c_ct->add_option("--detections", ct.detections, "detection file for --boxes file");
  add_train_options(c_ct, ct.cfg);

  ClsEvalArgs ce;
  auto* c_ce = app.add_subcommand("cls-eval", "top-1/top-5 accuracy of a classifier on a manifest");
  c_ce->add_option("--model", ce.model, "classifier model")->required();
  c_ce->add_option("--manifest", ce.manifest, "test manifest")->required();
  c_ce->add_option("--report", ce.report, "output report")->required();
  c_ce->add_option("--boxes", ce.boxes, "detection crops: none, gt or file")->capture_default_str()->check(CLI::IsMember(kBoxSources));
  c_ce->add_option("--detections", ce.detections, "detection file for --boxes file");
  c_ce->add_option("--resize-to", ce.resize_to)->capture_default_str();
  c_ce->add_option("--crop-size", ce.crop_size)->capture_default_str();

  SampleMapArgs sm;
  auto* c_sm = app.add_subcommand("sample-map", "write the crop-position probability map of one image");
  c_sm->add_option("--image", sm.image, "input pixmap")->required();
  c_sm->add_option("--box", sm.box, "detection x0,y0,x1,y1 (omit for uniform)");
  c_sm->add_option("--out", sm.out, "output grayscale pixmap")->required();
  c_sm->add_option("--resize-to", sm.resize_to, "resize shorter side first (0: keep)")->capture_default_str();
  c_sm->add_option("--crop-size", sm.sampler.crop_size)->capture_default_str();
  c_sm->add_option("--tau", sm.sampler.tau, "minimum overlap in pixels")->capture_default_str();

  BenchmarkArgs bm;
  auto* c_bm = app.add_subcommand("benchmark", "uniform vs multinomial crop sampling, repeated over seeds");
  c_bm->add_option("--data-dir", bm.data_dir, "directory with train.manifest and test.manifest")->required();
  c_bm->add_option("--out", bm.out, "output table")->required();
  c_bm->add_option("--repeats", bm.repeats, "training seeds")->capture_default_str()->check(CLI::PositiveNumber);
  c_bm->add_option("--train-detections", bm.train_detections, "detections for training images (default: gt boxes)");
  c_bm->add_option("--test-detections", bm.test_detections, "detections for test images");
  add_train_options(c_bm, bm.cfg);

  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--threads") {
      ++i;
      continue;
    }
    if (args[i].rfind("--", 0) == 0) continue;
    if (!app.get_subcommand_no_throw(args[i])) {
      std::cerr << "ocs: unknown command '" << args[i] << "'\n\n" << app.help();
      return 2;
    }
    break;
  }
  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 takes the vector in reverse order
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "ocs: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "ocs: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ocs: " << e.what() << '\n';
    return 1;
  }

  try {
    if (threads > 0) kernels::set_max_threads(threads);
    if (c_sg->parsed()) return run_synth_gen(sg);
    if (c_dt->parsed()) return run_det_train(dt);
    if (c_dr->parsed()) return run_det_run(dr);
    if (c_ct->parsed()) return run_cls_train(ct);
    if (c_ce->parsed()) return run_cls_eval(ce);
    if (c_sm->parsed()) return run_sample_map(sm);
    if (c_bm->parsed()) return run_benchmark(bm);
  } catch (const UsageError& e) {
    std::cerr << "ocs: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ocs: " << e.what() << '\n';
    return 1;
  }
  std::cerr << app.help();
  return 2;
}
