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

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "ocs/detector.hpp"
#include "ocs/error.hpp"

namespace ocs {

namespace {

std::string real(double v) { return fmt::format("{:.9g}", v); }

/// Reads whitespace-separated tokens line by line, tracking line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::istringstream next(const char* what) {
    std::string line;
    if (!std::getline(is_, line)) throw FormatError(std::string("unexpected end of file, expected ") + what, line_ + 1);
    ++line_;
    return std::istringstream(line);
  }
  int line() const { return line_; }

  template <typename T>
  T take(std::istringstream& ss, const char* what) {
    T v;
    if (!(ss >> v)) throw FormatError(std::string("expected ") + what, line_);
    return v;
  }
  double take_real(std::istringstream& ss, const char* what) {
    const auto tok = take<std::string>(ss, what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw FormatError(std::string("bad number for ") + what, line_);
    return v;
  }
  void expect_end(std::istringstream& ss) {
    std::string extra;
    if (ss >> extra) throw FormatError("unexpected field '" + extra + "'", line_);
  }

 private:
  std::istream& is_;
  int line_ = 0;
};

}  // namespace

void save_cascade(const CascadeModel& model, std::ostream& os) {
  os << "OCSCASCADE v1 " << model.stages.size() << ' ' << model.weak_count() << ' '
     << model.metadata.size() << '\n';
  for (const auto& [k, v] : model.metadata) os << "meta " << k << ' ' << v << '\n';
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    const auto& stage = model.stages[s];
    os << "stage " << s << ' ' << stage.weak.size() << ' ' << real(stage.reject_threshold) << '\n';
    for (const auto& wc : stage.weak) {
      os << s << ' ' << wc.regionlets.size();
      for (const auto& r : wc.regionlets) {
        os << ' ' << real(r.rx0) << ' ' << real(r.ry0) << ' ' << real(r.rx1) << ' ' << real(r.ry1)
           << ' ' << int(r.feature) << ' ' << r.channel;
      }
      os << ' ' << real(wc.threshold) << ' ' << real(wc.alpha_plus) << ' ' << real(wc.alpha_minus)
         << '\n';
    }
  }
}

CascadeModel load_cascade(std::istream& is) {
  LineReader in(is);
  auto header = in.next("header");
  if (in.take<std::string>(header, "magic") != "OCSCASCADE" ||
      in.take<std::string>(header, "version") != "v1") {
    throw FormatError("not an OCSCASCADE v1 file", 1);
  }
  const auto n_stages = in.take<std::size_t>(header, "stage count");
  const auto n_weak = in.take<std::size_t>(header, "weak count");
  const auto n_meta = in.take<std::size_t>(header, "metadata count");
  in.expect_end(header);

  CascadeModel model;
  for (std::size_t m = 0; m < n_meta; ++m) {
    auto ss = in.next("meta line");
    if (in.take<std::string>(ss, "meta tag") != "meta") throw FormatError("expected meta line", in.line());
    auto key = in.take<std::string>(ss, "meta key");
    auto value = in.take<std::string>(ss, "meta value");
    in.expect_end(ss);
    model.metadata.emplace_back(std::move(key), std::move(value));
  }
  for (std::size_t s = 0; s < n_stages; ++s) {
    auto ss = in.next("stage line");
    if (in.take<std::string>(ss, "stage tag") != "stage" || in.take<std::size_t>(ss, "stage index") != s) {
      throw FormatError("expected 'stage " + std::to_string(s) + "'", in.line());
    }
    const auto count = in.take<std::size_t>(ss, "stage weak count");
    CascadeStage stage;
    stage.reject_threshold = in.take_real(ss, "reject threshold");
    in.expect_end(ss);
    for (std::size_t k = 0; k < count; ++k) {
      auto ws = in.next("weak classifier");
      if (in.take<std::size_t>(ws, "stage index") != s) throw FormatError("stage index mismatch", in.line());
      const auto n_reg = in.take<std::size_t>(ws, "regionlet count");
      if (n_reg < 1 || n_reg > 3) throw FormatError("regionlet count must be 1..3", in.line());
      WeakClassifier wc;
      for (std::size_t r = 0; r < n_reg; ++r) {
        RegionletSpec spec;
        spec.rx0 = in.take_real(ws, "rx0");
        spec.ry0 = in.take_real(ws, "ry0");
        spec.rx1 = in.take_real(ws, "rx1");
        spec.ry1 = in.take_real(ws, "ry1");
        spec.feature = FeatureId(in.take<int>(ws, "feature id"));
        spec.channel = in.take<int>(ws, "channel");
        wc.regionlets.push_back(spec);
      }
      wc.threshold = in.take_real(ws, "threshold");
      wc.alpha_plus = in.take_real(ws, "alpha_plus");
      wc.alpha_minus = in.take_real(ws, "alpha_minus");
      in.expect_end(ws);
      try {
        wc.validate();
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what(), in.line());
      }
      stage.weak.push_back(std::move(wc));
    }
    model.stages.push_back(std::move(stage));
  }
  if (model.weak_count() != n_weak) throw FormatError("weak classifier count does not match header", 1);
  std::string extra;
  if (is >> extra) throw FormatError("trailing content after model", in.line() + 1);
  return model;
}

void save_cascade(const CascadeModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_cascade(model, os);
}

CascadeModel load_cascade(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_cascade(is);
}

void save_regressor(const BoxRegressor& reg, std::ostream& os) {
  os << "OCSREG v1 " << reg.dim << ' ' << real(reg.lambda) << '\n';
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j <= reg.dim; ++j) {
      if (j) os << ' ';
      os << real(reg.weights[std::size_t(j) * 4 + k]);
    }
    os << '\n';
  }
}

BoxRegressor load_regressor(std::istream& is) {
  LineReader in(is);
  auto header = in.next("header");
  if (in.take<std::string>(header, "magic") != "OCSREG" ||
      in.take<std::string>(header, "version") != "v1") {
    throw FormatError("not an OCSREG v1 file", 1);
  }
  BoxRegressor reg;
  reg.dim = in.take<int>(header, "dimension");
  if (reg.dim < 1) throw FormatError("regressor dimension must be >= 1", 1);
  reg.lambda = in.take_real(header, "lambda");
  in.expect_end(header);
  reg.weights.assign(std::size_t(reg.dim + 1) * 4, 0.0);
  for (int k = 0; k < 4; ++k) {
    auto ss = in.next("weight row");
    for (int j = 0; j <= reg.dim; ++j) reg.weights[std::size_t(j) * 4 + k] = in.take_real(ss, "weight");
    in.expect_end(ss);
  }
  return reg;
}

void save_relocalizers(std::span<const BoxRegressor> steps, std::ostream& os) {
  os << "OCSRELOC v1 " << steps.size() << '\n';
  for (const auto& r : steps) save_regressor(r, os);
}

std::vector<BoxRegressor> load_relocalizers(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty relocalizer file", 1);
  std::istringstream hs(line);
  std::string magic, version, extra;
  long long n = -1;
  if (!(hs >> magic >> version >> n) || magic != "OCSRELOC" || version != "v1" || n < 0 || (hs >> extra)) {
    throw FormatError("expected 'OCSRELOC v1 <steps>'", 1);
  }
  std::vector<BoxRegressor> steps;
  for (long long k = 0; k < n; ++k) {
    try {
      steps.push_back(load_regressor(is));
    } catch (const FormatError& e) {
      // regressor blocks are 5 lines each after the header
      throw FormatError(e.detail(), int(2 + 5 * k + (e.line() > 0 ? e.line() - 1 : 0)));
    }
  }
  if (std::getline(is, line) && !line.empty()) throw FormatError("trailing content", int(2 + 5 * n));
  return steps;
}

void save_detections(std::span<const DetectionRecord> records, std::ostream& os) {
  os << "OCSDET v1\n";
  for (const auto& r : records) {
    if (r.image_path.empty() || r.image_path.find_first_of("\t\n") != std::string::npos) {
      throw std::invalid_argument("image path must be non-empty without tabs or newlines");
    }
    const auto& b = r.detection.rect;
    os << fmt::format("{}\t{} {} {} {}\t{}\n", r.image_path, b.x0(), b.y0(), b.x1(), b.y1(), r.detection.score);
  }
}

void save_detections(std::span<const DetectionRecord> records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_detections(records, os);
}

std::vector<DetectionRecord> load_detections(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "OCSDET v1") throw FormatError("expected 'OCSDET v1'", 1);
  std::vector<DetectionRecord> out;
  for (int line_no = 2; std::getline(is, line); ++line_no) {
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos || t1 == 0) {
      throw FormatError("expected '<image-path>\\t<x0> <y0> <x1> <y1>\\t<score>'", line_no);
    }
    std::istringstream bs(line.substr(t1 + 1, t2 - t1 - 1));
    int v[4];
    std::string extra;
    if (!(bs >> v[0] >> v[1] >> v[2] >> v[3]) || (bs >> extra)) throw FormatError("bad box", line_no);
    if (v[0] < 0 || v[1] < 0 || v[0] >= v[2] || v[1] >= v[3]) throw FormatError("invalid box", line_no);
    const std::string score = line.substr(t2 + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(score.data(), score.data() + score.size(), value);
    if (score.empty() || ec != std::errc() || ptr != score.data() + score.size()) {
      throw FormatError("bad score '" + score + "'", line_no);
    }
    out.push_back({line.substr(0, t1), {Rect(v[0], v[1], v[2], v[3]), value}});
  }
  return out;
}

std::vector<DetectionRecord> load_detections(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_detections(is);
}

}  // namespace ocs
