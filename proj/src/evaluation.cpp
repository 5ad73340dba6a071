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

#include "ocs/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "ocs/error.hpp"

namespace ocs {

double average_precision(std::span<const std::vector<Detection>> detections, std::span<const Rect> gts,
                         double iou_threshold, ApMode mode) {
  if (gts.empty()) throw std::invalid_argument("average precision needs at least one ground truth");
  if (detections.size() != gts.size()) throw std::invalid_argument("one detection list per ground truth");

  struct Pooled {
    double score;
    std::size_t image;
    std::size_t order;
    const Rect* box;
  };
  std::vector<Pooled> pool;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (const auto& d : detections[i]) pool.push_back({d.score, i, pool.size(), &d.rect});
  }
  std::sort(pool.begin(), pool.end(), [](const Pooled& a, const Pooled& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.order < b.order;
  });

  const std::int64_t n_gt = std::int64_t(gts.size());
  std::vector<char> matched(gts.size(), 0);
  std::vector<std::int64_t> tp_at;  // cumulative true positives after each detection
  std::int64_t tp = 0;
  for (const auto& p : pool) {
    if (!matched[p.image] && iou(*p.box, gts[p.image]) >= iou_threshold) {
      matched[p.image] = 1;
      ++tp;
    }
    tp_at.push_back(tp);
  }

  const std::size_t n = tp_at.size();
  std::vector<double> precision(n);
  for (std::size_t k = 0; k < n; ++k) precision[k] = double(tp_at[k]) / double(k + 1);
  // Envelope: best precision at this rank or any later one.
  std::vector<double> envelope(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) envelope[k] = std::max(precision[k], envelope[k + 1]);

  if (mode == ApMode::kElevenPoint) {
    double sum = 0.0;
    for (int r = 0; r <= 10; ++r) {
      // first rank whose recall reaches r/10, compared in integers
      const auto it = std::find_if(tp_at.begin(), tp_at.end(),
                                   [&](std::int64_t t) { return 10 * t >= std::int64_t(r) * n_gt; });
      if (it != tp_at.end()) sum += envelope[std::size_t(it - tp_at.begin())];
    }
    return sum / 11.0;
  }
  double ap = 0.0;
  std::int64_t prev = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (tp_at[k] > prev) {
      ap += double(tp_at[k] - prev) / double(n_gt) * envelope[k];
      prev = tp_at[k];
    }
  }
  return ap;
}

std::vector<SizeBin> score_vs_size_curve(std::span<const std::vector<Detection>> detections,
                                         std::span<const Rect> gts, int bins, SizeBinning binning,
                                         double min_iou) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (detections.size() != gts.size()) throw std::invalid_argument("one detection list per ground truth");

  struct Item {
    std::int64_t area;
    std::size_t image;
    double score;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto& ds = detections[i];
    if (ds.empty()) continue;
    const auto best = std::max_element(ds.begin(), ds.end(), [](const Detection& a, const Detection& b) {
      return a.score < b.score;
    });
    if (iou(best->rect, gts[i]) < min_iou) continue;
    items.push_back({gts[i].area(), i, best->score});
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return std::tie(a.area, a.image) < std::tie(b.area, b.image); });

  std::vector<std::vector<const Item*>> members(static_cast<std::size_t>(bins));
  const std::size_t n = items.size();
  if (binning == SizeBinning::kQuantile) {
    for (std::size_t k = 0; k < n; ++k) members[k * std::size_t(bins) / n].push_back(&items[k]);
  } else if (n > 0) {
    const std::int64_t lo = items.front().area, hi = items.back().area;
    for (const auto& it : items) {
      std::size_t b = 0;
      if (hi > lo) {
        b = std::size_t(static_cast<__int128>(it.area - lo) * bins / (hi - lo + 1));
      }
      members[std::min(b, std::size_t(bins) - 1)].push_back(&it);
    }
  }

  std::vector<SizeBin> out;
  for (int b = 0; b < bins; ++b) {
    const auto& m = members[std::size_t(b)];
    if (m.empty()) continue;
    SizeBin bin;
    bin.index = b;
    bin.min_area = m.front()->area;
    bin.max_area = m.back()->area;
    bin.count = m.size();
    double sum = 0.0;
    for (const auto* it : m) sum += it->score;
    bin.mean_score = sum / double(m.size());
    out.push_back(bin);
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman needs equal-length inputs");
  if (a.size() < 2) return 0.0;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

bool nondecreasing(std::span<const SizeBin> bins) {
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (bins[i].mean_score < bins[i - 1].mean_score) return false;
  }
  return true;
}

std::string format_report(std::span<const EvalResult> results) {
  std::string out;
  for (const auto& r : results) {
    out += fmt::format("{}.value={}\n{}.support={}\n", r.metric, r.value, r.metric, r.support);
    for (const auto& b : r.bins) {
      out += fmt::format("{}.bin{}.area={}-{}\n{}.bin{}.count={}\n{}.bin{}.mean_score={}\n", r.metric, b.index,
                         b.min_area, b.max_area, r.metric, b.index, b.count, r.metric, b.index, b.mean_score);
    }
  }
  return out;
}

std::string manifest_fingerprint(const DatasetManifest& manifest) {
  std::ostringstream os;
  save_manifest(manifest, os);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

// ---------------------------------------------------------------------------
// Benchmark table
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTableHeader = "sampling\ttop1\ttop5\tsupport\ttest_set";

}  // namespace

std::string benchmark_table(const ClassificationResult& uniform, const ClassificationResult& multinomial) {
  if (uniform.test_set != multinomial.test_set || uniform.support != multinomial.support) {
    throw std::invalid_argument("benchmark results come from different test sets");
  }
  std::string out;
  out += "# classification accuracy (ratio) by crop sampling strategy\n";
  out += kTableHeader;
  out += '\n';
  out += fmt::format("Uniform\t{}\t{}\t{}\t{}\n", uniform.top1, uniform.top5, uniform.support, uniform.test_set);
  out += fmt::format("Multinomial\t{}\t{}\t{}\t{}\n", multinomial.top1, multinomial.top5, multinomial.support,
                     multinomial.test_set);
  out += fmt::format("Delta\t{}\t{}\t{}\t{}\n", multinomial.top1 - uniform.top1, multinomial.top5 - uniform.top5,
                     uniform.support, uniform.test_set);
  out += "# reference (full-scale, percent, not computed): Uniform 81.6 92.8\n";
  out += "# reference (full-scale, percent, not computed): Multinomial 89.3 96.6\n";
  return out;
}

namespace {

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("bad number '" + s + "'", line);
  }
  return v;
}

}  // namespace

BenchmarkTable parse_benchmark_table(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  bool seen[3] = {false, false, false};
  BenchmarkTable t;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kTableHeader) throw FormatError("unexpected table header", line_no);
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string tok; std::getline(ls, tok, '\t');) f.push_back(tok);
    if (f.size() != 5) throw FormatError("table row needs 5 fields", line_no);
    ClassificationResult r;
    r.top1 = parse_double(f[1], line_no);
    r.top5 = parse_double(f[2], line_no);
    r.support = std::size_t(parse_double(f[3], line_no));
    r.test_set = f[4];
    if (f[0] == "Uniform") {
      t.uniform = r;
      seen[0] = true;
    } else if (f[0] == "Multinomial") {
      t.multinomial = r;
      seen[1] = true;
    } else if (f[0] == "Delta") {
      t.delta_top1 = r.top1;
      t.delta_top5 = r.top5;
      seen[2] = true;
    } else {
      throw FormatError("unknown row '" + f[0] + "'", line_no);
    }
  }
  if (!header || !seen[0] || !seen[1] || !seen[2]) throw FormatError("incomplete benchmark table", line_no);
  return t;
}

}  // namespace ocs
