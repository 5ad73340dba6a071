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


#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ocs/dataset.hpp"
#include "ocs/error.hpp"
#include "test_util.hpp"

namespace ocs {
namespace {

ObjectAnnotation obj(int x0, int y0, int x1, int y1, int label, bool occluded = false) {
  return {Rect(x0, y0, x1, y1), label, occluded, false};
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ocs_dataset_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// --- salient ground truth ---------------------------------------------------

TEST(SalientGroundTruth, SingleCandidate) {
  Rng rng(1);
  const std::vector<ObjectAnnotation> c{obj(0, 0, 10, 10, 3)};
  EXPECT_EQ(select_salient_ground_truth(c, 3, 100, 100, rng), 0u);
}

TEST(SalientGroundTruth, BiggerPreferred) {
  Rng rng(1);
  const std::vector<ObjectAnnotation> c{obj(0, 0, 50, 50, 2), obj(0, 0, 100, 100, 2)};
  EXPECT_EQ(select_salient_ground_truth(c, 2, 200, 200, rng), 1u);
}

TEST(SalientGroundTruth, VisibleBeatsLargerOccluded) {
  Rng rng(1);
  const std::vector<ObjectAnnotation> c{obj(0, 0, 100, 100, 2, true), obj(0, 0, 20, 20, 2)};
  EXPECT_EQ(select_salient_ground_truth(c, 2, 200, 200, rng), 1u);
}

TEST(SalientGroundTruth, CenteredBreaksAreaTie) {
  Rng rng(1);
  const std::vector<ObjectAnnotation> c{obj(0, 0, 20, 20, 1), obj(90, 90, 110, 110, 1), obj(150, 10, 170, 30, 1)};
  EXPECT_EQ(select_salient_ground_truth(c, 1, 200, 200, rng), 1u);
}

TEST(SalientGroundTruth, LabelConsistencyFirst) {
  Rng rng(1);
  const std::vector<ObjectAnnotation> c{obj(0, 0, 150, 150, 4), obj(0, 0, 20, 20, 5, true)};
  EXPECT_EQ(select_salient_ground_truth(c, 5, 200, 200, rng), 1u);
  EXPECT_THROW(select_salient_ground_truth(c, 6, 200, 200, rng), ConfigError);
}

TEST(SalientGroundTruth, ExactTiesSeededAndPermutationInvariant) {
  // four identical candidates, symmetric about the center
  std::vector<ObjectAnnotation> c{obj(10, 10, 30, 30, 0), obj(70, 10, 90, 30, 0), obj(10, 70, 30, 90, 0),
                                  obj(70, 70, 90, 90, 0)};
  std::set<std::size_t> winners;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    Rng a(seed), b(seed);
    const auto i = select_salient_ground_truth(c, 0, 100, 100, a);
    EXPECT_EQ(i, select_salient_ground_truth(c, 0, 100, 100, b));
    winners.insert(i);
    // same winner box after permuting the candidates
    auto perm = c;
    std::reverse(perm.begin(), perm.end());
    Rng p(seed);
    EXPECT_EQ(perm[select_salient_ground_truth(perm, 0, 100, 100, p)].box, c[i].box);
  }
  EXPECT_GT(winners.size(), 1u);
}

// --- synthetic scenes -------------------------------------------------------

TEST(SceneSpec, Validation) {
  SceneSpec s;
  EXPECT_NO_THROW(s.validate());
  s.distractor_area_max = 0.25;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SceneSpec{};
  s.salient_area_min = 0.7;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SceneSpec{};
  s.num_classes = 1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(SyntheticScene, Deterministic) {
  SceneSpec spec;
  Rng a(5), b(5);
  const auto s1 = generate_synthetic_scene(spec, 3, a);
  const auto s2 = generate_synthetic_scene(spec, 3, b);
  EXPECT_EQ(s1.image, s2.image);
  EXPECT_EQ(s1.record, s2.record);
}

TEST(SyntheticScene, InvariantsOverManyScenes) {
  SceneSpec spec;
  spec.short_side = 64;  // small images keep the loop fast; relative geometry is unchanged
  for (int i = 0; i < 1000; ++i) {
    Rng rng(scene_seed(99, std::uint64_t(i)));
    const int cls = i % spec.num_classes;
    const auto scene = generate_synthetic_scene(spec, cls, rng);
    const auto& r = scene.record;
    const int w = scene.image.width(), h = scene.image.height();
    ASSERT_EQ(std::min(w, h), 64);
    ASSERT_TRUE(r.salient.has_value());
    const auto& sal = r.objects[*r.salient];
    EXPECT_EQ(sal.label, cls);
    EXPECT_FALSE(sal.occluded);
    EXPECT_EQ(std::count_if(r.objects.begin(), r.objects.end(), [&](const ObjectAnnotation& o) { return o.label == cls; }), 1);
    EXPECT_LE(r.objects.size(), 4u);
    for (const auto& o : r.objects) EXPECT_TRUE(scene.image.bounds().contains(o.box));
    // area within the range, up to rounding of each side
    const double area = double(w) * h;
    const double slack = (sal.box.width() + sal.box.height() + 1.0) / area;
    const double rel = double(sal.box.area()) / area;
    EXPECT_GE(rel, spec.salient_area_min - slack);
    EXPECT_LE(rel, spec.salient_area_max + slack);
    // center inside the middle 60%, up to one pixel of rounding
    EXPECT_GE(sal.box.center_x(), 0.2 * w - 1.0);
    EXPECT_LE(sal.box.center_x(), 0.8 * w + 1.0);
    EXPECT_GE(sal.box.center_y(), 0.2 * h - 1.0);
    EXPECT_LE(sal.box.center_y(), 0.8 * h + 1.0);
  }
}

TEST(SyntheticScene, ClassTextureStatisticsDiffer) {
  SceneSpec spec;
  spec.short_side = 96;
  spec.distractors_max = 0;
  // per-class mean color and mean horizontal/vertical gradient inside the salient box
  std::vector<std::array<double, 5>> mean(std::size_t(spec.num_classes), std::array<double, 5>{});
  const int per_class = 10;
  for (int cls = 0; cls < spec.num_classes; ++cls) {
    for (int k = 0; k < per_class; ++k) {
      Rng rng(scene_seed(7, std::uint64_t(cls * per_class + k)));
      const auto scene = generate_synthetic_scene(spec, cls, rng);
      const auto& box = scene.record.salient_box();
      std::array<double, 5> s{};
      for (int y = box.y0(); y + 1 < box.y1(); ++y) {
        for (int x = box.x0(); x + 1 < box.x1(); ++x) {
          for (int c = 0; c < 3; ++c) s[std::size_t(c)] += scene.image.at(x, y, c);
          s[3] += std::abs(gray_at(scene.image, x + 1, y) - gray_at(scene.image, x, y));
          s[4] += std::abs(gray_at(scene.image, x, y + 1) - gray_at(scene.image, x, y));
        }
      }
      const double n = double(box.width() - 1) * (box.height() - 1);
      for (std::size_t j = 0; j < 5; ++j) mean[std::size_t(cls)][j] += s[j] / n / per_class;
    }
  }
  for (std::size_t a = 0; a < mean.size(); ++a) {
    for (std::size_t b = a + 1; b < mean.size(); ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < 5; ++j) d = std::max(d, std::abs(mean[a][j] - mean[b][j]));
      EXPECT_GT(d, 5.0) << "classes " << a << " and " << b;
    }
  }
}

TEST(SyntheticDataset, BalancedDisjointAndNamed) {
  SceneSpec spec;
  spec.short_side = 48;
  const auto data = generate_dataset(spec, 40, 10);
  ASSERT_EQ(data.train.records.size(), 40u);
  ASSERT_EQ(data.test.records.size(), 10u);
  EXPECT_EQ(data.train.records[0].image_path, "train/000000.ppm");
  EXPECT_EQ(data.test.records[9].image_path, "test/000009.ppm");
  std::vector<int> counts(10, 0);
  for (const auto& r : data.train.records) ++counts[std::size_t(r.label)];
  for (int c : counts) EXPECT_EQ(c, 4);
  for (const auto& a : data.train_images) {
    for (const auto& b : data.test_images) EXPECT_FALSE(a == b);
  }
  const auto again = generate_dataset(spec, 40, 10);
  EXPECT_EQ(again.train, data.train);
  EXPECT_EQ(again.test_images, data.test_images);
}

// --- manifests --------------------------------------------------------------

DatasetManifest toy_manifest() {
  DatasetManifest m;
  m.split = Split::kTest;
  m.num_classes = 3;
  AnnotationRecord a;
  a.image_path = "img/a.ppm";
  a.label = 2;
  a.objects = {obj(1, 2, 8, 9, 2), {Rect(0, 0, 3, 3), 1, true, true}};
  a.salient = 0;
  AnnotationRecord b;
  b.image_path = "img/b.ppm";
  b.label = 0;
  m.records = {a, b};
  return m;
}

DatasetManifest parse(const std::string& text) {
  std::istringstream is(text);
  return load_manifest(is, std::nullopt);
}

TEST(Manifest, RoundTrip) {
  const auto m = toy_manifest();
  std::ostringstream os;
  save_manifest(m, os);
  EXPECT_EQ(os.str(),
            "OCSMANIFEST v1 test 3\n"
            "img/a.ppm\t2\t0\t2\t1,2,8,9,2,0,0\t0,0,3,3,1,1,1\n"
            "img/b.ppm\t0\t-1\t0\n");
  EXPECT_EQ(parse(os.str()), m);
  EXPECT_EQ(m.class_names(), (std::vector<std::string>{"class_0", "class_1", "class_2"}));
}

TEST(Manifest, EmptyIsHeaderOnly) {
  DatasetManifest m;
  m.num_classes = 4;
  std::ostringstream os;
  save_manifest(m, os);
  EXPECT_EQ(os.str(), "OCSMANIFEST v1 train 4\n");
  EXPECT_EQ(parse(os.str()), m);
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    return e.line();
  }
  return -1;
}

TEST(Manifest, MalformedLinesReportLineNumbers) {
  const std::string head = "OCSMANIFEST v1 train 3\n";
  EXPECT_EQ(error_line("OCSMANIFEST v2 train 3\n"), 1);
  EXPECT_EQ(error_line("OCSMANIFEST v1 dev 3\n"), 1);
  EXPECT_EQ(error_line("OCSMANIFEST v1 train 3 extra\n"), 1);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t-1\t0\nb.ppm\t7\t-1\t0\n"), 3);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t0\t1\t1,2,8,9,0,0,0\textra\n"), 2);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t0\t1\t1,2,8,9,0,0\n"), 2);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t0\t1\t8,2,1,9,0,0,0\n"), 2);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t0\t1\t1,2,8,9,1,0,0\n"), 2);  // salient label differs
  EXPECT_EQ(error_line(head + "a.ppm\t0\t1\t1\t1,2,8,9,0,0,0\n"), 2);
  EXPECT_EQ(error_line(head + "a.ppm\t0\t-1\t0\n\n"), 3);
  EXPECT_EQ(error_line(head + "a.ppm\tx\t-1\t0\n"), 2);
}

TEST(Manifest, OutOfBoundsBoxRejectedAgainstImage) {
  const auto dir = temp_dir("bounds");
  write_pixmap(ImageBuffer(10, 10, 3), (dir / "a.ppm").string());
  {
    std::ofstream os(dir / "ok.manifest");
    os << "OCSMANIFEST v1 train 2\na.ppm\t1\t0\t1\t0,0,10,10,1,0,0\n";
  }
  {
    std::ofstream os(dir / "bad.manifest");
    os << "OCSMANIFEST v1 train 2\na.ppm\t1\t0\t1\t0,0,11,10,1,0,0\n";
  }
  EXPECT_EQ(load_manifest((dir / "ok.manifest").string()).records.size(), 1u);
  try {
    load_manifest((dir / "bad.manifest").string());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  // without image verification the box is accepted
  EXPECT_NO_THROW(load_manifest((dir / "bad.manifest").string(), false));
}

// --- pixmaps ----------------------------------------------------------------

TEST(Pixmap, KnownBytes) {
  const std::string bytes = std::string("P6\n2 2\n255\n") + std::string("\x01\x02\x03\x04\x05\x06\x07\x08\x09\x0a\x0b\xff", 12);
  std::istringstream is(bytes);
  const auto img = read_pixmap(is);
  ASSERT_EQ(img.channels(), 3);
  ASSERT_EQ(img.width(), 2);
  EXPECT_EQ(img.at(0, 0, 0), 1);
  EXPECT_EQ(img.at(1, 0, 2), 6);
  EXPECT_EQ(img.at(0, 1, 1), 8);
  EXPECT_EQ(img.at(1, 1, 2), 255);
}

TEST(Pixmap, RoundTripBothKinds) {
  std::mt19937_64 rng(3);
  for (int ch : {1, 3}) {
    const auto img = testing::random_image(13, 7, ch, rng);
    std::stringstream ss;
    write_pixmap(img, ss);
    EXPECT_EQ(ss.str().substr(0, 2), ch == 1 ? "P5" : "P6");
    EXPECT_EQ(read_pixmap(ss), img);
  }
}

TEST(Pixmap, HeaderCommentsAccepted) {
  std::istringstream is(std::string("P5\n# made by hand\n2 1\n255\n") + std::string("\x10\x20", 2));
  const auto img = read_pixmap(is);
  EXPECT_EQ(img.channels(), 1);
  EXPECT_EQ(img.at(1, 0), 0x20);
}

TEST(Pixmap, Errors) {
  std::istringstream maxval("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06");
  EXPECT_THROW(read_pixmap(maxval), FormatError);
  std::istringstream truncated(std::string("P6\n2 1\n255\n") + "\x01\x02\x03");
  EXPECT_THROW(read_pixmap(truncated), FormatError);
  std::istringstream ascii("P3\n1 1\n255\n1 2 3\n");
  EXPECT_THROW(read_pixmap(ascii), FormatError);
}

}  // namespace
}  // namespace ocs
