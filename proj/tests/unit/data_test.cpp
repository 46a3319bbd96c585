#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/log.hpp"
#include "rbi/data/cache.hpp"
#include "rbi/data/crop.hpp"
#include "rbi/data/desk_corpus.hpp"
#include "rbi/data/detection.hpp"
#include "rbi/data/frames.hpp"
#include "rbi/data/manifest.hpp"
#include "test_support.hpp"

using namespace rbi;
using namespace rbi::data;
namespace fs = std::filesystem;
namespace t = rbi::testing;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_toy_corpus(const fs::path& root, int videos, int frames, double missing = 0.0) {
  DeskCorpusOptions o;
  o.genuine_videos = videos;
  o.frames_per_video = frames;
  o.render.frame_size = 48;
  o.missing_face_probability = missing;
  o.seed = 3;
  write_desk_corpus(root, o);
}

std::size_t count_split(const std::vector<ManifestRecord>& rows, Split s) {
  std::set<std::string> ids;
  for (const auto& r : rows) {
    if (r.split == s) ids.insert(r.video_id);
  }
  return ids.size();
}

}  // namespace

// sample_frames

TEST(SampleFrames, EvenSpacingWithEndpoints) {
  const auto idx = sample_frames(100, 20);
  ASSERT_EQ(idx.size(), 20u);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(idx[i], static_cast<int>(std::lround(99.0 * i / 19.0))) << i;
  EXPECT_EQ(idx.front(), 0);
  EXPECT_EQ(idx.back(), 99);
}

TEST(SampleFrames, ShortVideoReturnsAllFramesWithWarning) {
  const auto before = log::warning_count();
  auto old = log::set_sink([](log::Level, std::string_view) {});
  const auto idx = sample_frames(5, 32);
  log::set_sink(old);
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(log::warning_count(), before + 1);
}

TEST(SampleFrames, SingleFrameIsMiddle) {
  EXPECT_EQ(sample_frames(10, 1), std::vector<int>{4});
  EXPECT_EQ(sample_frames(11, 1), std::vector<int>{5});
  EXPECT_EQ(sample_frames(1, 1), std::vector<int>{0});
}

TEST(SampleFrames, PureFunctionAndSorted) {
  for (int count : {7, 32, 33, 250}) {
    for (int n : {1, 5, 20, 32}) {
      const auto a = sample_frames(count, n);
      EXPECT_EQ(a, sample_frames(count, n));
      EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
      EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
      EXPECT_LT(a.back(), count);
    }
  }
}

// resolve_multi_face

TEST(ResolveMultiFace, Examples) {
  EXPECT_EQ(resolve_multi_face({BBox{0, 0, 10, 10}}), 0u);
  EXPECT_FALSE(resolve_multi_face({}).has_value());
  EXPECT_EQ(resolve_multi_face({BBox{0, 0, 10, 10}, BBox{20, 20, 40, 40}}), 1u);
  cv::Mat mask = cv::Mat::zeros(50, 50, CV_32FC1);
  mask(cv::Rect(30, 30, 10, 10)).setTo(1.0f);
  const std::vector<BBox> boxes{BBox{0, 0, 30, 30}, BBox{25, 25, 45, 45}};
  EXPECT_EQ(resolve_multi_face(boxes, &mask), 1u);
}

TEST(ResolveMultiFace, MaskBeatsAreaAndTiesGoLow) {
  cv::Mat mask = cv::Mat::zeros(50, 50, CV_32FC1);
  mask(cv::Rect(0, 0, 5, 5)).setTo(1.0f);
  EXPECT_EQ(resolve_multi_face({BBox{0, 0, 5, 5}, BBox{10, 10, 50, 50}}, &mask), 0u);
  EXPECT_EQ(resolve_multi_face({BBox{0, 0, 10, 10}, BBox{5, 5, 15, 15}}), 0u);
}

// crop_and_resize

TEST(Crop, FullFrameWithoutMarginIsPlainResize) {
  const auto face = t::synthetic_face(40);
  const auto c = crop_and_resize(face.image, BBox{0, 0, 40, 40}, {}, CropOptions{0.0, 20});
  EXPECT_EQ(c.image.size(), cv::Size(20, 20));
  EXPECT_FALSE(c.clamped);
  EXPECT_EQ(c.region, cv::Rect(0, 0, 40, 40));
  EXPECT_NEAR(c.transform.scale_x, 0.5, 1e-12);
}

TEST(Crop, BoxCornerMapsToCropCorner) {
  cv::Mat frame(100, 120, CV_32FC3, cv::Scalar::all(0.5));
  const BBox box{30, 20, 70, 60};
  const std::vector<cv::Point2f> lm{{30, 20}, {70, 60}, {50, 40}};
  const auto c = crop_and_resize(frame, box, lm, CropOptions{0.0, 64});
  EXPECT_NEAR(c.landmarks[0].x, 0.0, 1.0);
  EXPECT_NEAR(c.landmarks[0].y, 0.0, 1.0);
  EXPECT_NEAR(c.landmarks[1].x, 64.0, 1.0);
  EXPECT_NEAR(c.landmarks[1].y, 64.0, 1.0);
  EXPECT_NEAR(c.landmarks[2].x, 32.0, 1.0);
}

TEST(Crop, InverseMappingRecoversLandmarks) {
  cv::Mat frame(200, 300, CV_32FC3, cv::Scalar::all(0.2));
  cv::RNG gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int x0 = gen.uniform(20, 150), y0 = gen.uniform(20, 100);
    const BBox box{x0, y0, x0 + gen.uniform(20, 100), y0 + gen.uniform(20, 80)};
    std::vector<cv::Point2f> lm;
    for (int k = 0; k < 10; ++k) {
      lm.emplace_back(gen.uniform(static_cast<float>(box.x0), static_cast<float>(box.x1)),
                      gen.uniform(static_cast<float>(box.y0), static_cast<float>(box.y1)));
    }
    const auto c = crop_and_resize(frame, box, lm, CropOptions{0.125, 380});
    for (std::size_t k = 0; k < lm.size(); ++k) {
      const auto back = c.transform.inverse(c.landmarks[k]);
      EXPECT_LE(cv::norm(back - lm[k]), 0.5);
    }
  }
}

TEST(Crop, OutOfFrameBoxIsClampedWithWarning) {
  cv::Mat frame(50, 50, CV_32FC3, cv::Scalar::all(0.3));
  const auto before = log::warning_count();
  auto old = log::set_sink([](log::Level, std::string_view) {});
  const auto c = crop_and_resize(frame, BBox{30, 30, 60, 60}, {}, CropOptions{0.125, 32});
  log::set_sink(old);
  EXPECT_TRUE(c.clamped);
  EXPECT_GT(log::warning_count(), before);
  EXPECT_LE(c.region.x + c.region.width, 50);
  EXPECT_EQ(c.image.size(), cv::Size(32, 32));
}

TEST(Crop, OptionsValidated) {
  EXPECT_THROW((CropOptions{-0.1, 32}.validate()), ConfigError);
  EXPECT_THROW((CropOptions{0.1, 0}.validate()), ConfigError);
}

// sidecar annotations

TEST(Sidecar, RoundTripAndDetector) {
  t::TempDir dir("sidecar");
  const auto frame_path = dir / "000001.png";
  const auto face = t::synthetic_face(32);
  write_image(frame_path, face.image);
  FaceAnnotation a{BBox{2, 3, 30, 31}, face.landmarks};
  write_annotations(sidecar_path(frame_path), {a});
  const auto read = read_annotations(sidecar_path(frame_path));
  ASSERT_EQ(read.size(), 1u);
  EXPECT_EQ(read[0].bbox, a.bbox);
  ASSERT_EQ(read[0].landmarks.size(), a.landmarks.size());
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) EXPECT_EQ(read[0].landmarks[i], a.landmarks[i]);
  SidecarDetector det;
  const auto boxes = det.detect(frame_path, face.image);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(det.landmarks(frame_path, face.image, boxes[0]).size(), 81u);
  EXPECT_EQ(sidecar_path(frame_path).filename(), "000001.json");
  EXPECT_EQ(mask_path(frame_path).filename(), "000001.mask.png");
}

TEST(Sidecar, ClampToFrame) {
  EXPECT_EQ(clamp_to_frame(BBox{-5, -2, 60, 40}, 50, 30), (BBox{0, 0, 50, 30}));
}

// manifests

TEST(Manifest, SixVideosSplitFourOneOne) {
  t::TempDir dir("manifest");
  write_toy_corpus(dir.path(), 6, 3);
  const auto m = build_manifest(dir.path(), SplitSpec::parse("4/1/1"), {2, nullptr});
  EXPECT_EQ(count_split(m.records, Split::kTrain), 4u);
  EXPECT_EQ(count_split(m.records, Split::kVal), 1u);
  EXPECT_EQ(count_split(m.records, Split::kTest), 1u);
  EXPECT_EQ(m.records.size(), 12u);
  EXPECT_NO_THROW(check_split_disjoint(m.records));
  for (std::size_t i = 1; i < m.records.size(); ++i) {
    const auto& a = m.records[i - 1];
    const auto& b = m.records[i];
    EXPECT_TRUE(std::tie(a.video_id, a.frame_index) < std::tie(b.video_id, b.frame_index));
  }
}

TEST(Manifest, RerunIsByteIdenticalAndReloads) {
  t::TempDir dir("manifest");
  write_toy_corpus(dir / "corpus", 6, 3);
  const auto a = build_manifest(dir / "corpus", SplitSpec::parse("4/1/1"));
  const auto b = build_manifest(dir / "corpus", SplitSpec::parse("4/1/1"));
  write_manifest(dir / "a.txt", a.records);
  write_manifest(dir / "b.txt", b.records);
  EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
  const auto loaded = load_manifest(dir / "a.txt");
  ASSERT_EQ(loaded.size(), a.records.size());
  write_manifest(dir / "c.txt", loaded);
  EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "c.txt"));
}

TEST(Manifest, DuplicateVideoAcrossSplitsRejected) {
  auto r = parse_record(format_record(ManifestRecord{"v1", "d/genuine/v1/0.png", 0, BBox{0, 0, 4, 4},
                                                     std::vector<cv::Point2f>(81), Label::kGenuine, "d",
                                                     Split::kTrain}));
  auto s = r;
  s.split = Split::kTest;
  EXPECT_THROW(check_split_disjoint({r, s}), DataError);
  t::TempDir dir("manifest");
  EXPECT_THROW(write_manifest(dir / "m.txt", {r, s}), DataError);
  {
    std::ofstream f(dir / "m.txt");
    f << format_record(r) << '\n' << format_record(s) << '\n';
  }
  EXPECT_THROW(load_manifest(dir / "m.txt"), DataError);
}

TEST(Manifest, ExplicitAssignmentConflictRejected) {
  t::TempDir dir("manifest");
  write_toy_corpus(dir.path(), 2, 1);
  SplitSpec spec;
  spec.assignments = {{"gen0000", Split::kTrain}, {"gen0000", Split::kTest}, {"gen0001", Split::kTest}};
  EXPECT_THROW(build_manifest(dir.path(), spec), DataError);
}

TEST(Manifest, SplitFile) {
  t::TempDir dir("manifest");
  write_toy_corpus(dir / "corpus", 3, 2);
  {
    std::ofstream f(dir / "splits.csv");
    f << "gen0000,train\ngen0001,test\n";
  }
  const auto m = build_manifest(dir / "corpus", SplitSpec::parse((dir / "splits.csv").string()));
  EXPECT_EQ(count_split(m.records, Split::kTrain), 1u);
  EXPECT_EQ(count_split(m.records, Split::kTest), 1u);
  ASSERT_EQ(m.skipped.size(), 1u);
  EXPECT_EQ(m.skipped[0].video_id, "gen0002");
}

TEST(Manifest, RecordFormatHasAllFields) {
  ManifestRecord r{"v", "d/genuine/v/000000.png", 7, BBox{1, 2, 3, 4}, std::vector<cv::Point2f>(81, {1.5f, 2.25f}),
                   Label::kFake, "ds", Split::kVal};
  const auto line = format_record(r);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3 + 4 + 162 + 3 - 1);
  const auto back = parse_record(line);
  EXPECT_EQ(back.video_id, "v");
  EXPECT_EQ(back.frame_index, 7);
  EXPECT_EQ(back.bbox, r.bbox);
  EXPECT_EQ(back.landmarks[80], r.landmarks[80]);
  EXPECT_EQ(back.label, Label::kFake);
  EXPECT_EQ(back.split, Split::kVal);
  EXPECT_THROW(parse_record("a,b,c"), DataError);
}

TEST(Manifest, MissingFacesBecomePlaceholders) {
  t::TempDir dir("manifest");
  write_toy_corpus(dir.path(), 4, 4, 1.0);
  const auto m = build_manifest(dir.path(), SplitSpec::parse("1/0/0"), {0, nullptr});
  ASSERT_EQ(m.records.size(), 16u);
  for (const auto& r : m.records) {
    EXPECT_FALSE(r.has_face());
    EXPECT_EQ(r.bbox, (BBox{-1, -1, -1, -1}));
    for (const auto& p : r.landmarks) EXPECT_EQ(p, cv::Point2f(0, 0));
  }
  EXPECT_FALSE(load_face(m.records[0], dir.path(), CropOptions{0.125, 32}).has_value());
}

// crop cache

TEST(CropCache, HitIsByteIdenticalToRecompute) {
  t::TempDir dir("cache");
  write_toy_corpus(dir / "corpus", 1, 2);
  const auto m = build_manifest(dir / "corpus", SplitSpec::parse("1/0/0"));
  ASSERT_FALSE(m.records.empty());
  CropCache cache(dir / "cache");
  const CropOptions opts{0.125, 32};
  const auto fresh = load_face(m.records[0], dir / "corpus", opts);
  const auto first = load_face(m.records[0], dir / "corpus", opts, &cache);
  ASSERT_TRUE(fs::exists(cache.entry_path(CropCache::key(m.records[0], opts))));
  const auto second = load_face(m.records[0], dir / "corpus", opts, &cache);
  ASSERT_TRUE(fresh && first && second);
  EXPECT_TRUE(t::bytes_equal(fresh->image, second->image));
  EXPECT_TRUE(t::bytes_equal(first->image, second->image));
  EXPECT_EQ(fresh->landmarks, second->landmarks);
  EXPECT_NE(CropCache::key(m.records[0], opts), CropCache::key(m.records[0], CropOptions{0.2, 32}));
}

TEST(CropCache, NoTemporaryFilesLeftBehind) {
  t::TempDir dir("cache");
  CropCache cache(dir.path());
  cache.put("abcdef", CachedCrop{t::synthetic_face(8).image, {{1, 2}}});
  for (const auto& e : fs::recursive_directory_iterator(dir.path())) {
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos) << e.path();
  }
  const auto got = cache.get("abcdef");
  ASSERT_TRUE(got);
  EXPECT_EQ(got->landmarks.size(), 1u);
  EXPECT_FALSE(cache.get("missing").has_value());
}

TEST(CropCache, FromEnvironment) {
  ::unsetenv(kCacheRootEnv);
  EXPECT_FALSE(CropCache::from_env().has_value());
  ::setenv(kCacheRootEnv, "/tmp/rbi-cache-env", 1);
  const auto c = CropCache::from_env();
  ::unsetenv(kCacheRootEnv);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->root(), fs::path("/tmp/rbi-cache-env"));
}

// procedural faces

TEST(DeskCorpus, ToyFacesAreDeterministicAndValid) {
  const auto a = make_toy_faces(4, 11);
  const auto b = make_toy_faces(4, 11);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NO_THROW(a[i].validate());
    EXPECT_EQ(a[i].image.size(), cv::Size(64, 64));
    EXPECT_EQ(a[i].landmarks.size(), 81u);
    EXPECT_TRUE(t::bytes_equal(a[i].image, b[i].image));
  }
  EXPECT_FALSE(t::bytes_equal(a[0].image, a[1].image));
}
