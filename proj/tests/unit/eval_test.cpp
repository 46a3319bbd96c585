#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"
#include "rbi/data/desk_corpus.hpp"
#include "rbi/data/manifest.hpp"
#include "rbi/eval/auc.hpp"
#include "rbi/eval/report.hpp"
#include "rbi/eval/scores.hpp"
#include "rbi/eval/sweep.hpp"
#include "rbi/eval/visualize.hpp"
#include "test_support.hpp"

using namespace rbi;
using namespace rbi::eval;
namespace fs = std::filesystem;
namespace t = rbi::testing;

namespace {

struct QuietLog {
  QuietLog() : previous(log::set_sink([](log::Level, std::string_view) {})) {}
  ~QuietLog() { log::set_sink(previous); }
  log::Sink previous;
};

// Score = frame index / 100, so every expected video score is computable by hand.
FrameScorer frame_index_scorer(std::vector<std::string>* seen = nullptr) {
  return [seen](const std::vector<FaceRecord>& faces) {
    std::vector<double> out;
    for (const auto& f : faces) {
      if (seen) seen->push_back(f.id());
      out.push_back(f.provenance.frame_index / 100.0);
    }
    return out;
  };
}

// round(i (n - 1) / (k - 1)) for i in [0, k)
std::vector<int> even_indices(int n, int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(static_cast<int>(std::lround(i * (n - 1.0) / (k - 1.0))));
  return out;
}

}  // namespace

// auc

TEST(Auc, WorkedExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{0, 1, 1, 0}), 0.5);
  EXPECT_EQ(auc(std::vector<double>{0.8, 0.2, 0.6, 0.4}, std::vector<int>{1, 0, 0, 1}), 0.75);
  EXPECT_EQ(t::pairwise_auc(std::vector<double>{0.8, 0.2, 0.6, 0.4}, std::vector<int>{1, 0, 0, 1}), 0.75);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), NumericError);
  EXPECT_THROW(auc(std::vector<double>{}, std::vector<int>{}), NumericError);
  EXPECT_THROW(auc(std::vector<double>{0.1, NAN}, std::vector<int>{0, 1}), NumericError);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 2}), ParameterError);
}

TEST(Auc, EqualsPairwiseOracleOnRandomSets) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 99);
    std::vector<double> s(n);
    std::vector<int> l(n);
    // coarse grid so ties are frequent
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 13) / 12.0;
      l[i] = static_cast<int>(gen() % 2);
    }
    l[0] = 0;
    l[1] = 1;
    EXPECT_EQ(auc(s, l), t::pairwise_auc(s, l)) << "trial " << trial;
  }
}

TEST(Auc, MonotoneTransformInvariance) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(40), warped(40);
    std::vector<int> l(40);
    for (int i = 0; i < 40; ++i) {
      s[i] = std::round(u(gen) * 20) / 20;
      l[i] = i % 3 == 0;
      warped[i] = std::exp(3 * s[i]) - 7;
    }
    EXPECT_EQ(auc(s, l), auc(warped, l));
  }
}

TEST(Auc, ComplementSumsToOne) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30);
    std::vector<int> l(30), flipped(30);
    for (int i = 0; i < 30; ++i) {
      s[i] = static_cast<double>(gen() % 7);
      l[i] = i % 2;
      flipped[i] = 1 - l[i];
    }
    EXPECT_EQ(auc(s, l) + auc(s, flipped), 1.0);
  }
}

TEST(Roc, EndpointsAndMonotone) {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<int> l{1, 0, 1, 0, 0};
  const auto roc = roc_curve(s, l);
  ASSERT_GE(roc.size(), 2u);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GE(roc[i].fpr, roc[i - 1].fpr);
    EXPECT_GE(roc[i].tpr, roc[i - 1].tpr);
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
  }
  EXPECT_NEAR(area, auc(s, l), 1e-12);
}

// aggregation

TEST(VideoScore, MeanOfAvailableFrames) {
  EXPECT_NEAR(aggregate_video_score(std::vector<double>{0.2, 0.4, 0.6}), 0.4, 1e-15);
  EXPECT_EQ(aggregate_video_score(std::vector<double>{}), 0.5);
  std::vector<double> thirty(30);
  for (int i = 0; i < 30; ++i) thirty[i] = i / 29.0 * (i % 2 ? 1 : 0.5);
  double sum = 0.0;
  for (double v : thirty) sum += v;
  EXPECT_EQ(aggregate_video_score(thirty), sum / 30);
}

TEST(VideoScore, PermutationInvariant) {
  // dyadic values keep every partial sum exact
  std::vector<double> v;
  for (int i = 0; i < 32; ++i) v.push_back((i * 37 % 64) / 64.0);
  const double ref = aggregate_video_score(v);
  std::mt19937 gen(4);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(v.begin(), v.end(), gen);
    EXPECT_EQ(aggregate_video_score(v), ref);
  }
}

// protocols on a synthetic manifest with injected extraction failures

class ProtocolTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new t::TempDir("protocol");
    data::DeskCorpusOptions o;
    o.genuine_videos = 5;
    o.frames_per_video = 40;
    o.render.frame_size = 48;
    o.missing_face_probability = 0.15;
    o.seed = 21;
    data::write_desk_corpus(dir_->path(), o);
    auto m = data::build_manifest(dir_->path(), data::SplitSpec::from_ratios(1, 0, 0), {0, nullptr});
    records_ = new std::vector<data::ManifestRecord>(m.records);
    // one video loses every face
    const auto dead = records_->front().video_id;
    for (auto& r : *records_) {
      if (r.video_id == dead) {
        r.bbox = {-1, -1, -1, -1};
        r.landmarks.assign(81, {0.0f, 0.0f});
      }
    }
  }
  static void TearDownTestSuite() {
    delete records_;
    delete dir_;
  }

  ProtocolOptions options(int frames) const {
    ProtocolOptions o;
    o.frames = frames;
    o.corpus_root = dir_->path();
    o.crop = {0.125, 32};
    return o;
  }

  static std::map<std::string, std::vector<data::ManifestRecord>> videos() {
    std::map<std::string, std::vector<data::ManifestRecord>> out;
    for (const auto& r : *records_) out[r.video_id].push_back(r);
    return out;
  }

  static t::TempDir* dir_;
  static std::vector<data::ManifestRecord>* records_;
  QuietLog quiet_;
};

t::TempDir* ProtocolTest::dir_ = nullptr;
std::vector<data::ManifestRecord>* ProtocolTest::records_ = nullptr;

TEST_F(ProtocolTest, CorpusHasInjectedFailures) {
  ASSERT_EQ(records_->size(), 200u);
  const auto missing = std::count_if(records_->begin(), records_->end(), [](const auto& r) { return !r.has_face(); });
  EXPECT_GT(missing, 40);
  EXPECT_LT(missing, 200);
}

TEST_F(ProtocolTest, VideoLevelUsesThirtyTwoEvenFramesAndMean) {
  std::vector<std::string> seen;
  const auto table = video_level_eval(frame_index_scorer(&seen), *records_, options(32));
  const auto vids = videos();
  ASSERT_EQ(table.rows.size(), vids.size());
  const auto picks = even_indices(40, 32);
  std::size_t expected_seen = 0;
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.granularity, Granularity::kVideo);
    const auto& rows = vids.at(row.unit_id);
    double sum = 0.0;
    int used = 0;
    for (int i : picks) {
      if (!rows[static_cast<std::size_t>(i)].has_face()) continue;
      sum += rows[static_cast<std::size_t>(i)].frame_index / 100.0;
      ++used;
    }
    EXPECT_EQ(row.frames_used, used) << row.unit_id;
    if (used == 0) {
      EXPECT_EQ(row.score, 0.5) << row.unit_id;
    } else {
      EXPECT_NEAR(row.score, sum / used, 1e-12) << row.unit_id;
      EXPECT_LT(used, 32);
    }
    expected_seen += static_cast<std::size_t>(used);
  }
  EXPECT_EQ(seen.size(), expected_seen);
  EXPECT_EQ(std::count_if(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.frames_used == 0; }), 1);
}

TEST_F(ProtocolTest, FrameLevelSkipsFailuresAndIsOrdered) {
  const auto table = frame_level_eval(frame_index_scorer(), *records_, options(5));
  EXPECT_LE(table.rows.size(), 25u);
  const auto vids = videos();
  std::size_t expected = 0;
  for (const auto& [id, rows] : vids) {
    for (int i : even_indices(40, 5)) expected += rows[static_cast<std::size_t>(i)].has_face();
  }
  EXPECT_EQ(table.rows.size(), expected);
  for (std::size_t i = 1; i < table.rows.size(); ++i) EXPECT_LT(table.rows[i - 1].unit_id, table.rows[i].unit_id);
  const auto again = frame_level_eval(frame_index_scorer(), *records_, options(5));
  ASSERT_EQ(again.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EXPECT_EQ(again.rows[i].unit_id, table.rows[i].unit_id);
    EXPECT_EQ(again.rows[i].score, table.rows[i].score);
  }
}

TEST(ScoreTable, ValidateRejectsBadRows) {
  ScoreTable t;
  t.rows.push_back({"a", Granularity::kFrame, 0.2, 0, "d", "genuine", 1});
  t.rows.push_back({"a", Granularity::kVideo, 0.2, 0, "d", "genuine", 1});
  EXPECT_NO_THROW(t.validate());
  t.rows.push_back({"a", Granularity::kFrame, 0.3, 1, "d", "x", 1});
  EXPECT_THROW(t.validate(), DataError);
  t.rows.back() = {"b", Granularity::kFrame, 1.5, 1, "d", "x", 1};
  EXPECT_THROW(t.validate(), NumericError);
  t.rows.back() = {"b", Granularity::kFrame, 0.5, 2, "d", "x", 1};
  EXPECT_THROW(t.validate(), DataError);
}

// report

TEST(Report, PerManipulationCellsAgainstSameGenuine) {
  ScoreTable t;
  for (int i = 0; i < 4; ++i) t.rows.push_back({"g" + std::to_string(i), Granularity::kVideo, 0.1 * i, 0, "ff", "genuine", 1});
  for (int i = 0; i < 3; ++i) t.rows.push_back({"a" + std::to_string(i), Granularity::kVideo, 0.9, 1, "ff", "Deepfakes", 1});
  for (int i = 0; i < 2; ++i) t.rows.push_back({"b" + std::to_string(i), Granularity::kVideo, 0.15, 1, "ff", "FaceSwap", 1});
  const auto r = build_report(t, "video", "abc", 9);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.cells[0].manipulation, "Deepfakes");
  EXPECT_EQ(r.cells[0].positives, 3u);
  EXPECT_EQ(r.cells[0].negatives, 4u);
  EXPECT_EQ(*r.cells[0].auc, 1.0);
  EXPECT_EQ(*r.cells[1].auc, t::pairwise_auc(std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.15, 0.15},
                                               std::vector<int>{0, 0, 0, 0, 1, 1}));
  ASSERT_TRUE(r.pooled);
  EXPECT_EQ(r.pooled->positives, 5u);
  for (const auto& c : r.cells) EXPECT_TRUE(*c.auc >= 0.0 && *c.auc <= 1.0);
}

TEST(Report, UndefinedCellRecordedNotThrown) {
  ScoreTable t;
  t.rows.push_back({"a", Granularity::kFrame, 0.7, 1, "cdf", "fake", 1});
  const auto r = build_report(t, "frame", "abc", 1);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_FALSE(r.cells[0].auc);
  EXPECT_FALSE(r.cells[0].error.empty());
  nlohmann::json j = r;
  EXPECT_TRUE(j["cells"][0]["auc"].is_null());
}

TEST(Report, WritesAllArtifacts) {
  t::TempDir dir("report");
  ScoreTable t;
  for (int i = 0; i < 10; ++i) t.rows.push_back({std::to_string(i), Granularity::kFrame, i / 10.0, i % 2, "d", i % 2 ? "fake" : "genuine", 1});
  write_report(dir.path(), build_report(t, "frame", "f00d", 3), t);
  for (const char* f : {"report.json", "report.csv", "scores.csv", "report.txt", "roc.png", "histogram.png"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["protocol"], "frame");
  EXPECT_EQ(j["fingerprint"], "f00d");
  EXPECT_EQ(j["seed"], 3);
}

// sweep

TEST(Sweep, ReferenceGridHasSevenRows) {
  const auto grid = reference_lambda_grid();
  ASSERT_EQ(grid.size(), 7u);
  for (const auto& w : grid) EXPECT_NO_THROW(w.validate());
}

TEST(Sweep, FailingCellDoesNotAbort) {
  QuietLog quiet;
  const auto grid = reference_lambda_grid();
  int calls = 0;
  const auto report = lambda_sweep(grid, [&](const losses::LossWeights& w) {
    ++calls;
    if (w.lambda_map == 50 && w.lambda_edge == 50) throw NumericError("diverged");
    return w.lambda_edge == 100 ? 0.9 : 0.6;
  });
  EXPECT_EQ(calls, 7);
  ASSERT_EQ(report.cells.size(), 7u);
  EXPECT_FALSE(report.cells[2].auc);
  EXPECT_NE(report.cells[2].error.find("diverged"), std::string::npos);
  ASSERT_TRUE(report.best);
  EXPECT_EQ(*report.best, 3u);
  EXPECT_NE(format_sweep(report).find("<- best"), std::string::npos);
}

TEST(Sweep, TiesKeepFirstAndSingleCell) {
  const auto r = lambda_sweep({{1, 1}, {2, 2}}, [](const losses::LossWeights&) { return 0.7; });
  EXPECT_EQ(*r.best, 0u);
  const auto one = lambda_sweep({{0, 0}}, [](const losses::LossWeights&) { return 0.8; });
  EXPECT_EQ(*one.cells[0].auc, 0.8);
  EXPECT_EQ(*one.best, 0u);
  EXPECT_THROW(lambda_sweep({}, [](const losses::LossWeights&) { return 0.5; }), ConfigError);
}

TEST(Sweep, AllFailedHasNoBest) {
  QuietLog quiet;
  const auto r = lambda_sweep({{1, 1}}, [](const losses::LossWeights&) -> double { throw DataError("x"); });
  EXPECT_FALSE(r.best);
}

// visualize

TEST(Visualize, PanelLayout) {
  cv::Mat rgb(40, 30, CV_32FC3, cv::Scalar(0.5, 0.5, 0.5));
  cv::Mat field(20, 15, CV_32FC1, cv::Scalar(0.2));
  const auto panel = make_panel(rgb, field, field, 0.3, "x");
  EXPECT_EQ(panel.cols, 3 * 30 + 4 * kPanelMargin);
  EXPECT_EQ(panel.rows, 40 + 2 * kPanelMargin + kCaptionHeight);
}

TEST(Visualize, NamesFollowSampleIds) {
  EXPECT_EQ(panel_name("ff/vid 01:3"), "ff_vid_01_3");
  EXPECT_EQ(panel_name("plain"), "plain");
}

TEST(Visualize, WritesOnePanelPerFace) {
  t::TempDir dir("vis");
  torch::manual_seed(0);
  model::Mfrn m(model::ModelConfig::miniature());
  const auto faces = data::make_toy_faces(2, 4);
  const auto paths = visualize(m, faces, {"a/1", "b 2"}, dir / "out");
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0], dir / "out" / "a_1.png");
  EXPECT_EQ(paths[1], dir / "out" / "b_2.png");
  const auto img = cv::imread(paths[0].string());
  EXPECT_EQ(img.cols, 3 * 64 + 4 * kPanelMargin);
  EXPECT_EQ(img.rows, 64 + 2 * kPanelMargin + kCaptionHeight);
}

TEST(Visualize, UnwritableDirectoryRejected) {
  t::TempDir dir("vis");
  std::ofstream(dir / "file") << "x";
  model::Mfrn m(model::ModelConfig::miniature());
  EXPECT_THROW(visualize(m, data::make_toy_faces(1, 4), {"a"}, dir / "file" / "sub"), DataError);
}
