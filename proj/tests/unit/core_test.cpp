#include <gtest/gtest.h>

#include <set>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/log.hpp"
#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/core/tensor_bridge.hpp"
#include "test_support.hpp"

using namespace rbi;
using rbi::testing::TempDir;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform01(), b.uniform01());
}

TEST(Rng, SplitIgnoresParentDraws) {
  Rng a(7), b(7);
  for (int i = 0; i < 10; ++i) b.uniform01();
  Rng ca = a.split("child"), cb = b.split("child");
  EXPECT_EQ(ca.uniform01(), cb.uniform01());
}

TEST(Rng, DistinctLabelsAndIndicesGiveDistinctStreams) {
  const Rng root(3);
  std::set<double> firsts;
  for (std::uint64_t i = 0; i < 50; ++i) firsts.insert(root.split(i).uniform01());
  firsts.insert(root.split("a").uniform01());
  firsts.insert(root.split("b").uniform01());
  EXPECT_EQ(firsts.size(), 52u);
}

TEST(Rng, StateRoundTrip) {
  Rng a(9);
  a.normal();
  const auto s = a.state();
  const double next = a.uniform01();
  Rng b(0);
  b.restore(s);
  EXPECT_EQ(b.uniform01(), next);
}

TEST(Rng, BernoulliEdgesAndUniformBounds) {
  Rng r(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(r.bernoulli(0.0));
    EXPECT_TRUE(r.bernoulli(1.0));
    const int k = r.uniform_int(2, 4);
    EXPECT_GE(k, 2);
    EXPECT_LE(k, 4);
  }
  EXPECT_EQ(r.uniform(0.3, 0.3), 0.3);
}

TEST(Range, ValidateRejectsInverted) {
  EXPECT_THROW((Range{1.0, 0.0}.validate("x")), ConfigError);
  EXPECT_NO_THROW((Range{0.0, 0.0}.validate("x")));
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Image, Raster16RoundTripWithinQuantisation) {
  TempDir dir;
  cv::Mat m(7, 5, CV_32FC3);
  cv::randu(m, 0.0, 1.0);
  write_raster16(dir / "a.png", m);
  const cv::Mat back = read_raster16(dir / "a.png");
  ASSERT_EQ(back.type(), CV_32FC3);
  EXPECT_LE(rbi::testing::max_abs_diff(m, back), 0.5 / 65535.0 + 1e-7);
}

TEST(Image, RawRoundTripIsExact) {
  TempDir dir;
  cv::Mat m(4, 6, CV_32FC1);
  cv::randn(m, 0.0, 1.0);
  write_raw(dir / "a.raw", m);
  EXPECT_TRUE(rbi::testing::bytes_equal(m, read_raw(dir / "a.raw")));
}

TEST(Image, ReadImageIsRgb) {
  TempDir dir;
  cv::Mat bgr(2, 2, CV_8UC3, cv::Scalar(255, 0, 0));  // pure blue in OpenCV order
  cv::imwrite((dir / "b.png").string(), bgr);
  const cv::Mat rgb = read_image(dir / "b.png");
  const auto px = rgb.at<cv::Vec3f>(0, 0);
  EXPECT_FLOAT_EQ(px[0], 0.0f);
  EXPECT_FLOAT_EQ(px[2], 1.0f);
}

TEST(Image, MissingFileIsDataError) { EXPECT_THROW(read_image("/nonexistent/x.png"), DataError); }

TEST(Image, DownsampleHalfEvenIsBlockMean) {
  cv::Mat m(6, 8, CV_32FC1);
  cv::randu(m, 0.0, 1.0);
  const cv::Mat d = downsample_half(m);
  ASSERT_EQ(d.size(), cv::Size(4, 3));
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double mean = (m.at<float>(2 * y, 2 * x) + m.at<float>(2 * y, 2 * x + 1) + m.at<float>(2 * y + 1, 2 * x) +
                           m.at<float>(2 * y + 1, 2 * x + 1)) / 4.0;
      EXPECT_NEAR(d.at<float>(y, x), mean, 1e-6);
    }
  }
}

TEST(Image, DownsampleHalfOddUsesCeil) {
  cv::Mat m(7, 5, CV_32FC1, cv::Scalar(0.25));
  const cv::Mat d = downsample_half(m);
  EXPECT_EQ(d.size(), cv::Size(3, 4));
  EXPECT_LE(cv::norm(d - 0.25, cv::NORM_INF), 1e-6);
}

TEST(TensorBridge, RoundTrip) {
  cv::Mat m(3, 4, CV_32FC3);
  cv::randu(m, 0.0, 1.0);
  const auto t = to_tensor(m);
  ASSERT_EQ(t.sizes(), (std::vector<std::int64_t>{3, 3, 4}));
  EXPECT_FLOAT_EQ(t[1][2][3].item<float>(), m.at<cv::Vec3f>(2, 3)[1]);
  EXPECT_TRUE(rbi::testing::bytes_equal(m, to_mat(t)));
}

TEST(Log, SinkReceivesWarningsAndCounts) {
  std::vector<std::string> seen;
  auto old = log::set_sink([&](log::Level, std::string_view msg) { seen.emplace_back(msg); });
  const auto before = log::warning_count();
  log::warn("value {}", 3);
  log::set_sink(old);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0], "value 3");
  EXPECT_EQ(log::warning_count(), before + 1);
}
