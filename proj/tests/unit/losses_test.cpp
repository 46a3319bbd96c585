#include <gtest/gtest.h>

#include <cmath>

#include <torch/torch.h>

#include "rbi/core/error.hpp"
#include "rbi/losses/losses.hpp"
#include "test_support.hpp"

using namespace rbi;
using namespace rbi::losses;
namespace t = rbi::testing;

namespace {

torch::Tensor full(double v, std::vector<std::int64_t> shape = {2, 1, 4, 4}) {
  return torch::full(shape, v, torch::kFloat64);
}

double value(const torch::Tensor& x) { return x.item<double>(); }

}  // namespace

TEST(EdgeLoss, PerfectPredictionIsZero) { EXPECT_NEAR(value(edge_loss(full(1), full(1))), 0.0, 1e-6); }

TEST(EdgeLoss, HalfPredictionOfOneIsLn2) {
  EXPECT_NEAR(value(edge_loss(full(0.5), full(1))), std::log(2.0), 1e-6);
}

TEST(EdgeLoss, SoftTargetMatchesScalarOracle) {
  EXPECT_NEAR(value(edge_loss(full(0.5), full(0.5))), t::scalar_bce(0.5, 0.5), 1e-12);
  EXPECT_NEAR(value(edge_loss(full(0.5), full(0.5))), std::log(2.0), 1e-6);
}

TEST(MapLoss, ZeroTargetEpsPrediction) { EXPECT_NEAR(value(map_loss(full(kEps), full(0))), 0.0, 1e-6); }

TEST(MapLoss, ClosedForm) { EXPECT_NEAR(value(map_loss(full(0.9), full(0))), -std::log(0.1), 1e-6); }

TEST(MapLoss, RandomFourByFourMatchesScalarLoop) {
  torch::manual_seed(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = torch::rand({1, 1, 4, 4}, torch::kFloat64);
    auto m = torch::rand({1, 1, 4, 4}, torch::kFloat64);
    if (trial % 2 == 0) m = m.round();
    double oracle = 0.0;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) oracle += t::scalar_bce(p[0][0][y][x].item<double>(), m[0][0][y][x].item<double>());
    }
    EXPECT_NEAR(value(map_loss(p, m)), oracle / 16.0, 1e-9);
  }
}

TEST(PixelLoss, ShapeMismatchAndTargetRange) {
  EXPECT_THROW(edge_loss(full(0.5, {1, 1, 4, 4}), full(0.5, {1, 1, 4, 5})), ShapeError);
  EXPECT_THROW(map_loss(full(0.5), full(1.5)), ParameterError);
  EXPECT_THROW(map_loss(full(0.5), full(-0.1)), ParameterError);
}

TEST(ClsLoss, ClosedForms) {
  auto one = torch::ones({1}, torch::kFloat64), zero = torch::zeros({1}, torch::kFloat64);
  EXPECT_NEAR(value(cls_loss(torch::full({1}, 1 - kEps, torch::kFloat64), one)), 0.0, 1e-6);
  EXPECT_NEAR(value(cls_loss(torch::full({1}, 0.5, torch::kFloat64), one)), std::log(2.0), 1e-6);
  EXPECT_NEAR(value(cls_loss(torch::full({1}, 0.25, torch::kFloat64), zero)), -std::log(0.75), 1e-6);
  EXPECT_NEAR(-std::log(0.75), 0.287682, 1e-6);
}

TEST(ClsLoss, NonBinaryLabelRejected) {
  EXPECT_THROW(cls_loss(torch::full({2}, 0.5), torch::tensor({0.0f, 0.5f})), ParameterError);
  EXPECT_THROW(cls_loss(torch::full({2}, 0.5), torch::tensor({0.0f})), ShapeError);
}

TEST(TotalLoss, Arithmetic) {
  LossWeights w{50, 100};
  const auto b = total_loss(0.1, 0.2, 0.3, w);
  EXPECT_NEAR(b.total, 25.3, 1e-12);
  EXPECT_EQ(b.total, 50 * 0.1 + 100 * 0.2 + 0.3);
  const auto z = total_loss(0.1, 0.2, 0.3, LossWeights{0, 0});
  EXPECT_EQ(z.total, 0.3);
}

TEST(TotalLoss, DefaultsAreBestGridRow) {
  LossWeights w;
  EXPECT_EQ(w.lambda_map, 50.0);
  EXPECT_EQ(w.lambda_edge, 100.0);
}

TEST(TotalLoss, NegativeWeightsRejected) {
  EXPECT_THROW(total_loss(0.1, 0.2, 0.3, LossWeights{-1, 0}), ParameterError);
  EXPECT_THROW(total_loss(0.1, 0.2, 0.3, LossWeights{0, std::nan("")}), ParameterError);
}

TEST(TotalLoss, TensorBreakdownIdentity) {
  torch::manual_seed(2);
  auto p = torch::rand({3, 1, 8, 8}, torch::kFloat64), e = torch::rand({3, 1, 8, 8}, torch::kFloat64);
  auto m = torch::rand({3, 1, 8, 8}, torch::kFloat64).round();
  auto c = cls_loss(torch::rand({3}, torch::kFloat64), torch::tensor({0.0, 1.0, 1.0}, torch::kFloat64));
  const auto terms = total_loss(map_loss(p, m), edge_loss(p, e), c, LossWeights{50, 100});
  const auto b = terms.breakdown();
  EXPECT_NEAR(b.total, 50 * b.map + 100 * b.edge + b.cls, 1e-9);
}

TEST(TotalLoss, LinearInEachWeight) {
  // isolate each contribution so no rounding from the other terms enters
  EXPECT_EQ(total_loss(0.37, 0.11, 0.0, LossWeights{20, 0}).total, 2 * total_loss(0.37, 0.11, 0.0, LossWeights{10, 0}).total);
  EXPECT_EQ(total_loss(0.37, 0.11, 0.0, LossWeights{0, 14}).total, 2 * total_loss(0.37, 0.11, 0.0, LossWeights{0, 7}).total);
}

TEST(LossProperties, NonNegative) {
  torch::manual_seed(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = torch::rand({2, 1, 5, 5}, torch::kFloat64), q = torch::rand({2, 1, 5, 5}, torch::kFloat64);
    EXPECT_GE(value(edge_loss(p, q)), 0.0);
    EXPECT_GE(value(map_loss(p, q.round())), 0.0);
    EXPECT_GE(value(cls_loss(p.flatten().slice(0, 0, 4), q.flatten().slice(0, 0, 4).round())), 0.0);
  }
}

TEST(LossProperties, ZeroDerivativeAtSoftTarget) {
  torch::manual_seed(4);
  auto target = torch::rand({1, 1, 6, 6}, torch::kFloat64) * 0.9 + 0.05;
  auto p = target.clone().requires_grad_(true);
  edge_loss(p, target).backward();
  EXPECT_LE(p.grad().abs().max().item<double>(), 1e-12);
}

TEST(LossProperties, BatchLossIsMeanOfSampleLosses) {
  torch::manual_seed(5);
  auto p = torch::rand({5, 1, 6, 6}, torch::kFloat64), m = torch::rand({5, 1, 6, 6}, torch::kFloat64);
  double mean = 0.0;
  for (int i = 0; i < 5; ++i) mean += value(map_loss(p.slice(0, i, i + 1), m.slice(0, i, i + 1)));
  EXPECT_NEAR(value(map_loss(p, m)), mean / 5, 1e-9);
  auto pc = torch::rand({5}, torch::kFloat64), tc = torch::tensor({0.0, 1.0, 0.0, 1.0, 1.0}, torch::kFloat64);
  double cmean = 0.0;
  for (int i = 0; i < 5; ++i) cmean += value(cls_loss(pc.slice(0, i, i + 1), tc.slice(0, i, i + 1)));
  EXPECT_NEAR(value(cls_loss(pc, tc)), cmean / 5, 1e-9);
}
