#include "rbi/losses/losses.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>

#include "rbi/core/error.hpp"

namespace rbi::losses {

void LossWeights::validate() const {
  if (!(lambda_map >= 0.0) || !(lambda_edge >= 0.0) || !std::isfinite(lambda_map) || !std::isfinite(lambda_edge)) {
    throw ParameterError(fmt::format("loss weights must be finite and non-negative, got ({}, {})", lambda_map,
                                     lambda_edge));
  }
}

LossBreakdown LossTerms::breakdown() const {
  return {map.item<double>(), edge.item<double>(), cls.item<double>(), total.item<double>()};
}

namespace {

torch::Tensor bce(const torch::Tensor& prediction, const torch::Tensor& target) {
  auto p = prediction.clamp(kEps, 1.0 - kEps);
  return -(target * torch::log(p) + (1 - target) * torch::log(1 - p));
}

void check_targets(const torch::Tensor& target, const char* what) {
  if (target.numel() == 0) throw ShapeError(fmt::format("{}: empty target", what));
  const auto lo = target.min().item<double>();
  const auto hi = target.max().item<double>();
  if (!(lo >= 0.0) || !(hi <= 1.0)) throw ParameterError(fmt::format("{}: targets must lie in [0, 1]", what));
}

}  // namespace

torch::Tensor pixel_bce(const torch::Tensor& prediction, const torch::Tensor& target) {
  if (prediction.sizes() != target.sizes()) {
    throw ShapeError(fmt::format("pixel loss shape mismatch: prediction {} vs target {}",
                                 prediction.sizes().vec(), target.sizes().vec()));
  }
  check_targets(target, "pixel loss");
  auto t = target.to(prediction.dtype());
  if (prediction.dim() <= 2) return bce(prediction, t).mean();
  // Per-sample pixel mean, then batch mean.
  return bce(prediction, t).flatten(1).mean(1).mean();
}

torch::Tensor edge_loss(const torch::Tensor& edge_pred, const torch::Tensor& edge_target) {
  return pixel_bce(edge_pred, edge_target);
}

torch::Tensor map_loss(const torch::Tensor& map_pred, const torch::Tensor& map_target) {
  return pixel_bce(map_pred, map_target);
}

torch::Tensor cls_loss(const torch::Tensor& p_fake, const torch::Tensor& labels) {
  if (p_fake.sizes() != labels.sizes()) {
    throw ShapeError(fmt::format("classification loss shape mismatch: {} vs {}", p_fake.sizes().vec(),
                                 labels.sizes().vec()));
  }
  if (labels.numel() == 0) throw ShapeError("classification loss: empty batch");
  auto t = labels.to(p_fake.dtype());
  if (!torch::logical_or(t == 0, t == 1).all().item<bool>()) {
    throw ParameterError("classification labels must be 0 or 1");
  }
  return bce(p_fake, t).mean();
}

LossTerms total_loss(const torch::Tensor& map, const torch::Tensor& edge, const torch::Tensor& cls,
                     const LossWeights& weights) {
  weights.validate();
  LossTerms terms{map, edge, cls, {}};
  terms.total = weights.lambda_map * map + weights.lambda_edge * edge + cls;
  return terms;
}

LossBreakdown total_loss(double map, double edge, double cls, const LossWeights& weights) {
  weights.validate();
  return {map, edge, cls, weights.lambda_map * map + weights.lambda_edge * edge + cls};
}

}  // namespace rbi::losses
