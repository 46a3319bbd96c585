#pragma once

#include <torch/torch.h>

namespace rbi::losses {

inline constexpr double kEps = 1e-7;

struct LossWeights {
  double lambda_map = 50.0;    // lambda_1
  double lambda_edge = 100.0;  // lambda_2

  // Throws ParameterError for negative or non-finite weights.
  void validate() const;
};

struct LossBreakdown {
  double map = 0.0;
  double edge = 0.0;
  double cls = 0.0;
  double total = 0.0;
};

// Differentiable components plus their weighted sum.
struct LossTerms {
  torch::Tensor map;
  torch::Tensor edge;
  torch::Tensor cls;
  torch::Tensor total;

  LossBreakdown breakdown() const;
};

// Elementwise BCE with predictions clamped to [eps, 1 - eps], averaged over
// pixels and then over the batch. Soft targets in [0, 1] are accepted.
torch::Tensor pixel_bce(const torch::Tensor& prediction, const torch::Tensor& target);
torch::Tensor edge_loss(const torch::Tensor& edge_pred, const torch::Tensor& edge_target);
torch::Tensor map_loss(const torch::Tensor& map_pred, const torch::Tensor& map_target);
// p_fake: (B) fake-class probability, labels: (B) in {0, 1}.
torch::Tensor cls_loss(const torch::Tensor& p_fake, const torch::Tensor& labels);

LossTerms total_loss(const torch::Tensor& map, const torch::Tensor& edge, const torch::Tensor& cls,
                     const LossWeights& weights);
LossBreakdown total_loss(double map, double edge, double cls, const LossWeights& weights);

}  // namespace rbi::losses
