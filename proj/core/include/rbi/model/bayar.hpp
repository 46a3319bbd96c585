#pragma once

#include <torch/torch.h>

namespace rbi::model {

// Constrained high-pass 5x5 filter: centre -1, off-centre weights sum to 1.
// Returns true when the off-centre sum was zero and the weights were reset.
bool bayar_project(torch::Tensor& kernel);

// Luma weights (0.299, 0.587, 0.114) over an (B, 3, H, W) batch.
torch::Tensor to_grayscale(const torch::Tensor& rgb);

class NoiseExtractorImpl : public torch::nn::Module {
 public:
  NoiseExtractorImpl();

  // (B, 3, H, W) -> (B, 1, H, W)
  torch::Tensor forward(const torch::Tensor& rgb);
  // Applies the constraint in place; call after every optimizer step.
  void project();

  torch::Tensor kernel() const { return weight_; }
  std::int64_t projections() const { return projections_; }
  std::int64_t resets() const { return resets_; }
  void set_counters(std::int64_t projections, std::int64_t resets) {
    projections_ = projections;
    resets_ = resets;
  }

 private:
  torch::Tensor weight_;  // (1, 1, 5, 5)
  std::int64_t projections_ = 0;
  std::int64_t resets_ = 0;
};
TORCH_MODULE(NoiseExtractor);

}  // namespace rbi::model
