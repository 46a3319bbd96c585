#pragma once

#include <torch/torch.h>

#include <vector>

#include "rbi/model/backbone.hpp"
#include "rbi/model/bayar.hpp"
#include "rbi/model/blocks.hpp"
#include "rbi/model/model_config.hpp"

namespace rbi::model {

struct ModelOutput {
  torch::Tensor edge;    // (B, 1, H/2, W/2)
  torch::Tensor map;     // (B, 1, H/2, W/2)
  torch::Tensor logits;  // (B, 2)
  torch::Tensor p_fake;  // (B)
  torch::Tensor fused;   // (B, 2*C5, H/32, W/32)
  std::int64_t edge_feature_channels = 0;
};

class MfrnImpl : public torch::nn::Module {
 public:
  explicit MfrnImpl(ModelConfig cfg);

  // images: (B, 3, H, W) in [0, 1], H and W even and at least 32.
  ModelOutput forward(const torch::Tensor& images);

  // Bayar projection plus Sobel restoration; run after every optimizer step.
  void project_constraints();
  void set_attention(bool enabled);

  const ModelConfig& config() const { return cfg_; }
  NoiseExtractor noise_extractor() const { return noise_; }
  Backbone rgb_backbone() const { return rgb_; }
  Backbone noise_backbone() const { return noise_branch_; }
  const std::vector<SobelBlock>& sobel_blocks() const { return sobel_; }
  const std::vector<FusionBlock>& fusion_blocks() const { return fusion_; }
  EdgeHead edge_head() const { return edge_head_; }
  MapHead map_head() const { return map_head_; }
  ClsHead cls_head() const { return cls_head_; }

 private:
  ModelConfig cfg_;
  NoiseExtractor noise_{nullptr};
  Backbone rgb_{nullptr};
  Backbone noise_branch_{nullptr};
  std::vector<SobelBlock> sobel_;
  std::vector<FusionBlock> fusion_;
  EdgeHead edge_head_{nullptr};
  MapHead map_head_{nullptr};
  ClsHead cls_head_{nullptr};
};
TORCH_MODULE(Mfrn);

// Throws ShapeError for inputs the model cannot accept.
void validate_input(const torch::Tensor& images);

}  // namespace rbi::model
