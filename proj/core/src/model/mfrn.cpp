#include "rbi/model/mfrn.hpp"

#include <fmt/format.h>

#include "rbi/core/error.hpp"

namespace rbi::model {

void validate_input(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) throw ShapeError("model input must be (B, 3, H, W)");
  const auto h = images.size(2);
  const auto w = images.size(3);
  if (h < 32 || w < 32 || h % 2 != 0 || w % 2 != 0) {
    throw ShapeError(fmt::format("model input {}x{} must have even sides of at least 32", h, w));
  }
}

MfrnImpl::MfrnImpl(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto channels = cfg_.scale_channels();
  noise_ = register_module("noise_extractor", NoiseExtractor());
  rgb_ = register_module("rgb_backbone", Backbone(cfg_, 3));
  noise_branch_ = register_module("noise_backbone", Backbone(cfg_, 1));
  for (std::size_t i = 0; i < 5; ++i) {
    sobel_.push_back(register_module(fmt::format("sobel{}", i + 1), SobelBlock(channels[i], cfg_.sobel_norm)));
  }
  edge_head_ = register_module("edge_head", EdgeHead(channels, cfg_.edge_head_width));
  for (std::size_t i = 0; i < 5; ++i) {
    const int prev = i == 0 ? 0 : 2 * channels[i - 1];
    fusion_.push_back(register_module(fmt::format("ffb{}", i + 1),
                                      FusionBlock(channels[i], prev, cfg_.bam_reduction, cfg_.bam_dilation)));
  }
  map_head_ = register_module("map_head", MapHead(2 * channels[4], cfg_.map_head_channels));
  cls_head_ = register_module("cls_head", ClsHead(2 * channels[4], cfg_.cls_head_width));
  set_attention(cfg_.attention);
}

ModelOutput MfrnImpl::forward(const torch::Tensor& images) {
  validate_input(images);
  auto noise = noise_(images);
  auto rgb_pyr = rgb_(images);
  auto noise_pyr = noise_branch_(noise);
  std::vector<torch::Tensor> edge(5);
  for (std::size_t i = 0; i < 5; ++i) edge[i] = sobel_[i](rgb_pyr[i]);

  ModelOutput out;
  out.edge = edge_head_(edge);
  out.edge_feature_channels = edge_head_->concat_channels();
  std::optional<torch::Tensor> prev;
  for (std::size_t i = 0; i < 5; ++i) prev = fusion_[i](rgb_pyr[i], edge[i], noise_pyr[i], prev);
  out.fused = *prev;

  std::array<std::array<std::int64_t, 2>, 4> targets{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& ref = rgb_pyr[3 - k];
    targets[k] = {ref.size(2), ref.size(3)};
  }
  out.map = map_head_(out.fused, targets);
  out.logits = cls_head_(out.fused);
  out.p_fake = fake_probability(out.logits);
  return out;
}

void MfrnImpl::project_constraints() {
  noise_->project();
  for (auto& s : sobel_) s->restore_fixed_filters();
}

void MfrnImpl::set_attention(bool enabled) {
  for (auto& f : fusion_) f->set_attention(enabled);
}

}  // namespace rbi::model
