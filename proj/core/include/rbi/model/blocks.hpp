#pragma once

#include <torch/torch.h>

#include <array>
#include <optional>
#include <vector>

#include "rbi/model/model_config.hpp"

namespace rbi::model {

// Canonical first-derivative kernels, (3, 3).
torch::Tensor sobel_kernel_x();
torch::Tensor sobel_kernel_y();

class SobelBlockImpl : public torch::nn::Module {
 public:
  SobelBlockImpl(int channels, NormPolicy norm);

  torch::Tensor forward(const torch::Tensor& features);
  // sigmoid(norm(|grad F|^2)), same shape as the input.
  torch::Tensor gate(const torch::Tensor& features);

  // Gradient kernels are buffers, never parameters.
  torch::Tensor kernel_x() const { return kx_; }
  torch::Tensor kernel_y() const { return ky_; }
  void restore_fixed_filters();
  bool fixed_filters_intact() const;
  torch::nn::Conv2d integrate() const { return integrate_; }

 private:
  int channels_;
  NormPolicy norm_policy_;
  torch::Tensor kx_;
  torch::Tensor ky_;
  torch::nn::BatchNorm2d batch_norm_{nullptr};
  torch::nn::InstanceNorm2d instance_norm_{nullptr};
  torch::nn::Conv2d integrate_{nullptr};
};
TORCH_MODULE(SobelBlock);

class EdgeHeadImpl : public torch::nn::Module {
 public:
  EdgeHeadImpl(std::array<int, 5> channels, int width);

  // Upsamples every scale to the size of scale 1; output (B, 1, H1, W1).
  torch::Tensor forward(const std::vector<torch::Tensor>& edge_features);
  int concat_channels() const { return concat_channels_; }

 private:
  std::array<int, 5> channels_;
  int concat_channels_ = 0;
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(EdgeHead);

class BamImpl : public torch::nn::Module {
 public:
  BamImpl(int channels, int reduction, int dilation);

  torch::Tensor forward(const torch::Tensor& features);
  // Additive pre-gate A: channel term plus spatial term, broadcast to (B, C, H, W).
  torch::Tensor pre_gate(const torch::Tensor& features);
  // Zeroes the last layer of both branches and sets their biases so that A == bias.
  void saturate(double bias);

 private:
  int channels_;
  torch::nn::Linear channel_fc1_{nullptr};
  torch::nn::Linear channel_fc2_{nullptr};
  torch::nn::Sequential spatial_body_{nullptr};
  torch::nn::Conv2d spatial_out_{nullptr};
};
TORCH_MODULE(Bam);

class FusionBlockImpl : public torch::nn::Module {
 public:
  // prev_channels == 0 for the first block.
  FusionBlockImpl(int channels, int prev_channels, int reduction, int dilation);

  torch::Tensor forward(const torch::Tensor& rgb, const torch::Tensor& edge, const torch::Tensor& noise,
                        const std::optional<torch::Tensor>& prev = std::nullopt);

  void set_attention(bool enabled) { attention_ = enabled; }
  bool attention() const { return attention_; }
  Bam bam() const { return bam_; }
  int out_channels() const { return 2 * channels_; }

 private:
  int channels_;
  int prev_channels_;
  bool attention_ = true;
  Bam bam_{nullptr};
  torch::nn::Sequential convs_{nullptr};
  torch::nn::Conv2d align_{nullptr};
};
TORCH_MODULE(FusionBlock);

class MapHeadImpl : public torch::nn::Module {
 public:
  MapHeadImpl(int in_channels, std::array<int, 3> channels);

  // targets: spatial sizes after each of the four stages.
  torch::Tensor forward(const torch::Tensor& fused, const std::array<std::array<std::int64_t, 2>, 4>& targets);

 private:
  std::vector<torch::nn::ConvTranspose2d> ups_;
  std::vector<torch::nn::BatchNorm2d> norms_;
};
TORCH_MODULE(MapHead);

// Centre crop of the last two dimensions; throws ShapeError if the target is larger.
torch::Tensor center_crop(const torch::Tensor& x, std::int64_t height, std::int64_t width);

class ClsHeadImpl : public torch::nn::Module {
 public:
  ClsHeadImpl(int in_channels, int width);
  // (B, 2) logits.
  torch::Tensor forward(const torch::Tensor& fused);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(ClsHead);

// Fake-class probability from (B, 2) logits.
torch::Tensor fake_probability(const torch::Tensor& logits);

}  // namespace rbi::model
