#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "rbi/model/model_config.hpp"

namespace rbi::model {

class MBConvImpl : public torch::nn::Module {
 public:
  MBConvImpl(int in_channels, int out_channels, const StageSpec& stage, int stride, double se_ratio);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  bool residual_ = false;
  bool expand_ = false;
  torch::nn::Conv2d expand_conv_{nullptr};
  torch::nn::BatchNorm2d expand_bn_{nullptr};
  torch::nn::Conv2d depthwise_{nullptr};
  torch::nn::BatchNorm2d depthwise_bn_{nullptr};
  torch::nn::Conv2d se_reduce_{nullptr};
  torch::nn::Conv2d se_expand_{nullptr};
  torch::nn::Conv2d project_{nullptr};
  torch::nn::BatchNorm2d project_bn_{nullptr};
};
TORCH_MODULE(MBConv);

// EfficientNet-style staged backbone returning the five scale taps.
class BackboneImpl : public torch::nn::Module {
 public:
  BackboneImpl(const ModelConfig& cfg, int in_channels);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);

  int in_channels() const { return in_channels_; }

  // Loads stage weights from a parameter archive written by save_backbone. A
  // 3-channel stem is averaged over its input dimension for 1-channel branches.
  void load_pretrained(const std::string& path);
  void save(const std::string& path);

 private:
  int in_channels_;
  std::array<int, 5> taps_;
  torch::nn::Conv2d stem_{nullptr};
  torch::nn::BatchNorm2d stem_bn_{nullptr};
  std::vector<torch::nn::Sequential> stages_;
};
TORCH_MODULE(Backbone);

}  // namespace rbi::model
