#include "rbi/model/blocks.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "rbi/core/error.hpp"

namespace rbi::model {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor sobel_kernel_x() {
  return torch::tensor({-1.0f, 0.0f, 1.0f, -2.0f, 0.0f, 2.0f, -1.0f, 0.0f, 1.0f}).view({3, 3});
}

torch::Tensor sobel_kernel_y() {
  return torch::tensor({-1.0f, -2.0f, -1.0f, 0.0f, 0.0f, 0.0f, 1.0f, 2.0f, 1.0f}).view({3, 3});
}

SobelBlockImpl::SobelBlockImpl(int channels, NormPolicy norm) : channels_(channels), norm_policy_(norm) {
  if (channels <= 0) throw ConfigError("sobel block needs a positive channel count");
  kx_ = register_buffer("sobel_x", sobel_kernel_x().view({1, 1, 3, 3}).repeat({channels, 1, 1, 1}));
  ky_ = register_buffer("sobel_y", sobel_kernel_y().view({1, 1, 3, 3}).repeat({channels, 1, 1, 1}));
  if (norm == NormPolicy::kBatch) {
    batch_norm_ = register_module("norm", nn::BatchNorm2d(channels));
  } else if (norm == NormPolicy::kInstance) {
    instance_norm_ = register_module("norm", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true)));
  }
  integrate_ = register_module("integrate", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
}

torch::Tensor SobelBlockImpl::gate(const torch::Tensor& features) {
  if (features.dim() != 4 || features.size(1) != channels_) {
    throw ShapeError(fmt::format("sobel block expects {} channels", channels_));
  }
  auto padded = F::pad(features, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
  auto opts = F::Conv2dFuncOptions().groups(channels_);
  auto gx = F::conv2d(padded, kx_.to(features.dtype()), opts);
  auto gy = F::conv2d(padded, ky_.to(features.dtype()), opts);
  auto g = gx * gx + gy * gy;
  if (batch_norm_) {
    g = batch_norm_(g);
  } else if (instance_norm_) {
    g = instance_norm_(g);
  }
  return torch::sigmoid(g);
}

torch::Tensor SobelBlockImpl::forward(const torch::Tensor& features) { return integrate_(features * gate(features)); }

void SobelBlockImpl::restore_fixed_filters() {
  torch::NoGradGuard guard;
  kx_.copy_(sobel_kernel_x().view({1, 1, 3, 3}).expand_as(kx_));
  ky_.copy_(sobel_kernel_y().view({1, 1, 3, 3}).expand_as(ky_));
}

bool SobelBlockImpl::fixed_filters_intact() const {
  auto x = sobel_kernel_x().view({1, 1, 3, 3}).expand_as(kx_).to(kx_.dtype());
  auto y = sobel_kernel_y().view({1, 1, 3, 3}).expand_as(ky_).to(ky_.dtype());
  return torch::equal(kx_, x) && torch::equal(ky_, y);
}

EdgeHeadImpl::EdgeHeadImpl(std::array<int, 5> channels, int width) : channels_(channels) {
  for (int c : channels) {
    if (c <= 0) throw ConfigError("edge head scale channels must be positive");
    concat_channels_ += c;
  }
  if (width <= 0) throw ConfigError("edge head width must be positive");
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(concat_channels_, width, 3).padding(1).bias(false)),
                             nn::BatchNorm2d(width), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(width, width, 3).padding(1).bias(false)),
                             nn::BatchNorm2d(width), nn::ReLU(), nn::Conv2d(nn::Conv2dOptions(width, 1, 1))));
}

torch::Tensor EdgeHeadImpl::forward(const std::vector<torch::Tensor>& edge_features) {
  if (edge_features.size() != 5) throw ShapeError("edge head expects five scales");
  const auto h = edge_features[0].size(2);
  const auto w = edge_features[0].size(3);
  std::vector<torch::Tensor> up;
  up.reserve(5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& f = edge_features[i];
    if (f.dim() != 4 || f.size(1) != channels_[i]) {
      throw ShapeError(fmt::format("edge head scale {} expects {} channels", i + 1, channels_[i]));
    }
    if (i == 0) {
      up.push_back(f);
    } else {
      up.push_back(F::interpolate(
          f, F::InterpolateFuncOptions().size(std::vector<std::int64_t>{h, w}).mode(torch::kBilinear).align_corners(false)));
    }
  }
  return torch::sigmoid(body_->forward(torch::cat(up, 1)));
}

BamImpl::BamImpl(int channels, int reduction, int dilation) : channels_(channels) {
  if (reduction <= 0 || dilation <= 0) throw ConfigError("attention reduction and dilation must be positive");
  if (channels < reduction) {
    throw ConfigError(fmt::format("attention channels {} below reduction ratio {}", channels, reduction));
  }
  const int mid = channels / reduction;
  channel_fc1_ = register_module("channel_fc1", nn::Linear(channels, mid));
  channel_fc2_ = register_module("channel_fc2", nn::Linear(mid, channels));
  auto dilated = [&] {
    return nn::Conv2d(nn::Conv2dOptions(mid, mid, 3).padding(dilation).dilation(dilation).bias(false));
  };
  spatial_body_ = register_module(
      "spatial_body",
      nn::Sequential(nn::Conv2d(nn::Conv2dOptions(channels, mid, 1).bias(false)), nn::BatchNorm2d(mid), nn::ReLU(),
                     dilated(), nn::BatchNorm2d(mid), nn::ReLU(), dilated(), nn::BatchNorm2d(mid), nn::ReLU()));
  spatial_out_ = register_module("spatial_out", nn::Conv2d(nn::Conv2dOptions(mid, 1, 1)));
}

torch::Tensor BamImpl::pre_gate(const torch::Tensor& features) {
  if (features.dim() != 4 || features.size(1) != channels_) {
    throw ShapeError(fmt::format("attention expects {} channels", channels_));
  }
  auto pooled = features.mean({2, 3});
  auto channel = channel_fc2_(torch::relu(channel_fc1_(pooled))).view({features.size(0), channels_, 1, 1});
  auto spatial = spatial_out_(spatial_body_->forward(features));
  return channel + spatial;
}

torch::Tensor BamImpl::forward(const torch::Tensor& features) {
  return features * (1 + torch::sigmoid(pre_gate(features)));
}

void BamImpl::saturate(double bias) {
  torch::NoGradGuard guard;
  channel_fc2_->weight.zero_();
  channel_fc2_->bias.fill_(bias / 2);
  spatial_out_->weight.zero_();
  spatial_out_->bias.fill_(bias / 2);
}

FusionBlockImpl::FusionBlockImpl(int channels, int prev_channels, int reduction, int dilation)
    : channels_(channels), prev_channels_(prev_channels) {
  const int width = 2 * channels;
  bam_ = register_module("bam", Bam(width, reduction, dilation));
  convs_ = register_module(
      "convs", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(width, width, 3).padding(1).bias(false)),
                              nn::BatchNorm2d(width), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(width, width, 3).padding(1).bias(false)),
                              nn::BatchNorm2d(width)));
  if (prev_channels > 0) {
    align_ = register_module("align", nn::Conv2d(nn::Conv2dOptions(prev_channels, width, 3).stride(2).padding(1)));
  }
}

torch::Tensor FusionBlockImpl::forward(const torch::Tensor& rgb, const torch::Tensor& edge, const torch::Tensor& noise,
                                       const std::optional<torch::Tensor>& prev) {
  if (rgb.sizes() != edge.sizes() || rgb.sizes() != noise.sizes() || rgb.dim() != 4 || rgb.size(1) != channels_) {
    throw ShapeError(fmt::format("fusion block inputs must share shape (B, {}, H, W)", channels_));
  }
  auto x = torch::cat({rgb + edge, noise}, 1);
  if (attention_) x = bam_(x);
  auto w = convs_->forward(x);
  if (prev.has_value()) {
    if (!align_) throw ShapeError("first fusion block does not accept a propagated feature");
    auto aligned = align_(*prev);
    if (aligned.sizes() != w.sizes()) {
      throw ShapeError(fmt::format("aligned propagated feature {} does not match {}",
                                   fmt::join(aligned.sizes(), "x"), fmt::join(w.sizes(), "x")));
    }
    w = w + aligned;
  } else if (align_) {
    throw ShapeError("fusion block expects a propagated feature");
  }
  return torch::relu(w);
}

torch::Tensor center_crop(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
  const auto h = x.size(-2);
  const auto w = x.size(-1);
  if (height > h || width > w) throw ShapeError("crop target larger than input");
  const auto top = (h - height) / 2;
  const auto left = (w - width) / 2;
  return x.narrow(-2, top, height).narrow(-1, left, width);
}

MapHeadImpl::MapHeadImpl(int in_channels, std::array<int, 3> channels) {
  const std::array<int, 5> chain{in_channels, channels[0], channels[1], channels[2], 1};
  for (std::size_t i = 0; i < 4; ++i) {
    ups_.push_back(register_module(
        fmt::format("up{}", i),
        nn::ConvTranspose2d(nn::ConvTranspose2dOptions(chain[i], chain[i + 1], 4).stride(2).padding(1).bias(i == 3))));
    if (i < 3) norms_.push_back(register_module(fmt::format("norm{}", i), nn::BatchNorm2d(chain[i + 1])));
  }
}

torch::Tensor MapHeadImpl::forward(const torch::Tensor& fused,
                                   const std::array<std::array<std::int64_t, 2>, 4>& targets) {
  auto h = fused;
  for (std::size_t i = 0; i < 4; ++i) {
    h = center_crop(ups_[i](h), targets[i][0], targets[i][1]);
    if (i < 3) h = torch::relu(norms_[i](h));
  }
  return torch::sigmoid(h);
}

ClsHeadImpl::ClsHeadImpl(int in_channels, int width) {
  conv_ = register_module("conv", nn::Conv2d(nn::Conv2dOptions(in_channels, width, 1).bias(false)));
  bn_ = register_module("bn", nn::BatchNorm2d(width));
  fc_ = register_module("fc", nn::Linear(width, 2));
}

torch::Tensor ClsHeadImpl::forward(const torch::Tensor& fused) {
  auto h = torch::silu(bn_(conv_(fused)));
  return fc_(h.mean({2, 3}));
}

torch::Tensor fake_probability(const torch::Tensor& logits) { return torch::softmax(logits, 1).select(1, 1); }

}  // namespace rbi::model
