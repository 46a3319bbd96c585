#include "rbi/model/backbone.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rbi/core/error.hpp"

namespace rbi::model {

namespace nn = torch::nn;

namespace {

nn::Conv2d conv(int in, int out, int k, int stride = 1, int groups = 1, bool bias = false) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).groups(groups).bias(bias));
}

}  // namespace

MBConvImpl::MBConvImpl(int in_channels, int out_channels, const StageSpec& stage, int stride, double se_ratio) {
  residual_ = stride == 1 && in_channels == out_channels;
  expand_ = stage.expand != 1;
  const int mid = in_channels * stage.expand;
  if (expand_) {
    expand_conv_ = register_module("expand_conv", conv(in_channels, mid, 1));
    expand_bn_ = register_module("expand_bn", nn::BatchNorm2d(mid));
  }
  depthwise_ = register_module("depthwise", conv(mid, mid, stage.kernel, stride, mid));
  depthwise_bn_ = register_module("depthwise_bn", nn::BatchNorm2d(mid));
  const int squeezed = std::max(1, static_cast<int>(std::floor(in_channels * se_ratio)));
  se_reduce_ = register_module("se_reduce", conv(mid, squeezed, 1, 1, 1, true));
  se_expand_ = register_module("se_expand", conv(squeezed, mid, 1, 1, 1, true));
  project_ = register_module("project", conv(mid, out_channels, 1));
  project_bn_ = register_module("project_bn", nn::BatchNorm2d(out_channels));
}

torch::Tensor MBConvImpl::forward(const torch::Tensor& x) {
  auto h = x;
  if (expand_) h = torch::silu(expand_bn_(expand_conv_(h)));
  h = torch::silu(depthwise_bn_(depthwise_(h)));
  auto s = h.mean({2, 3}, true);
  s = torch::sigmoid(se_expand_(torch::silu(se_reduce_(s))));
  h = project_bn_(project_(h * s));
  return residual_ ? h + x : h;
}

BackboneImpl::BackboneImpl(const ModelConfig& cfg, int in_channels) : in_channels_(in_channels) {
  cfg.validate();
  taps_ = cfg.scale_taps();
  const auto& spec = cfg.backbone;
  stem_ = register_module("stem", conv(in_channels, spec.stem_channels, 3, 2));
  stem_bn_ = register_module("stem_bn", nn::BatchNorm2d(spec.stem_channels));
  int channels = spec.stem_channels;
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& st = spec.stages[s];
    nn::Sequential seq;
    for (int r = 0; r < st.repeats; ++r) {
      seq->push_back(MBConv(channels, st.out_channels, st, r == 0 ? st.stride : 1, spec.se_ratio));
      channels = st.out_channels;
    }
    stages_.push_back(register_module(fmt::format("stage{}", s), seq));
  }
}

std::vector<torch::Tensor> BackboneImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != in_channels_) {
    throw ShapeError(fmt::format("backbone expects (B, {}, H, W) input", in_channels_));
  }
  std::vector<torch::Tensor> out(5);
  auto h = torch::silu(stem_bn_(stem_(x)));
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    h = stages_[s]->forward(h);
    for (std::size_t i = 0; i < 5; ++i) {
      if (taps_[i] == static_cast<int>(s)) out[i] = h;
    }
  }
  return out;
}

void BackboneImpl::save(const std::string& path) {
  torch::serialize::OutputArchive archive;
  for (const auto& item : named_parameters()) archive.write(item.key(), item.value());
  for (const auto& item : named_buffers()) archive.write(item.key(), item.value(), true);
  archive.save_to(path);
}

void BackboneImpl::load_pretrained(const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error& e) {
    throw DataError(fmt::format("cannot read backbone weights '{}': {}", path, e.what_without_backtrace()));
  }
  torch::NoGradGuard guard;
  auto copy_into = [&](const std::string& key, torch::Tensor& dst, bool buffer) {
    torch::Tensor src;
    if (!archive.try_read(key, src, buffer)) throw DataError(fmt::format("backbone weights missing '{}'", key));
    if (key == "stem.weight" && src.size(1) != dst.size(1)) {
      if (dst.size(1) != 1) throw ShapeError("stem adaptation only supports a single-channel target");
      src = src.mean(1, true);
    }
    if (src.sizes() != dst.sizes()) throw ShapeError(fmt::format("backbone weight '{}' has the wrong shape", key));
    dst.copy_(src);
  };
  for (auto& item : named_parameters()) copy_into(item.key(), item.value(), false);
  for (auto& item : named_buffers()) copy_into(item.key(), item.value(), true);
}

}  // namespace rbi::model
