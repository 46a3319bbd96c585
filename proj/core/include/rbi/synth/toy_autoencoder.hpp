#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "rbi/synth/reconstructor.hpp"

namespace rbi::synth {

// Small convolutional autoencoder with a pooled identity code and a spatial
// background code at 1/4 resolution. Input sides must be multiples of 4.
class ToyAutoencoderImpl : public torch::nn::Module {
 public:
  static constexpr int kIdDim = 32;
  static constexpr int kBgChannels = 8;

  ToyAutoencoderImpl();

  // x: (B, 3, H, W) -> (id (B, kIdDim), bg (B, kBgChannels, H/4, W/4))
  std::pair<torch::Tensor, torch::Tensor> encode(const torch::Tensor& x);
  torch::Tensor decode(const torch::Tensor& id, const torch::Tensor& bg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::Linear id_proj_{nullptr};
  torch::nn::Conv2d bg_proj_{nullptr};
  torch::nn::Sequential decoder_{nullptr};
};
TORCH_MODULE(ToyAutoencoder);

struct AutoencoderFitOptions {
  int steps = 400;
  int batch_size = 16;
  double learning_rate = 2e-3;
  std::uint64_t seed = 0;
};

// Fits reconstruction MSE on the given RGB rasters (all the same size).
ToyAutoencoder fit_toy_autoencoder(std::span<const cv::Mat> images,
                                   const AutoencoderFitOptions& options);

void save_toy_autoencoder(ToyAutoencoder& model, const std::filesystem::path& path);
ToyAutoencoder load_toy_autoencoder(const std::filesystem::path& path);

class ToyAutoencoderAdapter final : public ReconstructorAdapter {
 public:
  explicit ToyAutoencoderAdapter(ToyAutoencoder model);

  std::string name() const override { return "toy-autoencoder"; }
  LatentPair encode(const cv::Mat& image) const override;
  cv::Mat decode(const LatentPair& latent) const override;

 private:
  ToyAutoencoder model_;
};

// Loads a TorchScript module exposing `encode(x) -> (id, bg)` and
// `decode(id, bg) -> x` with x of shape (1, 3, H, W) in [0, 1].
class ScriptedAdapter final : public ReconstructorAdapter {
 public:
  explicit ScriptedAdapter(const std::filesystem::path& path);
  ~ScriptedAdapter() override;

  std::string name() const override { return "scripted:" + path_.filename().string(); }
  LatentPair encode(const cv::Mat& image) const override;
  cv::Mat decode(const LatentPair& latent) const override;
  bool concurrent_safe() const override { return false; }

 private:
  struct Impl;
  std::filesystem::path path_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rbi::synth
