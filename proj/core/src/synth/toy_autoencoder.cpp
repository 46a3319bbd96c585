#include "rbi/synth/toy_autoencoder.hpp"

#include <torch/script.h>

#include "rbi/core/error.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/core/tensor_bridge.hpp"

namespace rbi::synth {

namespace nn = torch::nn;

ToyAutoencoderImpl::ToyAutoencoderImpl() {
  encoder_ = register_module(
      "encoder", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 16, 3).stride(2).padding(1)), nn::ReLU(),
                                nn::Conv2d(nn::Conv2dOptions(16, 32, 3).stride(2).padding(1)), nn::ReLU(),
                                nn::Conv2d(nn::Conv2dOptions(32, 32, 3).padding(1)), nn::ReLU()));
  id_proj_ = register_module("id_proj", nn::Linear(32, kIdDim));
  bg_proj_ = register_module("bg_proj", nn::Conv2d(nn::Conv2dOptions(32, kBgChannels, 1)));
  decoder_ = register_module(
      "decoder",
      nn::Sequential(nn::Conv2d(nn::Conv2dOptions(kBgChannels + kIdDim, 32, 3).padding(1)), nn::ReLU(),
                     nn::ConvTranspose2d(nn::ConvTranspose2dOptions(32, 16, 4).stride(2).padding(1)), nn::ReLU(),
                     nn::ConvTranspose2d(nn::ConvTranspose2dOptions(16, 3, 4).stride(2).padding(1))));
}

std::pair<torch::Tensor, torch::Tensor> ToyAutoencoderImpl::encode(const torch::Tensor& x) {
  auto h = encoder_->forward(x);
  auto id = id_proj_->forward(h.mean({2, 3}));
  auto bg = bg_proj_->forward(h);
  return {id, bg};
}

torch::Tensor ToyAutoencoderImpl::decode(const torch::Tensor& id, const torch::Tensor& bg) {
  auto id_map = id.unsqueeze(-1).unsqueeze(-1).expand({id.size(0), id.size(1), bg.size(2), bg.size(3)});
  return torch::sigmoid(decoder_->forward(torch::cat({bg, id_map}, 1)));
}

torch::Tensor ToyAutoencoderImpl::forward(const torch::Tensor& x) {
  auto [id, bg] = encode(x);
  return decode(id, bg);
}

ToyAutoencoder fit_toy_autoencoder(std::span<const cv::Mat> images, const AutoencoderFitOptions& options) {
  if (images.empty()) throw DataError("fit_toy_autoencoder: no training images");
  torch::manual_seed(options.seed);
  ToyAutoencoder model;
  std::vector<torch::Tensor> stack;
  stack.reserve(images.size());
  for (const auto& img : images) {
    if (img.rows % 4 != 0 || img.cols % 4 != 0) throw ShapeError("toy autoencoder: sides must be multiples of 4");
    stack.push_back(to_tensor(img));
  }
  const auto data = torch::stack(stack);
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(options.learning_rate));
  Rng rng(options.seed);
  const int n = static_cast<int>(images.size());
  model->train();
  for (int step = 0; step < options.steps; ++step) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(std::min(options.batch_size, n)));
    for (auto& i : idx) i = rng.uniform_int(0, n - 1);
    auto batch = data.index_select(0, torch::tensor(idx, torch::kLong));
    optimizer.zero_grad();
    auto loss = torch::mse_loss(model->forward(batch), batch);
    loss.backward();
    optimizer.step();
  }
  model->eval();
  return model;
}

void save_toy_autoencoder(ToyAutoencoder& model, const std::filesystem::path& path) {
  torch::save(model, path.string());
}

ToyAutoencoder load_toy_autoencoder(const std::filesystem::path& path) {
  ToyAutoencoder model;
  try {
    torch::load(model, path.string());
  } catch (const std::exception& e) {
    throw SynthesisError("reconstructor 'toy-autoencoder': cannot load '" + path.string() + "': " + e.what());
  }
  model->eval();
  return model;
}

namespace {

LatentPair to_latent(const torch::Tensor& id, const torch::Tensor& bg, cv::Size extent) {
  auto id_c = id.detach().to(torch::kFloat32).contiguous();
  auto bg_c = bg.detach().to(torch::kFloat32).contiguous();
  LatentPair out;
  out.id_vec.assign(id_c.data_ptr<float>(), id_c.data_ptr<float>() + id_c.numel());
  out.bg_vec.assign(bg_c.data_ptr<float>(), bg_c.data_ptr<float>() + bg_c.numel());
  out.id_shape = id_c.sizes().vec();
  out.bg_shape = bg_c.sizes().vec();
  out.extent = extent;
  return out;
}

std::pair<torch::Tensor, torch::Tensor> from_latent(const LatentPair& latent) {
  auto id = torch::from_blob(const_cast<float*>(latent.id_vec.data()), latent.id_shape, torch::kFloat32).clone();
  auto bg = torch::from_blob(const_cast<float*>(latent.bg_vec.data()), latent.bg_shape, torch::kFloat32).clone();
  return {id, bg};
}

void check_latent(const LatentPair& latent, const std::string& name) {
  auto numel = [](const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  };
  if (latent.id_shape.empty() || latent.bg_shape.empty() ||
      numel(latent.id_shape) != static_cast<std::int64_t>(latent.id_vec.size()) ||
      numel(latent.bg_shape) != static_cast<std::int64_t>(latent.bg_vec.size())) {
    throw ShapeError("reconstructor '" + name + "': latent vectors do not match their shapes");
  }
}

}  // namespace

ToyAutoencoderAdapter::ToyAutoencoderAdapter(ToyAutoencoder model) : model_(std::move(model)) {
  model_->eval();
}

LatentPair ToyAutoencoderAdapter::encode(const cv::Mat& image) const {
  if (image.type() != CV_32FC3 || image.rows % 4 != 0 || image.cols % 4 != 0) {
    throw ShapeError("reconstructor 'toy-autoencoder': expected RGB raster with sides divisible by 4");
  }
  torch::NoGradGuard no_grad;
  auto [id, bg] = model_.ptr()->encode(to_tensor(image).unsqueeze(0));
  return to_latent(id, bg, image.size());
}

cv::Mat ToyAutoencoderAdapter::decode(const LatentPair& latent) const {
  check_latent(latent, name());
  torch::NoGradGuard no_grad;
  auto [id, bg] = from_latent(latent);
  return to_mat(model_.ptr()->decode(id, bg).squeeze(0));
}

struct ScriptedAdapter::Impl {
  torch::jit::Module module;
};

ScriptedAdapter::ScriptedAdapter(const std::filesystem::path& path) : path_(path), impl_(std::make_unique<Impl>()) {
  if (path.empty() || !std::filesystem::exists(path)) {
    throw SynthesisError("reconstructor 'scripted': model file not found at '" + path.string() + "'");
  }
  try {
    impl_->module = torch::jit::load(path.string());
    impl_->module.eval();
    (void)impl_->module.get_method("encode");
    (void)impl_->module.get_method("decode");
  } catch (const std::exception& e) {
    throw SynthesisError("reconstructor 'scripted': invalid model '" + path.string() + "': " + e.what());
  }
}

ScriptedAdapter::~ScriptedAdapter() = default;

LatentPair ScriptedAdapter::encode(const cv::Mat& image) const {
  torch::NoGradGuard no_grad;
  try {
    auto out = impl_->module.get_method("encode")({to_tensor(image).unsqueeze(0)});
    auto tuple = out.toTuple();
    return to_latent(tuple->elements().at(0).toTensor(), tuple->elements().at(1).toTensor(), image.size());
  } catch (const c10::Error& e) {
    throw SynthesisError("reconstructor '" + name() + "': encode failed: " + e.what_without_backtrace());
  }
}

cv::Mat ScriptedAdapter::decode(const LatentPair& latent) const {
  check_latent(latent, name());
  torch::NoGradGuard no_grad;
  auto [id, bg] = from_latent(latent);
  try {
    auto out = impl_->module.get_method("decode")({id, bg}).toTensor();
    return to_mat(out.squeeze(0));
  } catch (const c10::Error& e) {
    throw SynthesisError("reconstructor '" + name() + "': decode failed: " + e.what_without_backtrace());
  }
}

}  // namespace rbi::synth
