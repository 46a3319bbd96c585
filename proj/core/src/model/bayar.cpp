#include "rbi/model/bayar.hpp"

#include <limits>

#include "rbi/core/log.hpp"

#include "rbi/core/error.hpp"

namespace rbi::model {

bool bayar_project(torch::Tensor& kernel) {
  if (kernel.numel() != 25) throw ShapeError("constrained kernel must be 5x5");
  torch::NoGradGuard guard;
  auto flat = kernel.view({25});
  if (!torch::isfinite(flat).all().item<bool>()) throw NumericError("constrained kernel is not finite");
  auto k = flat.to(torch::kFloat64);
  k[12] = 0.0;
  const double sum = k.sum().item<double>();
  bool reset = false;
  if (sum == 0.0) {
    log::warn("constrained kernel off-centre weights sum to zero; resetting to 1/24");
    k.fill_(1.0 / 24.0);
    reset = true;
  } else {
    k.div_(sum);
  }
  k[12] = 0.0;
  // Rounding to the storage type perturbs the sum; fold the residual into the
  // smallest off-centre weight, whose spacing is finest.
  auto stored = k.to(flat.scalar_type());
  const double residual = 1.0 - stored.to(torch::kFloat64).sum().item<double>();
  auto magnitude = stored.abs();
  magnitude[12] = std::numeric_limits<double>::infinity();
  const auto idx = magnitude.argmin().item<std::int64_t>();
  stored[idx] = stored[idx].item<double>() + residual;
  flat.copy_(stored);
  flat[12] = -1.0;
  return reset;
}

torch::Tensor to_grayscale(const torch::Tensor& rgb) {
  if (rgb.dim() != 4 || rgb.size(1) != 3) throw ShapeError("grayscale conversion expects (B, 3, H, W)");
  auto w = torch::tensor({0.299, 0.587, 0.114}, rgb.options()).view({1, 3, 1, 1});
  return (rgb * w).sum(1, true);
}

NoiseExtractorImpl::NoiseExtractorImpl() {
  weight_ = register_parameter("weight", torch::rand({1, 1, 5, 5}));
  project();
}

torch::Tensor NoiseExtractorImpl::forward(const torch::Tensor& rgb) {
  namespace F = torch::nn::functional;
  // Replicated borders keep constant fields at exactly zero response.
  auto gray = F::pad(to_grayscale(rgb), F::PadFuncOptions({2, 2, 2, 2}).mode(torch::kReplicate));
  return F::conv2d(gray, weight_.to(rgb.dtype()));
}

void NoiseExtractorImpl::project() {
  if (bayar_project(weight_)) ++resets_;
  ++projections_;
}

}  // namespace rbi::model
