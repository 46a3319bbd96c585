#include "rbi/train/sam.hpp"

#include <cmath>

#include "rbi/core/error.hpp"

namespace rbi::train {

Sam::Sam(torch::optim::Optimizer& base, double rho) : base_(base), rho_(rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("sharpness neighbourhood rho must be >= 0");
}

std::vector<torch::Tensor> Sam::parameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& group : base_.param_groups()) {
    for (const auto& p : group.params()) out.push_back(p);
  }
  return out;
}

SamStepResult Sam::step(const Closure& closure) {
  const auto params = parameters();
  SamStepResult result;
  base_.zero_grad();
  result.loss = closure(0);
  result.loss.backward();

  double sq = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) sq += p.grad().to(torch::kDouble).pow(2).sum().item<double>();
  }
  result.grad_norm = std::sqrt(sq);
  if (!std::isfinite(result.grad_norm)) throw NumericError("gradient norm is not finite");

  if (result.grad_norm > 0.0 && rho_ > 0.0) {
    const double scale = rho_ / result.grad_norm;
    std::vector<torch::Tensor> offsets;
    offsets.reserve(params.size());
    {
      torch::NoGradGuard guard;
      for (const auto& p : params) {
        torch::Tensor e;
        if (p.grad().defined()) {
          e = p.grad() * scale;
          p.add_(e);
        }
        offsets.push_back(e);
      }
    }
    base_.zero_grad();
    closure(1).backward();
    {
      torch::NoGradGuard guard;
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (offsets[i].defined()) params[i].sub_(offsets[i]);
      }
    }
    result.perturbed = true;
  }
  base_.step();
  return result;
}

FreezeBatchNormStats::FreezeBatchNormStats(torch::nn::Module& root) {
  for (const auto& m : root.modules(/*include_self=*/true)) {
    if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
      saved_.push_back({bn, bn->options.momentum(),
                        bn->num_batches_tracked.defined() ? bn->num_batches_tracked.clone() : torch::Tensor()});
      bn->options.momentum(0.0);
    }
  }
}

FreezeBatchNormStats::~FreezeBatchNormStats() {
  torch::NoGradGuard guard;
  for (auto& s : saved_) {
    s.bn->options.momentum(s.momentum);
    if (s.batches_tracked.defined()) s.bn->num_batches_tracked.copy_(s.batches_tracked);
  }
}

}  // namespace rbi::train
