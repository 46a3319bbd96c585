#pragma once

#include <torch/torch.h>

#include <functional>
#include <vector>

namespace rbi::train {

struct SamStepResult {
  torch::Tensor loss;  // loss at the unperturbed weights
  double grad_norm = 0.0;  // global L2 norm of the first gradient
  bool perturbed = false;
};

// Two-phase sharpness-aware step around any base optimizer.
class Sam {
 public:
  // phase is 0 at the current weights and 1 at the perturbed weights. The
  // closure returns the scalar loss without calling backward.
  using Closure = std::function<torch::Tensor(int phase)>;

  Sam(torch::optim::Optimizer& base, double rho);

  SamStepResult step(const Closure& closure);

  double rho() const { return rho_; }
  torch::optim::Optimizer& base() { return base_; }

 private:
  std::vector<torch::Tensor> parameters() const;

  torch::optim::Optimizer& base_;
  double rho_;
};

// Holds every BatchNorm's running statistics fixed while alive, so a second
// forward pass over the same batch leaves them untouched.
class FreezeBatchNormStats {
 public:
  explicit FreezeBatchNormStats(torch::nn::Module& root);
  ~FreezeBatchNormStats();
  FreezeBatchNormStats(const FreezeBatchNormStats&) = delete;
  FreezeBatchNormStats& operator=(const FreezeBatchNormStats&) = delete;

 private:
  struct Saved {
    torch::nn::BatchNorm2dImpl* bn;
    std::optional<double> momentum;
    torch::Tensor batches_tracked;
  };
  std::vector<Saved> saved_;
};

}  // namespace rbi::train
