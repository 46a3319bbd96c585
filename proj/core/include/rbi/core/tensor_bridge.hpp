#pragma once

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace rbi {

// HWC float raster <-> CHW float32 tensor (copies).
torch::Tensor to_tensor(const cv::Mat& raster);
cv::Mat to_mat(const torch::Tensor& chw);

}  // namespace rbi
