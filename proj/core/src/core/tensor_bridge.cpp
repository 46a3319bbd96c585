#include "rbi/core/tensor_bridge.hpp"

#include "rbi/core/error.hpp"

namespace rbi {

torch::Tensor to_tensor(const cv::Mat& raster) {
  if (raster.empty() || raster.depth() != CV_32F) throw ShapeError("to_tensor: expected float raster");
  cv::Mat dense = raster.isContinuous() ? raster : raster.clone();
  auto hwc = torch::from_blob(dense.data, {dense.rows, dense.cols, dense.channels()}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).contiguous().clone();
}

cv::Mat to_mat(const torch::Tensor& chw) {
  torch::Tensor t = chw.detach().to(torch::kCPU, torch::kFloat32);
  if (t.dim() == 2) t = t.unsqueeze(0);
  if (t.dim() != 3) throw ShapeError("to_mat: expected (C,H,W) tensor");
  t = t.permute({1, 2, 0}).contiguous();
  const int h = static_cast<int>(t.size(0));
  const int w = static_cast<int>(t.size(1));
  const int c = static_cast<int>(t.size(2));
  cv::Mat out(h, w, CV_MAKETYPE(CV_32F, c));
  std::memcpy(out.data, t.data_ptr<float>(), sizeof(float) * static_cast<std::size_t>(h * w * c));
  return out;
}

}  // namespace rbi
