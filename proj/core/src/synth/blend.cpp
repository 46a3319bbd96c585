#include "rbi/synth/blend.hpp"

#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi::synth {

int mask_blur_kernel_size(double sigma) { return 2 * static_cast<int>(std::ceil(2.0 * sigma)) + 1; }

cv::Mat blur_mask(const cv::Mat& mask, double sigma) {
  require_field(mask, "blur_mask");
  if (sigma <= 0.0) return mask.clone();
  const int k = mask_blur_kernel_size(sigma);
  cv::Mat out;
  cv::GaussianBlur(mask, out, cv::Size(k, k), sigma, sigma, cv::BORDER_CONSTANT);
  return clamp01(out);
}

cv::Mat blend(const cv::Mat& source, const cv::Mat& target, const cv::Mat& mask, double alpha) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) {
    throw ParameterError(fmt::format("blend: alpha {} outside [0.5, 1]", alpha));
  }
  require_color(source, "blend source");
  require_color(target, "blend target");
  require_field(mask, "blend mask");
  if (source.size() != target.size() || source.size() != mask.size()) {
    throw ShapeError("blend: source, target and mask sizes differ");
  }
  double lo = 0.0, hi = 0.0;
  cv::minMaxLoc(mask, &lo, &hi);
  if (lo < 0.0 || hi > 1.0) throw ParameterError("blend: mask values outside [0, 1]");

  const float a = static_cast<float>(alpha);
  cv::Mat out(source.size(), CV_32FC3);
  for (int y = 0; y < source.rows; ++y) {
    const auto* s = source.ptr<cv::Vec3f>(y);
    const auto* t = target.ptr<cv::Vec3f>(y);
    const auto* m = mask.ptr<float>(y);
    auto* r = out.ptr<cv::Vec3f>(y);
    for (int x = 0; x < source.cols; ++x) {
      const float w = a * m[x];
      const float v = 1.0f - w;
      for (int c = 0; c < 3; ++c) r[x][c] = s[x][c] * w + t[x][c] * v;
    }
  }
  return out;
}

cv::Mat edge_from_mask(const cv::Mat& mask) {
  require_field(mask, "edge_from_mask");
  cv::Mat out(mask.size(), CV_32FC1);
  for (int y = 0; y < mask.rows; ++y) {
    const float* m = mask.ptr<float>(y);
    float* e = out.ptr<float>(y);
    for (int x = 0; x < mask.cols; ++x) e[x] = 4.0f * m[x] * (1.0f - m[x]);
  }
  return out;
}

}  // namespace rbi::synth
