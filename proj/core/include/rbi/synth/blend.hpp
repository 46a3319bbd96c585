#pragma once

#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"

namespace rbi::synth {

struct MaskBlurConfig {
  Range sigma{1.0, 4.0};
};

// 2 * ceil(2 * sigma) + 1
int mask_blur_kernel_size(double sigma);

// Normalised Gaussian blur with zero padding; sigma <= 0 copies.
cv::Mat blur_mask(const cv::Mat& mask, double sigma);

// I_R = I_S * (alpha M) + I_T * (1 - alpha M), per pixel and channel.
// alpha must lie in [0.5, 1] and M in [0, 1].
cv::Mat blend(const cv::Mat& source, const cv::Mat& target, const cv::Mat& mask, double alpha);

// E = 4 M (1 - M)
cv::Mat edge_from_mask(const cv::Mat& mask);

}  // namespace rbi::synth
