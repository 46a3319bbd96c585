#include "rbi/synth/deform.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"

namespace rbi::synth {

namespace {

cv::Mat smooth_displacement(cv::Size size, double sigma, Rng& rng) {
  cv::Mat field(size, CV_32FC1);
  for (int y = 0; y < size.height; ++y) {
    float* row = field.ptr<float>(y);
    for (int x = 0; x < size.width; ++x) row[x] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  const int k = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  cv::GaussianBlur(field, field, cv::Size(k, k), sigma, sigma, cv::BORDER_REFLECT101);
  double lo = 0.0, hi = 0.0;
  cv::minMaxLoc(field, &lo, &hi);
  const double peak = std::max(std::abs(lo), std::abs(hi));
  if (peak > 0.0) field /= peak;
  return field;
}

}  // namespace

DeformResult deform_mask_and_source(const cv::Mat& mask, const cv::Mat& source, Rng& rng, const DeformConfig& cfg) {
  if (mask.size() != source.size()) throw ShapeError("deform_mask_and_source: mask and source differ in size");
  DeformResult out;
  if (!rng.bernoulli(cfg.probability)) {
    out.mask = mask.clone();
    out.source = source.clone();
    return out;
  }
  const cv::Size size = mask.size();
  DeformLog& log = out.log;
  log.applied = true;
  log.translate_x = cfg.translate_x.sample(rng) * size.width;
  log.translate_y = cfg.translate_y.sample(rng) * size.height;
  log.rotation_deg = cfg.rotation_deg.sample(rng);
  log.scale = cfg.scale.sample(rng);
  const int longer = std::max(size.width, size.height);
  log.elastic_alpha = cfg.elastic_alpha.sample(rng) * longer;

  cv::Mat dx, dy;
  if (log.elastic_alpha != 0.0) {
    const double sigma = std::max(0.5, cfg.elastic_sigma_frac * longer);
    dx = smooth_displacement(size, sigma, rng) * log.elastic_alpha;
    dy = smooth_displacement(size, sigma, rng) * log.elastic_alpha;
  }

  // Destination pixel p' pulls from p = R^-1 (p' - c - t) / s + c, plus the
  // elastic offset at p'.
  const double theta = log.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cx = size.width / 2.0, cy = size.height / 2.0;
  cv::Mat map_x(size, CV_32FC1), map_y(size, CV_32FC1);
  for (int y = 0; y < size.height; ++y) {
    float* mx = map_x.ptr<float>(y);
    float* my = map_y.ptr<float>(y);
    for (int x = 0; x < size.width; ++x) {
      const double u = x - cx - log.translate_x;
      const double v = y - cy - log.translate_y;
      double sx = (cs * u + sn * v) / log.scale + cx;
      double sy = (-sn * u + cs * v) / log.scale + cy;
      if (!dx.empty()) {
        sx += dx.at<float>(y, x);
        sy += dy.at<float>(y, x);
      }
      mx[x] = static_cast<float>(sx);
      my[x] = static_cast<float>(sy);
    }
  }
  cv::remap(mask, out.mask, map_x, map_y, cv::INTER_NEAREST, cv::BORDER_CONSTANT, cv::Scalar(0));
  cv::remap(source, out.source, map_x, map_y, cv::INTER_LINEAR, cv::BORDER_REFLECT101);
  return out;
}

void to_json(nlohmann::json& j, const DeformLog& log) {
  j = nlohmann::json{{"applied", log.applied},         {"translate_x", log.translate_x},
                     {"translate_y", log.translate_y}, {"rotation_deg", log.rotation_deg},
                     {"scale", log.scale},             {"elastic_alpha", log.elastic_alpha}};
}

}  // namespace rbi::synth
