#pragma once

#include <nlohmann/json_fwd.hpp>
#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"

namespace rbi::synth {

struct DeformConfig {
  double probability = 0.5;
  Range translate_x{-0.03, 0.03};  // fraction of width
  Range translate_y{-0.03, 0.03};  // fraction of height
  Range rotation_deg{-5.0, 5.0};
  Range scale{0.97, 1.03};
  Range elastic_alpha{0.0, 0.02};  // peak displacement, fraction of the longer side
  double elastic_sigma_frac = 0.08;  // smoothing of the displacement field
};

struct DeformLog {
  bool applied = false;
  double translate_x = 0.0;  // pixels
  double translate_y = 0.0;
  double rotation_deg = 0.0;
  double scale = 1.0;
  double elastic_alpha = 0.0;  // pixels
};

struct DeformResult {
  cv::Mat mask;
  cv::Mat source;
  DeformLog log;
};

// One shared affine + elastic warp applied to both rasters with probability
// cfg.probability. The mask is resampled nearest-neighbour (stays binary), the
// source bilinearly.
DeformResult deform_mask_and_source(const cv::Mat& mask, const cv::Mat& source, Rng& rng, const DeformConfig& cfg);

void to_json(nlohmann::json& j, const DeformLog& log);

}  // namespace rbi::synth
