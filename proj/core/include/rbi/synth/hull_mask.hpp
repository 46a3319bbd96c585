#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"

namespace rbi::synth {

enum class HullVariant { kFull, kLowerFace, kComponents, kDilated };

std::string_view to_string(HullVariant variant);
HullVariant parse_hull_variant(std::string_view text);

struct BlendMask {
  cv::Mat field;  // CV_32FC1 in [0, 1]
  HullVariant variant = HullVariant::kFull;
  bool deformed = false;
};

struct HullConfig {
  std::vector<HullVariant> variants{HullVariant::kFull, HullVariant::kLowerFace, HullVariant::kComponents,
                                    HullVariant::kDilated};
  // Dilation radius as a fraction of the landmark extent.
  Range dilation_frac{0.02, 0.06};
};

// Shoelace area of a simple polygon (absolute value).
double polygon_area(std::span<const cv::Point2f> polygon);

// Convex hull in counter-clockwise order.
std::vector<cv::Point2f> convex_hull(std::span<const cv::Point2f> points);

// Binary {0,1} field; a pixel is set when its centre lies inside or on the
// boundary of the convex polygon.
cv::Mat rasterize_convex_polygon(std::span<const cv::Point2f> polygon, cv::Size size);

// Initial blending mask M_I from 81 landmarks; the variant is drawn uniformly
// from cfg.variants. Collinear/duplicate landmarks (zero hull area) throw.
BlendMask build_hull_mask(std::span<const cv::Point2f> landmarks, cv::Size size, Rng& rng,
                          const HullConfig& cfg);

}  // namespace rbi::synth
