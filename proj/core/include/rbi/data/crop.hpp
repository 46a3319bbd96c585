#pragma once

#include <vector>

#include <opencv2/core.hpp>

#include "rbi/synth/face_record.hpp"

namespace rbi::data {

struct CropOptions {
  double margin = 0.125;  // fraction of box size added per side
  int size = 380;

  void validate() const;
};

// x_crop = (x_frame - x0) * scale_x, likewise for y.
struct CropTransform {
  double x0 = 0.0;
  double y0 = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;

  cv::Point2f forward(cv::Point2f p) const;
  cv::Point2f inverse(cv::Point2f p) const;
};

struct Crop {
  cv::Mat image;  // size x size RGB float
  std::vector<cv::Point2f> landmarks;
  CropTransform transform;
  cv::Rect region;  // pixels taken from the frame
  bool clamped = false;
};

// Expands the box by the margin, clamps it to the frame (with a warning) and
// resizes to size x size. Landmarks are mapped into crop coordinates.
Crop crop_and_resize(const cv::Mat& frame, const BBox& bbox, const std::vector<cv::Point2f>& landmarks,
                     const CropOptions& options);

}  // namespace rbi::data
