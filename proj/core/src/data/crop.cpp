#include "rbi/data/crop.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/log.hpp"

namespace rbi::data {

void CropOptions::validate() const {
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError("crop margin must be non-negative");
  if (size < 2) throw ConfigError("crop size must be at least 2");
}

cv::Point2f CropTransform::forward(cv::Point2f p) const {
  return {static_cast<float>((p.x - x0) * scale_x), static_cast<float>((p.y - y0) * scale_y)};
}

cv::Point2f CropTransform::inverse(cv::Point2f p) const {
  return {static_cast<float>(p.x / scale_x + x0), static_cast<float>(p.y / scale_y + y0)};
}

Crop crop_and_resize(const cv::Mat& frame, const BBox& bbox, const std::vector<cv::Point2f>& landmarks,
                     const CropOptions& options) {
  require_color(frame, "crop_and_resize");
  options.validate();
  if (!bbox.valid()) throw DataError("crop_and_resize: invalid bounding box");
  const double mx = options.margin * bbox.width();
  const double my = options.margin * bbox.height();
  int x0 = static_cast<int>(std::floor(bbox.x0 - mx));
  int y0 = static_cast<int>(std::floor(bbox.y0 - my));
  int x1 = static_cast<int>(std::ceil(bbox.x1 + mx));
  int y1 = static_cast<int>(std::ceil(bbox.y1 + my));
  Crop crop;
  if (x0 < 0 || y0 < 0 || x1 > frame.cols || y1 > frame.rows) {
    crop.clamped = true;
    log::warn("crop [{}, {}, {}, {}] exceeds the {}x{} frame; clamping", x0, y0, x1, y1, frame.cols, frame.rows);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, frame.cols);
    y1 = std::min(y1, frame.rows);
  }
  if (x1 <= x0 || y1 <= y0) throw DataError("crop_and_resize: box lies outside the frame");
  crop.region = cv::Rect(x0, y0, x1 - x0, y1 - y0);
  const cv::Mat patch = frame(crop.region);
  const int interp = (patch.cols > options.size || patch.rows > options.size) ? cv::INTER_AREA : cv::INTER_LINEAR;
  cv::resize(patch, crop.image, cv::Size(options.size, options.size), 0, 0, interp);
  crop.transform = {static_cast<double>(x0), static_cast<double>(y0),
                    static_cast<double>(options.size) / crop.region.width,
                    static_cast<double>(options.size) / crop.region.height};
  crop.landmarks.reserve(landmarks.size());
  for (const auto& p : landmarks) crop.landmarks.push_back(crop.transform.forward(p));
  return crop;
}

}  // namespace rbi::data
