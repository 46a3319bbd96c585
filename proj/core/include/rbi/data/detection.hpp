#pragma once

#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/synth/face_record.hpp"

namespace rbi::data {

struct FaceAnnotation {
  BBox bbox;
  std::vector<cv::Point2f> landmarks;  // 81 points, frame pixel coordinates
};

class DetectionAdapter {
 public:
  virtual ~DetectionAdapter() = default;
  // Boxes are clamped to the frame.
  virtual std::vector<BBox> detect(const std::filesystem::path& frame_path, const cv::Mat& frame) const = 0;
  virtual std::vector<cv::Point2f> landmarks(const std::filesystem::path& frame_path, const cv::Mat& frame,
                                             const BBox& bbox) const = 0;
};

// Reads `<frame stem>.json` next to each frame:
// {"faces": [{"bbox": [x0, y0, x1, y1], "landmarks": [x0, y0, x1, y1, ...]}]}
class SidecarDetector final : public DetectionAdapter {
 public:
  std::vector<BBox> detect(const std::filesystem::path& frame_path, const cv::Mat& frame) const override;
  std::vector<cv::Point2f> landmarks(const std::filesystem::path& frame_path, const cv::Mat& frame,
                                     const BBox& bbox) const override;
};

std::filesystem::path sidecar_path(const std::filesystem::path& frame_path);
// Optional manipulation mask: `<frame stem>.mask.png`.
std::filesystem::path mask_path(const std::filesystem::path& frame_path);

std::vector<FaceAnnotation> read_annotations(const std::filesystem::path& sidecar);
void write_annotations(const std::filesystem::path& sidecar, const std::vector<FaceAnnotation>& faces);

BBox clamp_to_frame(const BBox& box, int width, int height);

}  // namespace rbi::data
