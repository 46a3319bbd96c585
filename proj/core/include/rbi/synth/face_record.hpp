#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

namespace rbi {

enum class Label { kGenuine = 0, kFake = 1 };
enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

inline constexpr int kLandmarkCount = 81;

// Pixel box, half-open: [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return valid() ? 1LL * width() * height() : 0; }
  bool valid() const { return x1 > x0 && y1 > y0; }
  cv::Rect rect() const { return {x0, y0, width(), height()}; }
  bool operator==(const BBox&) const = default;
};

struct Provenance {
  std::string video_id;
  int frame_index = 0;
  Split split = Split::kTrain;
  std::string dataset;
};

// A cropped face. Landmarks are continuous pixel coordinates (origin at the
// top-left corner of the top-left pixel).
struct FaceRecord {
  cv::Mat image;  // CV_32FC3 RGB in [0, 1]
  std::vector<cv::Point2f> landmarks;
  BBox bbox;
  Label label = Label::kGenuine;
  Provenance provenance;

  std::string id() const;
  // Throws DataError / ShapeError on violated invariants.
  void validate() const;
};

}  // namespace rbi
