#include "rbi/data/detection.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rbi/core/error.hpp"

namespace rbi::data {

std::filesystem::path sidecar_path(const std::filesystem::path& frame_path) {
  auto p = frame_path;
  return p.replace_extension(".json");
}

std::filesystem::path mask_path(const std::filesystem::path& frame_path) {
  auto p = frame_path;
  return p.replace_extension(".mask.png");
}

BBox clamp_to_frame(const BBox& box, int width, int height) {
  return {std::clamp(box.x0, 0, width), std::clamp(box.y0, 0, height), std::clamp(box.x1, 0, width),
          std::clamp(box.y1, 0, height)};
}

std::vector<FaceAnnotation> read_annotations(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) return {};
  nlohmann::json j;
  try {
    in >> j;
    std::vector<FaceAnnotation> faces;
    for (const auto& f : j.at("faces")) {
      const auto b = f.at("bbox").get<std::vector<int>>();
      const auto lm = f.at("landmarks").get<std::vector<float>>();
      if (b.size() != 4 || lm.size() != 2 * kLandmarkCount) {
        throw DataError(fmt::format("annotation '{}': bbox needs 4 values and landmarks {}", sidecar.string(),
                                    2 * kLandmarkCount));
      }
      FaceAnnotation a;
      a.bbox = {b[0], b[1], b[2], b[3]};
      for (std::size_t i = 0; i < lm.size(); i += 2) a.landmarks.emplace_back(lm[i], lm[i + 1]);
      faces.push_back(std::move(a));
    }
    return faces;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("annotation '{}' is malformed: {}", sidecar.string(), e.what()));
  }
}

void write_annotations(const std::filesystem::path& sidecar, const std::vector<FaceAnnotation>& faces) {
  nlohmann::json j;
  j["faces"] = nlohmann::json::array();
  for (const auto& f : faces) {
    std::vector<float> lm;
    for (const auto& p : f.landmarks) {
      lm.push_back(p.x);
      lm.push_back(p.y);
    }
    j["faces"].push_back({{"bbox", {f.bbox.x0, f.bbox.y0, f.bbox.x1, f.bbox.y1}}, {"landmarks", lm}});
  }
  std::ofstream out(sidecar);
  if (!out) throw DataError(fmt::format("cannot write annotation '{}'", sidecar.string()));
  out << j.dump() << '\n';
}

std::vector<BBox> SidecarDetector::detect(const std::filesystem::path& frame_path, const cv::Mat& frame) const {
  std::vector<BBox> boxes;
  for (const auto& a : read_annotations(sidecar_path(frame_path))) {
    const auto b = clamp_to_frame(a.bbox, frame.cols, frame.rows);
    if (b.valid()) boxes.push_back(b);
  }
  return boxes;
}

std::vector<cv::Point2f> SidecarDetector::landmarks(const std::filesystem::path& frame_path, const cv::Mat& frame,
                                                    const BBox& bbox) const {
  for (const auto& a : read_annotations(sidecar_path(frame_path))) {
    if (clamp_to_frame(a.bbox, frame.cols, frame.rows) == bbox) return a.landmarks;
  }
  throw DataError(fmt::format("no landmarks for the selected box in '{}'", frame_path.string()));
}

}  // namespace rbi::data
