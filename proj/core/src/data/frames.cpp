#include "rbi/data/frames.hpp"

#include <fmt/format.h>

#include <cmath>

#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"

namespace rbi::data {

std::vector<int> sample_frames(int frame_count, int n) {
  if (n < 1) throw ParameterError(fmt::format("sample_frames: n must be at least 1, got {}", n));
  if (frame_count < 1) throw DataError("sample_frames: video has no frames");
  std::vector<int> out;
  if (frame_count < n) {
    log::warn("video has {} frames, fewer than the {} requested", frame_count, n);
    for (int i = 0; i < frame_count; ++i) out.push_back(i);
    return out;
  }
  if (n == 1) return {(frame_count - 1) / 2};
  out.reserve(static_cast<std::size_t>(n));
  const double step = static_cast<double>(frame_count - 1) / (n - 1);
  for (int i = 0; i < n; ++i) out.push_back(static_cast<int>(std::nearbyint(i * step)));
  return out;
}

std::optional<std::size_t> resolve_multi_face(const std::vector<BBox>& boxes, const cv::Mat* mask) {
  if (boxes.empty()) return std::nullopt;
  cv::Mat binary;
  if (mask != nullptr && !mask->empty()) {
    cv::Mat m;
    mask->convertTo(m, CV_32F);
    if (m.channels() != 1) throw ShapeError("resolve_multi_face: mask must be single-channel");
    binary = m > 0.5f;
  }
  std::size_t best = 0;
  long long best_score = -1;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    long long score = 0;
    if (!binary.empty()) {
      const cv::Rect r = boxes[i].rect() & cv::Rect(0, 0, binary.cols, binary.rows);
      score = r.area() > 0 ? cv::countNonZero(binary(r)) : 0;
    } else {
      score = boxes[i].area();
    }
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace rbi::data
