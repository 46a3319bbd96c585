#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/synth/face_record.hpp"

namespace rbi::data {

// n evenly spaced indices over [0, frame_count - 1] with both endpoints;
// n == 1 gives the middle frame. Videos shorter than n return every frame and warn.
std::vector<int> sample_frames(int frame_count, int n);

// Index of the chosen box. With a mask: largest intersection with mask > 0.5;
// without: largest area. Ties go to the lowest index. nullopt for an empty list.
std::optional<std::size_t> resolve_multi_face(const std::vector<BBox>& boxes, const cv::Mat* mask = nullptr);

}  // namespace rbi::data
