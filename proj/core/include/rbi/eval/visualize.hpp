#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/model/mfrn.hpp"
#include "rbi/synth/face_record.hpp"

namespace rbi::eval {

inline constexpr int kPanelMargin = 8;
inline constexpr int kCaptionHeight = 24;

// Field upsampled to the image size, colour-mapped and alpha-blended.
cv::Mat heat_overlay(const cv::Mat& rgb, const cv::Mat& field, double alpha = 0.5);

// [input | edge overlay | map overlay] with a caption strip. Width is
// 3 W + 4 margins, height H + 2 margins + caption.
cv::Mat make_panel(const cv::Mat& rgb, const cv::Mat& edge, const cv::Mat& map, double p_fake,
                   const std::string& caption);

// File stem from a sample id (path separators and spaces replaced).
std::string panel_name(const std::string& sample_id);

// Writes <out_dir>/<panel_name(id)>.png for each face; returns the paths.
std::vector<std::filesystem::path> visualize(model::Mfrn& model, const std::vector<FaceRecord>& faces,
                                             const std::vector<std::string>& ids,
                                             const std::filesystem::path& out_dir);

}  // namespace rbi::eval
