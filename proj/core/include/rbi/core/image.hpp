#pragma once

#include <filesystem>
#include <string_view>

#include <opencv2/core.hpp>

namespace rbi {

// Colour rasters are CV_32FC3 in RGB channel order with values in [0, 1].
// Scalar fields (masks, edges, predictions) are CV_32FC1.

void require_color(const cv::Mat& image, std::string_view what);
void require_field(const cv::Mat& field, std::string_view what);

cv::Mat clamp01(const cv::Mat& m);

// 8-bit file -> RGB float raster.
cv::Mat read_image(const std::filesystem::path& path);
// Quantises to 8 bits.
void write_image(const std::filesystem::path& path, const cv::Mat& rgb);

// 16-bit PNG container for rasters in [0, 1]; 1 or 3 channels.
void write_raster16(const std::filesystem::path& path, const cv::Mat& raster);
cv::Mat read_raster16(const std::filesystem::path& path);

// Exact float raster container (header + raw little-endian floats).
void write_raw(const std::filesystem::path& path, const cv::Mat& raster);
cv::Mat read_raw(const std::filesystem::path& path);

// 2x2 box downsample to ceil(H/2) x ceil(W/2), area-weighted at odd edges.
cv::Mat downsample_half(const cv::Mat& field);

}  // namespace rbi
