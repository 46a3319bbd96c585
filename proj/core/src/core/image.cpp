#include "rbi/core/image.hpp"

#include <cstdint>
#include <fstream>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"

namespace rbi {

void require_color(const cv::Mat& image, std::string_view what) {
  if (image.empty() || image.type() != CV_32FC3) {
    throw ShapeError(std::string(what) + ": expected non-empty CV_32FC3 raster");
  }
}

void require_field(const cv::Mat& field, std::string_view what) {
  if (field.empty() || field.type() != CV_32FC1) {
    throw ShapeError(std::string(what) + ": expected non-empty CV_32FC1 field");
  }
}

cv::Mat clamp01(const cv::Mat& m) {
  cv::Mat out;
  cv::min(m, 1.0, out);
  cv::max(out, 0.0, out);
  return out;
}

cv::Mat read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  cv::Mat out;
  rgb.convertTo(out, CV_32FC3, 1.0 / 255.0);
  return out;
}

void write_image(const std::filesystem::path& path, const cv::Mat& rgb) {
  require_color(rgb, "write_image");
  cv::Mat u8, bgr;
  rgb.convertTo(u8, CV_8UC3, 255.0);
  cv::cvtColor(u8, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write " + path.string());
}

void write_raster16(const std::filesystem::path& path, const cv::Mat& raster) {
  if (raster.depth() != CV_32F || (raster.channels() != 1 && raster.channels() != 3)) {
    throw ShapeError("write_raster16: expected 1- or 3-channel float raster");
  }
  cv::Mat u16;
  raster.convertTo(u16, CV_16U, 65535.0);
  if (u16.channels() == 3) cv::cvtColor(u16, u16, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), u16)) throw DataError("cannot write " + path.string());
}

cv::Mat read_raster16(const std::filesystem::path& path) {
  cv::Mat u16 = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (u16.empty()) throw DataError("cannot decode raster " + path.string());
  if (u16.channels() == 3) cv::cvtColor(u16, u16, cv::COLOR_BGR2RGB);
  cv::Mat out;
  u16.convertTo(out, CV_MAKETYPE(CV_32F, u16.channels()), 1.0 / 65535.0);
  return out;
}

namespace {
constexpr std::uint32_t kRawMagic = 0x52424946;  // "RBIF"
}

void write_raw(const std::filesystem::path& path, const cv::Mat& raster) {
  if (raster.depth() != CV_32F) throw ShapeError("write_raw: expected float raster");
  cv::Mat dense = raster.isContinuous() ? raster : raster.clone();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::int32_t header[3] = {dense.rows, dense.cols, dense.channels()};
  out.write(reinterpret_cast<const char*>(&kRawMagic), sizeof kRawMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(dense.data),
            static_cast<std::streamsize>(dense.total() * dense.elemSize()));
  if (!out) throw DataError("short write " + path.string());
}

cv::Mat read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::uint32_t magic = 0;
  std::int32_t header[3] = {};
  in.read(reinterpret_cast<char*>(&magic), sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || magic != kRawMagic || header[0] <= 0 || header[1] <= 0 || header[2] <= 0 ||
      header[2] > 4) {
    throw DataError("corrupt raster " + path.string());
  }
  cv::Mat out(header[0], header[1], CV_MAKETYPE(CV_32F, header[2]));
  in.read(reinterpret_cast<char*>(out.data), static_cast<std::streamsize>(out.total() * out.elemSize()));
  if (!in) throw DataError("truncated raster " + path.string());
  return out;
}

cv::Mat downsample_half(const cv::Mat& field) {
  const cv::Size target((field.cols + 1) / 2, (field.rows + 1) / 2);
  cv::Mat out;
  cv::resize(field, out, target, 0, 0, cv::INTER_AREA);
  return out;
}

}  // namespace rbi
