#include "rbi/synth/hull_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/synth/face_record.hpp"

namespace rbi::synth {

namespace {

// 81-point layout: 0-16 jaw, 17-21 / 22-26 brows, 27-35 nose,
// 36-41 / 42-47 eyes, 48-67 mouth, 68-80 forehead.
std::vector<int> index_range(int first, int last) {
  std::vector<int> out(static_cast<std::size_t>(last - first + 1));
  std::iota(out.begin(), out.end(), first);
  return out;
}

std::vector<cv::Point2f> gather(std::span<const cv::Point2f> pts, const std::vector<int>& idx) {
  std::vector<cv::Point2f> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(pts[static_cast<std::size_t>(i)]);
  return out;
}

cv::Mat hull_field(std::span<const cv::Point2f> pts, cv::Size size) {
  return rasterize_convex_polygon(convex_hull(pts), size);
}

}  // namespace

std::string_view to_string(HullVariant variant) {
  switch (variant) {
    case HullVariant::kFull: return "full";
    case HullVariant::kLowerFace: return "lower-face";
    case HullVariant::kComponents: return "components";
    case HullVariant::kDilated: return "dilated";
  }
  return "full";
}

HullVariant parse_hull_variant(std::string_view text) {
  if (text == "full") return HullVariant::kFull;
  if (text == "lower-face") return HullVariant::kLowerFace;
  if (text == "components") return HullVariant::kComponents;
  if (text == "dilated") return HullVariant::kDilated;
  throw ConfigError(fmt::format("unknown hull variant '{}'", text));
}

double polygon_area(std::span<const cv::Point2f> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % n];
    twice += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
  }
  return std::abs(twice) / 2.0;
}

std::vector<cv::Point2f> convex_hull(std::span<const cv::Point2f> points) {
  if (points.empty()) return {};
  std::vector<cv::Point2f> in(points.begin(), points.end());
  std::vector<cv::Point2f> hull;
  cv::convexHull(in, hull, /*clockwise=*/false);
  return hull;
}

cv::Mat rasterize_convex_polygon(std::span<const cv::Point2f> polygon, cv::Size size) {
  cv::Mat out = cv::Mat::zeros(size, CV_32FC1);
  if (polygon.size() < 3) return out;
  float ymin = polygon[0].y, ymax = polygon[0].y;
  for (const auto& p : polygon) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_lo = std::max(0, static_cast<int>(std::floor(ymin - 0.5f)));
  const int row_hi = std::min(size.height - 1, static_cast<int>(std::ceil(ymax - 0.5f)));
  constexpr double kEps = 1e-9;
  const std::size_t n = polygon.size();
  for (int row = row_lo; row <= row_hi; ++row) {
    const double yc = row + 0.5;
    double xl = std::numeric_limits<double>::infinity();
    double xr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const cv::Point2d a = polygon[i];
      const cv::Point2d b = polygon[(i + 1) % n];
      const double lo = std::min(a.y, b.y), hi = std::max(a.y, b.y);
      if (yc < lo - kEps || yc > hi + kEps) continue;
      if (std::abs(b.y - a.y) < kEps) {
        xl = std::min({xl, a.x, b.x});
        xr = std::max({xr, a.x, b.x});
      } else {
        const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
    }
    if (xl > xr) continue;
    // pixel centre x + 0.5 in [xl, xr]
    const int col_lo = std::max(0, static_cast<int>(std::ceil(xl - 0.5 - kEps)));
    const int col_hi = std::min(size.width - 1, static_cast<int>(std::floor(xr - 0.5 + kEps)));
    float* dst = out.ptr<float>(row);
    for (int col = col_lo; col <= col_hi; ++col) dst[col] = 1.0f;
  }
  return out;
}

BlendMask build_hull_mask(std::span<const cv::Point2f> landmarks, cv::Size size, Rng& rng,
                          const HullConfig& cfg) {
  if (landmarks.size() != static_cast<std::size_t>(kLandmarkCount)) {
    throw DataError(fmt::format("build_hull_mask: expected {} landmarks, got {}", kLandmarkCount, landmarks.size()));
  }
  if (cfg.variants.empty()) throw ConfigError("build_hull_mask: empty hull variant list");
  const auto full_hull = convex_hull(landmarks);
  if (full_hull.size() < 3 || polygon_area(full_hull) <= 1e-6) {
    throw DataError("build_hull_mask: degenerate landmarks (hull area is zero)");
  }

  BlendMask mask;
  mask.variant = cfg.variants[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cfg.variants.size()) - 1))];
  switch (mask.variant) {
    case HullVariant::kFull:
      mask.field = rasterize_convex_polygon(full_hull, size);
      break;
    case HullVariant::kLowerFace: {
      auto idx = index_range(0, 16);
      idx.push_back(29);
      mask.field = hull_field(gather(landmarks, idx), size);
      break;
    }
    case HullVariant::kComponents: {
      auto left = index_range(17, 21);
      for (int i : index_range(36, 41)) left.push_back(i);
      auto right = index_range(22, 26);
      for (int i : index_range(42, 47)) right.push_back(i);
      mask.field = cv::Mat::zeros(size, CV_32FC1);
      for (const auto& group : {left, right, index_range(27, 35), index_range(48, 59)}) {
        cv::max(mask.field, hull_field(gather(landmarks, group), size), mask.field);
      }
      break;
    }
    case HullVariant::kDilated: {
      const auto [xmin, xmax] = std::minmax_element(landmarks.begin(), landmarks.end(),
                                                    [](const auto& a, const auto& b) { return a.x < b.x; });
      const auto [ymin, ymax] = std::minmax_element(landmarks.begin(), landmarks.end(),
                                                    [](const auto& a, const auto& b) { return a.y < b.y; });
      const double extent = std::max(xmax->x - xmin->x, ymax->y - ymin->y);
      const double frac = cfg.dilation_frac.sample(rng);
      const int radius = std::max(1, static_cast<int>(std::lround(frac * extent)));
      const auto kernel = cv::getStructuringElement(cv::MORPH_ELLIPSE, cv::Size(2 * radius + 1, 2 * radius + 1));
      cv::dilate(rasterize_convex_polygon(full_hull, size), mask.field, kernel);
      break;
    }
  }
  if (cv::countNonZero(mask.field) == 0) {
    throw DataError(fmt::format("build_hull_mask: '{}' hull covers no pixels", to_string(mask.variant)));
  }
  return mask;
}

}  // namespace rbi::synth
