#include "test_support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <unistd.h>

namespace rbi::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() / fmt::format("{}-{}-{}", tag, ::getpid(), counter++);
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double scalar_bce(double p, double t) {
  const double q = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return -(t * std::log(q) + (1.0 - t) * std::log(1.0 - q));
}

double gaussian_weight(int dx, int dy, double sigma) {
  const int r = static_cast<int>(std::ceil(2.0 * sigma));
  double total = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) total += std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
  }
  if (std::abs(dx) > r || std::abs(dy) > r) return 0.0;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / total;
}

long long count_pixels_in_convex_polygon(const std::vector<cv::Point2d>& polygon, cv::Size size) {
  // orientation of the polygon
  double area2 = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  const double sign = area2 >= 0 ? 1.0 : -1.0;
  long long count = 0;
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      bool inside = true;
      for (std::size_t i = 0; i < polygon.size() && inside; ++i) {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % polygon.size()];
        const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        inside = sign * cross >= -1e-9;
      }
      count += inside ? 1 : 0;
    }
  }
  return count;
}

double stddev(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double ks_uniform(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = (samples[i] - lo) / (hi - lo);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

FaceRecord synthetic_face(int size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0.2f, 0.8f);
  const cv::Vec3f a(u(gen), u(gen), u(gen)), b(u(gen), u(gen), u(gen));
  FaceRecord face;
  face.image = cv::Mat(size, size, CV_32FC3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float t = static_cast<float>(x + y) / (2.0f * size);
      face.image.at<cv::Vec3f>(y, x) = a * (1.0f - t) + b * t;
    }
  }
  const double c = size / 2.0, rx = size * 0.3, ry = size * 0.35;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const double ring = i < 41 ? 1.0 : 0.5;
    const double th = 2.0 * M_PI * (i % 41) / 41.0 + (i < 41 ? 0.0 : 0.3);
    face.landmarks.emplace_back(static_cast<float>(c + ring * rx * std::cos(th)),
                                static_cast<float>(c + ring * ry * std::sin(th)));
  }
  face.bbox = {0, 0, size, size};
  face.provenance = {"synthetic", static_cast<int>(seed), Split::kTrain, "test"};
  return face;
}

std::vector<cv::Point2f> square_outline(float x0, float y0, float x1, float y1) {
  std::vector<cv::Point2f> pts;
  const float w = x1 - x0, h = y1 - y0, perimeter = 2 * (w + h);
  for (int i = 0; i < kLandmarkCount; ++i) {
    float d = perimeter * static_cast<float>(i) / kLandmarkCount;
    if (d < w) pts.emplace_back(x0 + d, y0);
    else if ((d -= w) < h) pts.emplace_back(x1, y0 + d);
    else if ((d -= h) < w) pts.emplace_back(x1 - d, y1);
    else pts.emplace_back(x0, y1 - (d - w));
  }
  return pts;
}

double max_abs_diff(const cv::Mat& a, const cv::Mat& b) {
  CV_Assert(a.size() == b.size() && a.type() == b.type());
  return cv::norm(a, b, cv::NORM_INF);
}

bool bytes_equal(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size() || a.type() != b.type()) return false;
  const cv::Mat ca = a.isContinuous() ? a : a.clone();
  const cv::Mat cb = b.isContinuous() ? b : b.clone();
  return std::equal(ca.datastart, ca.dataend, cb.datastart);
}

bool write_scripted_adapter(const fs::path& path) {
  const auto script = path.parent_path() / "make_adapter.py";
  std::ofstream(script) << R"(import sys
import torch

class Reconstructor(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.scale = torch.nn.Parameter(torch.tensor(0.9))

    @torch.jit.export
    def encode(self, x):
        identity = x.mean(dim=(2, 3))
        background = x - identity[:, :, None, None]
        return identity, background

    @torch.jit.export
    def decode(self, identity, background):
        return (background * self.scale + identity[:, :, None, None]).clamp(0.0, 1.0)

    def forward(self, x):
        i, b = self.encode(x)
        return self.decode(i, b)

torch.jit.script(Reconstructor()).save(sys.argv[1])
)";
  const auto cmd = fmt::format("python3 '{}' '{}' > /dev/null 2>&1", script.string(), path.string());
  return std::system(cmd.c_str()) == 0 && fs::exists(path);
}

}  // namespace rbi::testing
