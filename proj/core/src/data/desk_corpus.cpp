#include "rbi/data/desk_corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/data/detection.hpp"

namespace rbi::data {

namespace fs = std::filesystem;

namespace {

cv::Vec3f random_color(Rng& rng, cv::Vec3f base, double spread) {
  cv::Vec3f c;
  for (int i = 0; i < 3; ++i) c[i] = static_cast<float>(std::clamp(base[i] + rng.uniform(-spread, spread), 0.0, 1.0));
  return c;
}

// Landmarks in face units: x in [-1, 1] across the face, y in [-1, 1] top to bottom.
std::vector<cv::Point2d> unit_landmarks(const ToyIdentity& id) {
  constexpr double pi = std::numbers::pi;
  std::vector<cv::Point2d> p;
  p.reserve(kLandmarkCount);
  for (int k = 0; k <= 16; ++k) {  // jaw
    const double t = pi * k / 16.0;
    p.emplace_back(-std::cos(t), 0.05 + 0.95 * std::sin(t));
  }
  const double eye_x = id.eye_gap;
  for (int side = -1; side <= 1; side += 2) {  // brows
    for (int k = 0; k < 5; ++k) {
      const double u = k / 4.0;
      const double x = side < 0 ? -eye_x - 0.25 + 0.5 * u : eye_x - 0.25 + 0.5 * u;
      p.emplace_back(x, -0.45 - 0.06 * std::sin(pi * u));
    }
  }
  for (int k = 0; k < 4; ++k) p.emplace_back(0.0, -0.3 + 0.13 * k);  // nose bridge
  for (int k = 0; k < 5; ++k) p.emplace_back(-0.16 + 0.08 * k, 0.2 + 0.03 * std::sin(pi * k / 4.0));
  for (int side = -1; side <= 1; side += 2) {  // eyes
    for (int k = 0; k < 6; ++k) {
      const double t = pi + 2.0 * pi * k / 6.0;
      p.emplace_back(side * eye_x + 0.17 * std::cos(t), -0.22 + 0.07 * std::sin(t));
    }
  }
  for (int k = 0; k < 12; ++k) {  // outer lips
    const double t = pi + 2.0 * pi * k / 12.0;
    p.emplace_back(id.mouth_width * std::cos(t), 0.5 + 0.12 * std::sin(t));
  }
  for (int k = 0; k < 8; ++k) {  // inner lips
    const double t = pi + 2.0 * pi * k / 8.0;
    p.emplace_back(0.7 * id.mouth_width * std::cos(t), 0.5 + 0.04 * std::sin(t));
  }
  for (int k = 0; k < 13; ++k) {  // forehead
    const double t = pi * (k + 1) / 14.0;
    p.emplace_back(-std::cos(t) * 0.95, -0.05 - 0.95 * std::sin(t));
  }
  return p;
}

}  // namespace

ToyIdentity sample_identity(Rng& rng) {
  ToyIdentity id;
  const double tone = rng.uniform(0.35, 0.85);
  id.skin = random_color(rng, {static_cast<float>(tone + 0.08), static_cast<float>(tone - 0.05),
                               static_cast<float>(tone - 0.15)},
                         0.05);
  id.background_a = random_color(rng, {0.5f, 0.5f, 0.5f}, 0.45);
  id.background_b = random_color(rng, {0.5f, 0.5f, 0.5f}, 0.45);
  id.lips = random_color(rng, {0.7f, 0.25f, 0.3f}, 0.1);
  id.brows = random_color(rng, {0.2f, 0.15f, 0.1f}, 0.1);
  id.rx = rng.uniform(0.22, 0.27);
  id.ry = rng.uniform(0.28, 0.33);
  id.eye_gap = rng.uniform(0.35, 0.45);
  id.mouth_width = rng.uniform(0.28, 0.4);
  id.shade = rng.uniform(0.0, 0.2);
  return id;
}

ToyFrame render_toy_frame(const ToyIdentity& id, Rng& rng, const ToyRenderOptions& o) {
  if (o.frame_size < 16) throw ParameterError("toy frame size must be at least 16");
  const int s = o.frame_size;
  const double cx = s * (0.5 + rng.uniform(-o.jitter, o.jitter));
  const double cy = s * (0.5 + rng.uniform(-o.jitter, o.jitter));
  const double rx = id.rx * s;
  const double ry = id.ry * s;
  const double angle = rng.uniform(-o.rotation_deg, o.rotation_deg) * std::numbers::pi / 180.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto to_px = [&](cv::Point2d u) {
    const double x = u.x * rx, y = u.y * ry;
    return cv::Point2f(static_cast<float>(cx + ca * x - sa * y), static_cast<float>(cy + sa * x + ca * y));
  };

  ToyFrame f;
  f.image.create(s, s, CV_32FC3);
  for (int y = 0; y < s; ++y) {
    const float t = static_cast<float>(y) / static_cast<float>(s - 1);
    const cv::Vec3f row = id.background_a * (1.0f - t) + id.background_b * t;
    for (int x = 0; x < s; ++x) f.image.at<cv::Vec3f>(y, x) = row;
  }
  const auto scalar = [](cv::Vec3f c) { return cv::Scalar(c[0], c[1], c[2]); };
  const cv::Point centre(static_cast<int>(std::lround(cx * 16)), static_cast<int>(std::lround(cy * 16)));
  const double deg = angle * 180.0 / std::numbers::pi;
  auto ellipse = [&](cv::Point2d c_unit, double ax, double ay, cv::Vec3f colour) {
    const auto c = to_px(c_unit);
    cv::ellipse(f.image, cv::Point(static_cast<int>(std::lround(c.x * 16)), static_cast<int>(std::lround(c.y * 16))),
                cv::Size(static_cast<int>(std::lround(ax * rx * 16)), static_cast<int>(std::lround(ay * ry * 16))), deg,
                0, 360, scalar(colour), cv::FILLED, cv::LINE_AA, 4);
  };
  cv::ellipse(f.image, centre, cv::Size(static_cast<int>(std::lround(rx * 16)), static_cast<int>(std::lround(ry * 16))),
              deg, 0, 360, scalar(id.skin), cv::FILLED, cv::LINE_AA, 4);
  // Side shading across the face.
  cv::Mat shade(s, s, CV_32FC1);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double r2 = dx * dx + dy * dy;
      shade.at<float>(y, x) = r2 < 1.0 ? static_cast<float>(1.0 - id.shade * r2 - 0.5 * id.shade * dx) : 1.0f;
    }
  }
  std::vector<cv::Mat> ch;
  cv::split(f.image, ch);
  for (auto& c : ch) c = c.mul(shade);
  cv::merge(ch, f.image);

  const auto lm_unit = unit_landmarks(id);
  for (int side = -1; side <= 1; side += 2) {
    ellipse({side * id.eye_gap, -0.22}, 0.17, 0.075, {0.95f, 0.95f, 0.92f});
    ellipse({side * id.eye_gap, -0.22}, 0.07, 0.06, {0.2f, 0.15f, 0.1f});
    std::vector<cv::Point> brow;
    for (int k = 0; k < 5; ++k) {
      const auto q = to_px(lm_unit[static_cast<std::size_t>(side < 0 ? 17 + k : 22 + k)]);
      brow.emplace_back(static_cast<int>(std::lround(q.x * 16)), static_cast<int>(std::lround(q.y * 16)));
    }
    cv::polylines(f.image, brow, false, scalar(id.brows), std::max(1, s / 48), cv::LINE_AA, 4);
  }
  ellipse({0.0, 0.5}, id.mouth_width, 0.11, id.lips);
  {
    std::vector<cv::Point> nose;
    for (int k = 27; k <= 30; ++k) {
      const auto q = to_px(lm_unit[static_cast<std::size_t>(k)]);
      nose.emplace_back(static_cast<int>(std::lround(q.x * 16)), static_cast<int>(std::lround(q.y * 16)));
    }
    cv::polylines(f.image, nose, false, scalar(id.skin * 0.75f), 1, cv::LINE_AA, 4);
  }

  // Optics blur then sensor noise.
  cv::GaussianBlur(f.image, f.image, cv::Size(3, 3), 0.6);
  cv::Mat noise(s, s, CV_32FC3);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      auto& n = noise.at<cv::Vec3f>(y, x);
      for (int c = 0; c < 3; ++c) n[c] = static_cast<float>(rng.normal(0.0, o.noise_sigma));
    }
  }
  f.image = clamp01(f.image + noise);

  float x0 = static_cast<float>(s), y0 = static_cast<float>(s), x1 = 0.f, y1 = 0.f;
  for (const auto& u : lm_unit) {
    auto q = to_px(u);
    q.x = std::clamp(q.x, 0.0f, static_cast<float>(s));
    q.y = std::clamp(q.y, 0.0f, static_cast<float>(s));
    f.landmarks.push_back(q);
    x0 = std::min(x0, q.x);
    y0 = std::min(y0, q.y);
    x1 = std::max(x1, q.x);
    y1 = std::max(y1, q.y);
  }
  f.bbox = {static_cast<int>(std::floor(x0)), static_cast<int>(std::floor(y0)), static_cast<int>(std::ceil(x1)),
            static_cast<int>(std::ceil(y1))};
  return f;
}

std::vector<FaceRecord> make_toy_faces(int n, std::uint64_t seed, const CropOptions& crop,
                                       const ToyRenderOptions& render) {
  if (n < 0) throw ParameterError("face count must be non-negative");
  std::vector<FaceRecord> faces;
  faces.reserve(static_cast<std::size_t>(n));
  const Rng root(seed);
  for (int i = 0; i < n; ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    Rng id_rng = rng.split("identity");
    Rng frame_rng = rng.split("frame");
    const auto id = sample_identity(id_rng);
    const auto frame = render_toy_frame(id, frame_rng, render);
    auto c = crop_and_resize(frame.image, frame.bbox, frame.landmarks, crop);
    const auto lim = static_cast<float>(crop.size);
    for (auto& p : c.landmarks) {
      p.x = std::clamp(p.x, 0.0f, lim);
      p.y = std::clamp(p.y, 0.0f, lim);
    }
    FaceRecord face;
    face.image = c.image;
    face.landmarks = std::move(c.landmarks);
    face.bbox = frame.bbox;
    face.label = Label::kGenuine;
    face.provenance = {fmt::format("toy{:05d}", i), 0, Split::kTrain, "desk"};
    faces.push_back(std::move(face));
  }
  return faces;
}

DeskCorpusSummary write_desk_corpus(const fs::path& root, const DeskCorpusOptions& o,
                                    const synth::ReconstructorAdapter* adapter) {
  if (o.genuine_videos < 0 || o.fake_videos < 0 || o.frames_per_video < 1) {
    throw ConfigError("desk corpus needs non-negative video counts and at least one frame per video");
  }
  if (o.fake_videos > 0 && adapter == nullptr) throw ConfigError("fake desk videos need a reconstructor adapter");
  DeskCorpusSummary summary;
  const Rng root_rng(o.seed);
  const int total = o.genuine_videos + o.fake_videos;
  for (int v = 0; v < total; ++v) {
    const bool fake = v >= o.genuine_videos;
    const auto vid = fmt::format("{}{:04d}", fake ? "rbi" : "gen", fake ? v - o.genuine_videos : v);
    const fs::path dir = root / o.dataset / (fake ? "rbi" : "genuine") / vid;
    fs::create_directories(dir);
    Rng vrng = root_rng.split(static_cast<std::uint64_t>(v));
    Rng id_rng = vrng.split("identity");
    const auto id = sample_identity(id_rng);
    for (int k = 0; k < o.frames_per_video; ++k) {
      Rng frng = vrng.split(static_cast<std::uint64_t>(k));
      Rng render_rng = frng.split("render");
      auto frame = render_toy_frame(id, render_rng, o.render);
      const auto fpath = dir / fmt::format("{:06d}.png", k);
      cv::Mat image = frame.image;
      if (fake) {
        FaceRecord face;
        face.image = frame.image;
        face.landmarks = frame.landmarks;
        face.bbox = frame.bbox;
        Rng srng = frng.split("synth");
        // Full-resolution mask comes from the returned half-size target.
        auto sample = synth::generate_rbi(face, *adapter, srng, o.synth);
        image = sample.image;
        cv::Mat mask;
        cv::resize(sample.mask_target, mask, image.size(), 0, 0, cv::INTER_LINEAR);
        cv::Mat mask3;
        cv::merge(std::vector<cv::Mat>{mask, mask, mask}, mask3);
        write_image(mask_path(fpath), mask3);
      }
      write_image(fpath, image);
      Rng miss_rng = frng.split("missing");
      std::vector<FaceAnnotation> faces;
      if (miss_rng.bernoulli(o.missing_face_probability)) {
        ++summary.missing_faces;
      } else {
        faces.push_back({frame.bbox, frame.landmarks});
      }
      write_annotations(sidecar_path(fpath), faces);
      ++summary.frames;
    }
    ++summary.videos;
  }
  return summary;
}

}  // namespace rbi::data
