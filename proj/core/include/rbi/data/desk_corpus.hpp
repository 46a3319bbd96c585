#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/core/rng.hpp"
#include "rbi/data/crop.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/rbi_generator.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::data {

// Identity of a procedural face; frames of one video share it.
struct ToyIdentity {
  cv::Vec3f skin;
  cv::Vec3f background_a;
  cv::Vec3f background_b;
  cv::Vec3f lips;
  cv::Vec3f brows;
  double rx = 0.25;  // fraction of the frame size
  double ry = 0.3;
  double eye_gap = 0.40;
  double mouth_width = 0.35;
  double shade = 0.1;
};

struct ToyFrame {
  cv::Mat image;  // CV_32FC3 RGB in [0, 1]
  std::vector<cv::Point2f> landmarks;
  BBox bbox;
};

struct ToyRenderOptions {
  int frame_size = 96;
  double jitter = 0.03;       // centre jitter, fraction of the frame
  double rotation_deg = 6.0;  // max in-plane rotation
  double noise_sigma = 0.02;  // sensor noise
};

ToyIdentity sample_identity(Rng& rng);
// Deterministic given (identity, rng state).
ToyFrame render_toy_frame(const ToyIdentity& identity, Rng& rng, const ToyRenderOptions& options = {});

// n cropped faces, one identity each, split from `seed`.
std::vector<FaceRecord> make_toy_faces(int n, std::uint64_t seed, const CropOptions& crop = {0.125, 64},
                                       const ToyRenderOptions& render = {});

struct DeskCorpusOptions {
  std::string dataset = "desk";
  int genuine_videos = 20;
  int fake_videos = 0;  // need an adapter
  int frames_per_video = 8;
  double missing_face_probability = 0.0;  // empty sidecar for that frame
  std::uint64_t seed = 0;
  ToyRenderOptions render;
  synth::SynthConfig synth;
};

struct DeskCorpusSummary {
  int videos = 0;
  int frames = 0;
  int missing_faces = 0;
};

// Writes <root>/<dataset>/genuine/<id>/ and <root>/<dataset>/rbi/<id>/ with
// frame PNGs, annotation sidecars and, for fakes, blending masks.
DeskCorpusSummary write_desk_corpus(const std::filesystem::path& root, const DeskCorpusOptions& options,
                                    const synth::ReconstructorAdapter* adapter = nullptr);

}  // namespace rbi::data
