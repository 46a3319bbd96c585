#pragma once

#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::synth {

struct NoiseConfig {
  double probability = 0.5;
  Range sigma{0.1, 0.3};
};

struct NoiseLog {
  bool applied = false;
  double sigma = 0.0;
};

struct NoisyVector {
  std::vector<float> values;
  NoiseLog log;
};

// With `probability`, adds elementwise N(0, sigma^2) noise with sigma drawn
// from cfg.sigma; otherwise returns the input unchanged.
NoisyVector inject_bg_noise(std::span<const float> bg_vec, Rng& rng, const NoiseConfig& cfg);

struct Reconstruction {
  cv::Mat image;
  NoiseLog noise;
};

// decode(encode(I_G)) with optional background-code perturbation, clipped to
// [0, 1]. Adapter failures surface as SynthesisError naming the adapter.
Reconstruction reconstruct(const FaceRecord& face, const ReconstructorAdapter& adapter, Rng& rng,
                           const NoiseConfig& cfg);

}  // namespace rbi::synth
