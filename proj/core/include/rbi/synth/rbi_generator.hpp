#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>
#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/synth/augment.hpp"
#include "rbi/synth/blend.hpp"
#include "rbi/synth/deform.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/hull_mask.hpp"
#include "rbi/synth/reconstruct.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::synth {

struct SynthConfig {
  NoiseConfig noise;
  AssignConfig assign;
  HullConfig hull;
  DeformConfig deform;
  MaskBlurConfig blur;
  Range alpha{0.5, 1.0};
};

struct GenerationLog {
  std::uint64_t seed = 0;
  NoiseLog noise;
  AugmentedSide augmented = AugmentedSide::kNone;
  bool roles_swapped = false;
  std::optional<SstaLog> ssta;
  HullVariant variant = HullVariant::kFull;
  DeformLog deform;
  double blur_sigma = 0.0;
  double alpha = 1.0;
};

struct BlendedSample {
  std::string id;
  cv::Mat image;        // I_R, CV_32FC3 in [0, 1]
  cv::Mat mask_target;  // M at half resolution
  cv::Mat edge_target;  // E at half resolution
  Label label = Label::kFake;
  GenerationLog meta;
};

// reconstruct -> assign_source_target -> build_hull_mask ->
// deform_mask_and_source -> blur_mask -> blend -> edge_from_mask.
// Every stage draws from its own labelled child of `rng`.
BlendedSample generate_rbi(const FaceRecord& face, const ReconstructorAdapter& adapter, Rng& rng,
                           const SynthConfig& cfg);

// Genuine counterpart: untouched image, all-zero targets.
BlendedSample make_genuine_sample(const FaceRecord& face);

void to_json(nlohmann::json& j, const GenerationLog& log);

}  // namespace rbi::synth
