#include "rbi/synth/rbi_generator.hpp"

#include <nlohmann/json.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi::synth {

BlendedSample generate_rbi(const FaceRecord& face, const ReconstructorAdapter& adapter, Rng& rng,
                           const SynthConfig& cfg) {
  if (face.landmarks.empty()) throw DataError("generate_rbi: face " + face.id() + " has no landmarks");
  face.validate();

  BlendedSample out;
  out.id = face.id();
  out.label = Label::kFake;
  GenerationLog& log = out.meta;
  log.seed = rng.seed();

  Rng rec_rng = rng.split("reconstruct");
  auto rec = reconstruct(face, adapter, rec_rng, cfg.noise);
  log.noise = rec.noise;

  Rng assign_rng = rng.split("assign");
  auto st = assign_source_target(face.image, rec.image, assign_rng, cfg.assign);
  log.augmented = st.augmented;
  log.roles_swapped = st.roles_swapped;
  log.ssta = st.ssta_log;

  Rng hull_rng = rng.split("hull");
  auto hull = build_hull_mask(face.landmarks, face.image.size(), hull_rng, cfg.hull);
  log.variant = hull.variant;

  Rng deform_rng = rng.split("deform");
  auto warped = deform_mask_and_source(hull.field, st.source, deform_rng, cfg.deform);
  log.deform = warped.log;

  Rng blur_rng = rng.split("blur");
  log.blur_sigma = cfg.blur.sigma.sample(blur_rng);
  cv::Mat mask = blur_mask(warped.mask, log.blur_sigma);

  Rng alpha_rng = rng.split("alpha");
  log.alpha = cfg.alpha.sample(alpha_rng);
  out.image = blend(warped.source, st.target, mask, log.alpha);

  // The region actually replaced is alpha * M, but the supervision target is
  // M itself, as are its edges.
  out.mask_target = downsample_half(mask);
  out.edge_target = downsample_half(edge_from_mask(mask));
  return out;
}

BlendedSample make_genuine_sample(const FaceRecord& face) {
  require_color(face.image, "make_genuine_sample");
  BlendedSample out;
  out.id = face.id();
  out.label = Label::kGenuine;
  out.image = face.image.clone();
  const cv::Size half((face.image.cols + 1) / 2, (face.image.rows + 1) / 2);
  out.mask_target = cv::Mat::zeros(half, CV_32FC1);
  out.edge_target = cv::Mat::zeros(half, CV_32FC1);
  return out;
}

void to_json(nlohmann::json& j, const GenerationLog& log) {
  auto side = [](AugmentedSide s) {
    switch (s) {
      case AugmentedSide::kNone: return "none";
      case AugmentedSide::kSource: return "source";
      case AugmentedSide::kTarget: return "target";
    }
    return "none";
  };
  j = nlohmann::json{{"seed", log.seed},
                     {"noise", {{"applied", log.noise.applied}, {"sigma", log.noise.sigma}}},
                     {"augmented", side(log.augmented)},
                     {"roles_swapped", log.roles_swapped},
                     {"ssta", log.ssta ? nlohmann::json(*log.ssta) : nlohmann::json(nullptr)},
                     {"hull_variant", to_string(log.variant)},
                     {"deform", log.deform},
                     {"blur_sigma", log.blur_sigma},
                     {"alpha", log.alpha}};
}

}  // namespace rbi::synth
