#include "rbi/synth/reconstruct.hpp"

#include <cmath>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi::synth {

NoisyVector inject_bg_noise(std::span<const float> bg_vec, Rng& rng, const NoiseConfig& cfg) {
  NoisyVector out;
  out.values.assign(bg_vec.begin(), bg_vec.end());
  if (!rng.bernoulli(cfg.probability)) return out;
  const double sigma = cfg.sigma.sample(rng);
  out.log = {true, sigma};
  if (sigma == 0.0) return out;
  for (auto& v : out.values) v += static_cast<float>(rng.normal(0.0, sigma));
  return out;
}

Reconstruction reconstruct(const FaceRecord& face, const ReconstructorAdapter& adapter, Rng& rng,
                           const NoiseConfig& cfg) {
  if (face.label != Label::kGenuine) throw SynthesisError("reconstruct: input face must be genuine");
  require_color(face.image, "reconstruct");

  Reconstruction out;
  cv::Mat decoded;
  try {
    LatentPair latent = adapter.encode(face.image);
    auto noisy = inject_bg_noise(latent.bg_vec, rng, cfg);
    latent.bg_vec = std::move(noisy.values);
    out.noise = noisy.log;
    decoded = adapter.decode(latent);
  } catch (const ShapeError&) {
    throw;
  } catch (const SynthesisError&) {
    throw;
  } catch (const std::exception& e) {
    throw SynthesisError("reconstructor '" + adapter.name() + "' failed: " + e.what());
  }
  if (decoded.size() != face.image.size() || decoded.type() != face.image.type()) {
    throw SynthesisError("reconstructor '" + adapter.name() + "' changed raster shape");
  }
  out.image = clamp01(decoded);
  return out;
}

}  // namespace rbi::synth
