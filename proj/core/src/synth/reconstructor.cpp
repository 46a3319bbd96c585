#include "rbi/synth/reconstructor.hpp"

#include <cstring>

#include "rbi/core/error.hpp"
#include "rbi/synth/toy_autoencoder.hpp"

namespace rbi::synth {

LatentPair IdentityAdapter::encode(const cv::Mat& image) const {
  if (image.empty() || image.depth() != CV_32F) throw ShapeError("identity adapter: expected float raster");
  cv::Mat dense = image.isContinuous() ? image : image.clone();
  const auto* data = reinterpret_cast<const float*>(dense.data);
  const std::size_t total = dense.total() * dense.channels();
  const std::size_t half = total / 2;
  LatentPair out;
  out.id_vec.assign(data, data + half);
  out.bg_vec.assign(data + half, data + total);
  out.id_shape = {static_cast<std::int64_t>(half)};
  out.bg_shape = {static_cast<std::int64_t>(total - half)};
  out.extent = dense.size();
  return out;
}

cv::Mat IdentityAdapter::decode(const LatentPair& latent) const {
  const std::size_t total = latent.id_vec.size() + latent.bg_vec.size();
  const auto area = static_cast<std::size_t>(latent.extent.area());
  if (area == 0 || total != area * 3) throw ShapeError("identity adapter: latent does not match extent");
  cv::Mat out(latent.extent, CV_32FC3);
  auto* data = reinterpret_cast<float*>(out.data);
  std::memcpy(data, latent.id_vec.data(), latent.id_vec.size() * sizeof(float));
  std::memcpy(data + latent.id_vec.size(), latent.bg_vec.data(), latent.bg_vec.size() * sizeof(float));
  return out;
}

AdapterKind parse_adapter_kind(const std::string& text) {
  if (text == "identity") return AdapterKind::kIdentity;
  if (text == "toy-autoencoder" || text == "toy") return AdapterKind::kToyAutoencoder;
  if (text == "scripted" || text == "external") return AdapterKind::kScripted;
  throw ConfigError("unknown reconstructor adapter '" + text + "'");
}

std::unique_ptr<ReconstructorAdapter> make_adapter(AdapterKind kind, const std::filesystem::path& weights) {
  switch (kind) {
    case AdapterKind::kIdentity:
      return std::make_unique<IdentityAdapter>();
    case AdapterKind::kToyAutoencoder:
      if (weights.empty() || !std::filesystem::exists(weights)) {
        throw SynthesisError("reconstructor 'toy-autoencoder': weights not found at '" + weights.string() + "'");
      }
      return std::make_unique<ToyAutoencoderAdapter>(load_toy_autoencoder(weights));
    case AdapterKind::kScripted:
      return std::make_unique<ScriptedAdapter>(weights);
  }
  throw ConfigError("unknown reconstructor adapter");
}

}  // namespace rbi::synth
