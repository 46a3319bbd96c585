#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace rbi::synth {

// Identity / background embedding of one face. The shapes are owned by the
// adapter that produced the pair; decode() only accepts pairs it encoded.
struct LatentPair {
  std::vector<float> id_vec;
  std::vector<float> bg_vec;
  std::vector<std::int64_t> id_shape;
  std::vector<std::int64_t> bg_shape;
  cv::Size extent;  // spatial size of the encoded raster
};

// Disentangle-and-reconstruct generator. decode(encode(x)) has the size and
// channel count of x; outputs are clipped to [0, 1] by the caller.
class ReconstructorAdapter {
 public:
  virtual ~ReconstructorAdapter() = default;

  virtual std::string name() const = 0;
  virtual LatentPair encode(const cv::Mat& image) const = 0;
  virtual cv::Mat decode(const LatentPair& latent) const = 0;
  // Whether encode/decode may be called concurrently on one instance.
  virtual bool concurrent_safe() const { return true; }
};

// Splits the flattened raster in two halves (id | bg) and reassembles it.
class IdentityAdapter final : public ReconstructorAdapter {
 public:
  std::string name() const override { return "identity"; }
  LatentPair encode(const cv::Mat& image) const override;
  cv::Mat decode(const LatentPair& latent) const override;
};

enum class AdapterKind { kIdentity, kToyAutoencoder, kScripted };

AdapterKind parse_adapter_kind(const std::string& text);

// kToyAutoencoder and kScripted load weights from `weights`.
std::unique_ptr<ReconstructorAdapter> make_adapter(AdapterKind kind,
                                                   const std::filesystem::path& weights = {});

}  // namespace rbi::synth
