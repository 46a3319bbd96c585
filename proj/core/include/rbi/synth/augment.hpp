#pragma once

#include <array>
#include <optional>

#include <nlohmann/json_fwd.hpp>
#include <opencv2/core.hpp>

#include "rbi/core/range.hpp"
#include "rbi/core/rng.hpp"

namespace rbi::synth {

// Source/target statistical transforms. Shifts are in [0, 1] intensity units,
// hue in degrees.
struct SstaConfig {
  std::array<Range, 3> rgb_shift{{{-20.0 / 255, 20.0 / 255}, {-20.0 / 255, 20.0 / 255}, {-20.0 / 255, 20.0 / 255}}};
  Range hue_shift_deg{-10.0, 10.0};
  Range saturation_shift{-0.1, 0.1};
  Range value_shift{-0.1, 0.1};
  Range brightness{-0.1, 0.1};
  Range contrast{-0.1, 0.1};
  double blur_probability = 0.5;  // otherwise sharpen
  Range blur_sigma{0.5, 1.5};
  Range sharpen_amount{0.2, 0.6};
};

enum class FilterKind { kBlur, kSharpen };

struct SstaLog {
  std::array<double, 3> rgb_shift{};
  double hue_shift_deg = 0.0;
  double saturation_shift = 0.0;
  double value_shift = 0.0;
  double brightness = 0.0;
  double contrast = 0.0;
  FilterKind filter = FilterKind::kBlur;
  double filter_strength = 0.0;
};

struct SstaResult {
  cv::Mat image;
  SstaLog log;
};

// RGB shift, HSV jitter, brightness/contrast, then exactly one of
// blur/sharpen; clipped to [0, 1]. Zero-magnitude transforms are skipped, so
// an all-zero configuration is the identity.
SstaResult ssta(const cv::Mat& image, Rng& rng, const SstaConfig& cfg);

struct AssignConfig {
  bool ssta_enabled = true;
  double augment_source_probability = 0.5;
  // Off: source = reconstructed, target = genuine. On: swapped with p = 0.5.
  bool randomize_roles = false;
  SstaConfig ssta;
};

enum class AugmentedSide { kNone, kSource, kTarget };

struct SourceTarget {
  cv::Mat source;
  cv::Mat target;
  AugmentedSide augmented = AugmentedSide::kNone;
  bool roles_swapped = false;
  std::optional<SstaLog> ssta_log;
};

SourceTarget assign_source_target(const cv::Mat& genuine, const cv::Mat& reconstructed, Rng& rng,
                                  const AssignConfig& cfg);

// Common train-time augmentation applied to both classes.
struct AugmentConfig {
  double jpeg_probability = 0.3;
  Range jpeg_quality{60.0, 100.0};
  double brightness_contrast_probability = 0.3;
  Range brightness{-0.1, 0.1};
  Range contrast{-0.1, 0.1};
  double color_jitter_probability = 0.3;
  Range hue_shift_deg{-5.0, 5.0};
  Range saturation_shift{-0.1, 0.1};
  Range value_shift{-0.05, 0.05};
};

cv::Mat train_time_augment(const cv::Mat& image, Rng& rng, const AugmentConfig& cfg);

// Building blocks, exposed for tests.
cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality);
cv::Mat shift_channels(const cv::Mat& image, const std::array<double, 3>& shift);
cv::Mat adjust_hsv(const cv::Mat& image, double hue_deg, double saturation, double value);
cv::Mat brightness_contrast(const cv::Mat& image, double brightness, double contrast);
cv::Mat gaussian_blur(const cv::Mat& image, double sigma);
cv::Mat sharpen(const cv::Mat& image, double amount);

void to_json(nlohmann::json& j, const SstaLog& log);

}  // namespace rbi::synth
