#pragma once

#include <array>
#include <string>
#include <vector>

namespace rbi::model {

// One MBConv stage: `repeats` blocks, the first with `stride`.
struct StageSpec {
  int kernel = 3;
  int stride = 1;
  int expand = 1;
  int out_channels = 0;
  int repeats = 1;
};

struct BackboneSpec {
  int stem_channels = 32;
  std::vector<StageSpec> stages;
  double se_ratio = 0.25;
};

enum class NormPolicy { kBatch, kInstance, kNone };

struct ModelConfig {
  std::string variant = "miniature";
  int input_size = 64;
  BackboneSpec backbone;
  int edge_head_width = 8;
  std::array<int, 3> map_head_channels{16, 8, 4};
  int cls_head_width = 32;
  int bam_reduction = 4;
  int bam_dilation = 4;
  NormPolicy sobel_norm = NormPolicy::kBatch;
  bool attention = true;  // false bypasses attention in every fusion block

  // EfficientNet-B4 stage layout at 380x380; scale channels (24, 32, 56, 160, 448).
  static ModelConfig reference();
  // Scale channels (4, 4, 8, 8, 16) at 64x64.
  static ModelConfig miniature();
  static ModelConfig by_name(const std::string& variant);

  // Channel count C_i of the five pyramid scales.
  std::array<int, 5> scale_channels() const;
  // Index of the last stage of each scale.
  std::array<int, 5> scale_taps() const;

  // Throws ConfigError.
  void validate() const;
};

NormPolicy parse_norm_policy(const std::string& text);
std::string to_string(NormPolicy policy);

// ceil(size / 2^scale)
int scale_extent(int size, int scale);

}  // namespace rbi::model
