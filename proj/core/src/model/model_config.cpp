#include "rbi/model/model_config.hpp"

#include <fmt/format.h>

#include "rbi/core/error.hpp"

namespace rbi::model {

ModelConfig ModelConfig::reference() {
  ModelConfig cfg;
  cfg.variant = "reference";
  cfg.input_size = 380;
  // B0 layout scaled by width 1.4 / depth 1.8.
  cfg.backbone.stem_channels = 48;
  cfg.backbone.stages = {{3, 1, 1, 24, 2},  {3, 2, 6, 32, 4},  {5, 2, 6, 56, 4},  {3, 2, 6, 112, 6},
                         {5, 1, 6, 160, 6}, {5, 2, 6, 272, 8}, {3, 1, 6, 448, 2}};
  cfg.edge_head_width = 64;
  cfg.map_head_channels = {256, 64, 16};
  cfg.cls_head_width = 512;
  cfg.bam_reduction = 16;
  cfg.bam_dilation = 4;
  return cfg;
}

ModelConfig ModelConfig::miniature() {
  ModelConfig cfg;
  cfg.variant = "miniature";
  cfg.input_size = 64;
  cfg.backbone.stem_channels = 4;
  cfg.backbone.stages = {{3, 1, 1, 4, 1}, {3, 2, 2, 4, 1}, {3, 2, 2, 8, 1}, {3, 2, 2, 8, 1}, {3, 2, 2, 16, 1}};
  cfg.edge_head_width = 8;
  cfg.map_head_channels = {16, 8, 4};
  cfg.cls_head_width = 32;
  cfg.bam_reduction = 4;
  cfg.bam_dilation = 4;
  return cfg;
}

ModelConfig ModelConfig::by_name(const std::string& variant) {
  if (variant == "reference") return reference();
  if (variant == "miniature") return miniature();
  throw ConfigError(fmt::format("unknown model variant '{}'", variant));
}

std::array<int, 5> ModelConfig::scale_taps() const {
  std::array<int, 5> taps{-1, -1, -1, -1, -1};
  int scale = 1;  // the stem halves the input
  for (std::size_t s = 0; s < backbone.stages.size(); ++s) {
    if (backbone.stages[s].stride == 2) ++scale;
    if (scale >= 1 && scale <= 5) taps[static_cast<std::size_t>(scale - 1)] = static_cast<int>(s);
  }
  return taps;
}

std::array<int, 5> ModelConfig::scale_channels() const {
  std::array<int, 5> out{};
  const auto taps = scale_taps();
  for (std::size_t i = 0; i < 5; ++i) {
    out[i] = taps[i] < 0 ? 0 : backbone.stages[static_cast<std::size_t>(taps[i])].out_channels;
  }
  return out;
}

void ModelConfig::validate() const {
  if (input_size < 32 || input_size % 2 != 0) {
    throw ConfigError(fmt::format("model input size {} must be even and at least 32", input_size));
  }
  int stride2 = 0;
  for (const auto& st : backbone.stages) {
    if (st.stride != 1 && st.stride != 2) throw ConfigError("backbone stage stride must be 1 or 2");
    if (st.out_channels <= 0 || st.repeats <= 0 || st.expand <= 0 || st.kernel % 2 == 0) {
      throw ConfigError("backbone stage has invalid kernel/channels/repeats/expand");
    }
    stride2 += st.stride == 2;
  }
  if (stride2 != 4) throw ConfigError("backbone must downsample exactly four times after the stem");
  if (backbone.stem_channels <= 0) throw ConfigError("backbone stem channels must be positive");
  for (int c : scale_channels()) {
    if (2 * c < bam_reduction) {
      throw ConfigError(fmt::format("fusion width {} is below the attention reduction ratio {}", 2 * c, bam_reduction));
    }
  }
  if (edge_head_width <= 0 || cls_head_width <= 0 || bam_dilation <= 0) {
    throw ConfigError("head widths and attention dilation must be positive");
  }
  for (int c : map_head_channels) {
    if (c <= 0) throw ConfigError("map head channels must be positive");
  }
}

NormPolicy parse_norm_policy(const std::string& text) {
  if (text == "batch") return NormPolicy::kBatch;
  if (text == "instance") return NormPolicy::kInstance;
  if (text == "none") return NormPolicy::kNone;
  throw ConfigError(fmt::format("unknown normalization policy '{}'", text));
}

std::string to_string(NormPolicy policy) {
  switch (policy) {
    case NormPolicy::kBatch: return "batch";
    case NormPolicy::kInstance: return "instance";
    case NormPolicy::kNone: return "none";
  }
  return "batch";
}

int scale_extent(int size, int scale) {
  for (int i = 0; i < scale; ++i) size = (size + 1) / 2;
  return size;
}

}  // namespace rbi::model
