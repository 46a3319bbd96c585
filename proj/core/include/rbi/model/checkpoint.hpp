#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>

#include "rbi/model/mfrn.hpp"

namespace rbi::model {

inline constexpr std::int64_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::int64_t version = kCheckpointVersion;
  std::string fingerprint;
  std::string variant;
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  std::string rng_state;
  std::string extra;  // free-form JSON
};

// optimizer may be null.
void save_checkpoint(const std::filesystem::path& path, Mfrn& model, const CheckpointMeta& meta,
                     const torch::optim::Optimizer* optimizer = nullptr);

// Throws ConfigError on a fingerprint mismatch unless force is set, DataError on
// unreadable or incompatible archives.
CheckpointMeta load_checkpoint(const std::filesystem::path& path, Mfrn& model, const std::string& expected_fingerprint,
                               bool force = false, torch::optim::Optimizer* optimizer = nullptr);

// Metadata only.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace rbi::model
