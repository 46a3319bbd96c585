#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbi/losses/losses.hpp"
#include "rbi/model/mfrn.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/reconstructor.hpp"
#include "rbi/train/batch.hpp"
#include "rbi/train/sam.hpp"

namespace rbi::train {

struct TrainConfig {
  double lr = 0.001;
  int batch_size = 32;  // samples; half genuine, half RBI
  int epochs = 80;
  double rho = 0.05;
  double momentum = 0.9;
  losses::LossWeights weights;
  std::uint64_t seed = 0;
  SampleOptions samples;
  model::ModelConfig model = model::ModelConfig::miniature();
  std::string pretrained_backbone;  // optional weights for both backbones
  int workers = 1;
  std::size_t prefetch = 2;
  std::int64_t max_steps = -1;   // stop early once reached; -1 = no cap
  bool epoch_checkpoints = true;
  std::string fingerprint;       // config fingerprint stored in checkpoints

  // Throws ConfigError.
  void validate() const;
  // fingerprint, or a digest of the fields above when it is empty.
  std::string effective_fingerprint() const;
};

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  losses::LossBreakdown loss;
  double grad_norm = 0.0;
  double lr = 0.0;
};

std::string to_json_line(const StepRecord& record);

// Full forward + loss for one batch.
losses::LossTerms compute_losses(model::Mfrn& model, const Batch& batch, const losses::LossWeights& weights);

class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<FaceRecord> pool, std::shared_ptr<const synth::ReconstructorAdapter> adapter,
          std::filesystem::path out_dir = {});

  // Trains until the configured epoch count (or max_steps). Writes
  // checkpoints/initial.ckpt, epoch_NNN.ckpt and final.ckpt plus train_log.jsonl
  // when an output directory was given. Returns this call's step records.
  std::vector<StepRecord> run();
  // Runs exactly one step at the current position.
  StepRecord step();
  // Runs steps until `steps` have been taken in total.
  std::vector<StepRecord> run_until(std::int64_t steps);

  void save(const std::filesystem::path& path) const;
  // Restores parameters, optimizer state and position. force skips the
  // fingerprint check.
  void resume(const std::filesystem::path& path, bool force = false);

  model::Mfrn& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  std::int64_t global_step() const { return step_; }
  std::int64_t epoch() const { return epoch_; }
  std::int64_t batch_in_epoch() const { return batch_index_; }
  std::int64_t steps_per_epoch() const;
  std::int64_t total_steps() const;
  const std::vector<FaceRecord>& pool() const { return pool_; }

  // Called after every step.
  std::function<void(const StepRecord&)> on_step;

  // Held-out genuine faces scored (with one RBI each) after every epoch of
  // run(); results go to val_log.jsonl and the best epoch to best.ckpt.
  void set_validation(std::vector<FaceRecord> faces);
  std::optional<double> best_val_auc() const { return best_val_auc_; }

 private:
  Batch next_batch();
  void advance();
  void log_step(const StepRecord& record);
  void validate_epoch();

  TrainConfig cfg_;
  std::vector<FaceRecord> pool_;
  std::shared_ptr<const synth::ReconstructorAdapter> adapter_;
  std::filesystem::path out_dir_;
  model::Mfrn model_{nullptr};
  std::unique_ptr<torch::optim::SGD> optimizer_;
  std::unique_ptr<Sam> sam_;
  std::unique_ptr<BatchPrefetcher> prefetch_;
  std::int64_t step_ = 0;
  std::int64_t epoch_ = 0;
  std::int64_t batch_index_ = 0;
  std::vector<FaceRecord> val_faces_;
  std::optional<double> best_val_auc_;
};

}  // namespace rbi::train
