#pragma once

#include <torch/torch.h>

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rbi/synth/augment.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/rbi_generator.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::train {

struct SampleOptions {
  synth::SynthConfig synth;
  synth::AugmentConfig augment;
  bool augment_enabled = true;
};

struct Batch {
  torch::Tensor images;  // (B, 3, H, W)
  torch::Tensor masks;   // (B, 1, H/2, W/2)
  torch::Tensor edges;   // (B, 1, H/2, W/2)
  torch::Tensor labels;  // (B) float {0, 1}
  std::int64_t epoch = 0;
  std::int64_t index = 0;  // batch index within the epoch
  std::vector<std::string> ids;
};

// Stream for face `face_index` in `epoch`; independent of worker layout.
Rng sample_rng(std::uint64_t seed, std::int64_t epoch, std::size_t face_index);

// Genuine and RBI samples of one face, interleaved [g, f].
std::pair<synth::BlendedSample, synth::BlendedSample> make_pair_samples(const FaceRecord& face,
                                                                          const synth::ReconstructorAdapter& adapter,
                                                                          Rng rng, const SampleOptions& options);

// Faces shuffled per epoch by a stream of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t pool_size, std::uint64_t seed, std::int64_t epoch);

// Each batch holds `pairs_per_batch` faces, i.e. twice as many samples.
std::int64_t batches_per_epoch(std::size_t pool_size, int pairs_per_batch);

struct BatchPlan {
  std::uint64_t seed = 0;
  int pairs_per_batch = 16;
  int workers = 1;
  std::size_t prefetch = 2;
};

// Builds batch (epoch, index); deterministic in its arguments.
Batch build_batch(const std::vector<FaceRecord>& pool, const synth::ReconstructorAdapter& adapter,
                  const SampleOptions& options, const BatchPlan& plan, std::int64_t epoch, std::int64_t index);

// Background producer over a sequence of (epoch, index) pairs with a bounded queue.
class BatchPrefetcher {
 public:
  BatchPrefetcher(const std::vector<FaceRecord>& pool, const synth::ReconstructorAdapter& adapter,
                  SampleOptions options, BatchPlan plan, std::vector<std::pair<std::int64_t, std::int64_t>> schedule);
  ~BatchPrefetcher();
  BatchPrefetcher(const BatchPrefetcher&) = delete;
  BatchPrefetcher& operator=(const BatchPrefetcher&) = delete;

  // nullopt once the schedule is exhausted; rethrows producer errors.
  std::optional<Batch> next();

 private:
  void run();

  const std::vector<FaceRecord>& pool_;
  const synth::ReconstructorAdapter& adapter_;
  SampleOptions options_;
  BatchPlan plan_;
  std::vector<std::pair<std::int64_t, std::int64_t>> schedule_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Batch> queue_;
  std::exception_ptr error_;
  bool done_ = false;
  bool stop_ = false;
  std::thread thread_;
};

}  // namespace rbi::train
