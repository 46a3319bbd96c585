#include "rbi/train/batch.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "rbi/core/error.hpp"
#include "rbi/core/tensor_bridge.hpp"

namespace rbi::train {

Rng sample_rng(std::uint64_t seed, std::int64_t epoch, std::size_t face_index) {
  return Rng(seed).split("sample").split(static_cast<std::uint64_t>(epoch)).split(face_index);
}

std::pair<synth::BlendedSample, synth::BlendedSample> make_pair_samples(const FaceRecord& face,
                                                                          const synth::ReconstructorAdapter& adapter,
                                                                          Rng rng, const SampleOptions& options) {
  auto genuine = synth::make_genuine_sample(face);
  Rng synth_rng = rng.split("rbi");
  auto fake = synth::generate_rbi(face, adapter, synth_rng, options.synth);
  if (options.augment_enabled) {
    Rng ga = rng.split("augment-genuine");
    Rng fa = rng.split("augment-fake");
    genuine.image = synth::train_time_augment(genuine.image, ga, options.augment);
    fake.image = synth::train_time_augment(fake.image, fa, options.augment);
  }
  return {std::move(genuine), std::move(fake)};
}

std::vector<std::size_t> epoch_order(std::size_t pool_size, std::uint64_t seed, std::int64_t epoch) {
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).split("order").split(static_cast<std::uint64_t>(epoch));
  for (std::size_t i = pool_size; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::int64_t batches_per_epoch(std::size_t pool_size, int pairs_per_batch) {
  if (pairs_per_batch <= 0) throw ConfigError("pairs per batch must be positive");
  return static_cast<std::int64_t>((pool_size + static_cast<std::size_t>(pairs_per_batch) - 1) /
                                   static_cast<std::size_t>(pairs_per_batch));
}

Batch build_batch(const std::vector<FaceRecord>& pool, const synth::ReconstructorAdapter& adapter,
                  const SampleOptions& options, const BatchPlan& plan, std::int64_t epoch, std::int64_t index) {
  if (pool.empty()) throw DataError("training pool is empty");
  const auto order = epoch_order(pool.size(), plan.seed, epoch);
  const auto begin = static_cast<std::size_t>(index) * static_cast<std::size_t>(plan.pairs_per_batch);
  if (begin >= pool.size()) throw ParameterError(fmt::format("batch {} is past the end of epoch {}", index, epoch));
  const auto end = std::min(pool.size(), begin + static_cast<std::size_t>(plan.pairs_per_batch));
  const std::size_t n = end - begin;

  std::vector<std::pair<synth::BlendedSample, synth::BlendedSample>> pairs(n);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto face_index = order[begin + k];
      pairs[k] = make_pair_samples(pool[face_index], adapter, sample_rng(plan.seed, epoch, face_index), options);
    }
  };
  const auto workers = static_cast<std::size_t>(
      std::max(1, adapter.concurrent_safe() ? std::min<int>(plan.workers, static_cast<int>(n)) : 1));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(n * w / workers, n * (w + 1) / workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<torch::Tensor> images, masks, edges;
  std::vector<float> labels;
  Batch batch;
  batch.epoch = epoch;
  batch.index = index;
  for (auto& [g, f] : pairs) {
    for (auto* s : {&g, &f}) {
      images.push_back(to_tensor(s->image));
      masks.push_back(to_tensor(s->mask_target));
      edges.push_back(to_tensor(s->edge_target));
      labels.push_back(s->label == Label::kFake ? 1.0f : 0.0f);
      batch.ids.push_back(s->id);
    }
  }
  batch.images = torch::stack(images);
  batch.masks = torch::stack(masks);
  batch.edges = torch::stack(edges);
  batch.labels = torch::tensor(labels);
  return batch;
}

BatchPrefetcher::BatchPrefetcher(const std::vector<FaceRecord>& pool, const synth::ReconstructorAdapter& adapter,
                                 SampleOptions options, BatchPlan plan,
                                 std::vector<std::pair<std::int64_t, std::int64_t>> schedule)
    : pool_(pool),
      adapter_(adapter),
      options_(std::move(options)),
      plan_(plan),
      schedule_(std::move(schedule)),
      thread_([this] { run(); }) {}

BatchPrefetcher::~BatchPrefetcher() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

void BatchPrefetcher::run() {
  try {
    for (const auto& [epoch, index] : schedule_) {
      auto batch = build_batch(pool_, adapter_, options_, plan_, epoch, index);
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || queue_.size() < std::max<std::size_t>(1, plan_.prefetch); });
      if (stop_) return;
      queue_.push_back(std::move(batch));
      cv_.notify_all();
    }
  } catch (...) {
    std::lock_guard lock(mutex_);
    error_ = std::current_exception();
  }
  std::lock_guard lock(mutex_);
  done_ = true;
  cv_.notify_all();
}

std::optional<Batch> BatchPrefetcher::next() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return !queue_.empty() || done_; });
  if (!queue_.empty()) {
    Batch b = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return b;
  }
  if (error_) std::rethrow_exception(error_);
  return std::nullopt;
}

}  // namespace rbi::train
