#include "rbi/train/trainer.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/eval/toy_eval.hpp"
#include "rbi/model/checkpoint.hpp"

namespace rbi::train {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (batch_size < 2 || batch_size % 2 != 0) throw ConfigError("batch size must be a positive even number");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be non-negative");
  if (!(momentum >= 0.0) || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  try {
    weights.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  model.validate();
}

std::string TrainConfig::effective_fingerprint() const {
  if (!fingerprint.empty()) return fingerprint;
  return sha256_hex(fmt::format("lr={}\nbatch={}\nepochs={}\nrho={}\nmomentum={}\nlambda={},{}\nseed={}\nmodel={}\n", lr,
                                batch_size, epochs, rho, momentum, weights.lambda_map, weights.lambda_edge, seed,
                                model.variant));
}

std::string to_json_line(const StepRecord& r) {
  nlohmann::json j{{"step", r.step},     {"epoch", r.epoch},       {"L_m", r.loss.map},
                   {"L_e", r.loss.edge}, {"L_cls", r.loss.cls},    {"L", r.loss.total},
                   {"grad_norm", r.grad_norm}, {"lr", r.lr}};
  return j.dump();
}

losses::LossTerms compute_losses(model::Mfrn& model, const Batch& batch, const losses::LossWeights& weights) {
  auto out = model->forward(batch.images);
  return losses::total_loss(losses::map_loss(out.map, batch.masks), losses::edge_loss(out.edge, batch.edges),
                            losses::cls_loss(out.p_fake, batch.labels), weights);
}

Trainer::Trainer(TrainConfig cfg, std::vector<FaceRecord> pool,
                 std::shared_ptr<const synth::ReconstructorAdapter> adapter, fs::path out_dir)
    : cfg_(std::move(cfg)), pool_(std::move(pool)), adapter_(std::move(adapter)), out_dir_(std::move(out_dir)) {
  cfg_.validate();
  if (pool_.empty()) throw DataError("training needs at least one genuine face");
  if (!adapter_) throw ConfigError("training needs a reconstructor adapter");
  for (const auto& f : pool_) {
    f.validate();
    if (f.image.rows != cfg_.model.input_size || f.image.cols != cfg_.model.input_size) {
      throw ShapeError(fmt::format("face '{}' is {}x{}, model expects {}", f.id(), f.image.cols, f.image.rows,
                                   cfg_.model.input_size));
    }
  }
  torch::manual_seed(cfg_.seed);
  model_ = model::Mfrn(cfg_.model);
  if (!cfg_.pretrained_backbone.empty()) {
    model_->rgb_backbone()->load_pretrained(cfg_.pretrained_backbone);
    model_->noise_backbone()->load_pretrained(cfg_.pretrained_backbone);
  }
  model_->train();
  optimizer_ = std::make_unique<torch::optim::SGD>(
      model_->parameters(), torch::optim::SGDOptions(cfg_.lr).momentum(cfg_.momentum));
  sam_ = std::make_unique<Sam>(*optimizer_, cfg_.rho);
}

std::int64_t Trainer::steps_per_epoch() const { return batches_per_epoch(pool_.size(), cfg_.batch_size / 2); }

std::int64_t Trainer::total_steps() const {
  const auto full = steps_per_epoch() * cfg_.epochs;
  return cfg_.max_steps >= 0 ? std::min(full, cfg_.max_steps) : full;
}

Batch Trainer::next_batch() {
  if (!prefetch_) {
    std::vector<std::pair<std::int64_t, std::int64_t>> schedule;
    std::int64_t e = epoch_, b = batch_index_;
    const auto per_epoch = steps_per_epoch();
    for (std::int64_t s = step_; s < total_steps(); ++s) {
      schedule.emplace_back(e, b);
      if (++b == per_epoch) {
        b = 0;
        ++e;
      }
    }
    if (schedule.empty()) schedule.emplace_back(epoch_, batch_index_);
    BatchPlan plan{cfg_.seed, cfg_.batch_size / 2, cfg_.workers, cfg_.prefetch};
    prefetch_ = std::make_unique<BatchPrefetcher>(pool_, *adapter_, cfg_.samples, plan, std::move(schedule));
  }
  auto batch = prefetch_->next();
  if (!batch || batch->epoch != epoch_ || batch->index != batch_index_) {
    // Schedule exhausted or out of step (e.g. after resume); rebuild in place.
    prefetch_.reset();
    BatchPlan plan{cfg_.seed, cfg_.batch_size / 2, 1, 1};
    return build_batch(pool_, *adapter_, cfg_.samples, plan, epoch_, batch_index_);
  }
  return std::move(*batch);
}

void Trainer::advance() {
  ++step_;
  if (++batch_index_ == steps_per_epoch()) {
    batch_index_ = 0;
    ++epoch_;
  }
}

StepRecord Trainer::step() {
  model_->train();
  const Batch batch = next_batch();
  losses::LossTerms terms;
  auto closure = [&](int phase) {
    std::optional<FreezeBatchNormStats> freeze;
    if (phase == 1) freeze.emplace(*model_);
    auto t = compute_losses(model_, batch, cfg_.weights);
    if (phase == 0) terms = t;
    return t.total;
  };
  auto fail = [&](const std::string& what) {
    const auto loss = terms.total.defined() ? terms.breakdown() : losses::LossBreakdown{};
    if (!out_dir_.empty()) {
      fs::create_directories(out_dir_);
      nlohmann::json dump{{"seed", cfg_.seed},   {"epoch", batch.epoch}, {"batch", batch.index},
                          {"step", step_},       {"ids", batch.ids},     {"L_m", loss.map},
                          {"L_e", loss.edge},    {"L_cls", loss.cls},    {"reason", what}};
      std::ofstream(out_dir_ / "nan_batch.json") << dump.dump(2) << '\n';
    }
    throw NumericError(fmt::format("{} at step {} (seed {} epoch {} batch {})", what, step_, cfg_.seed, batch.epoch,
                                   batch.index));
  };
  SamStepResult result;
  try {
    result = sam_->step(closure);
  } catch (const NumericError& e) {
    fail(e.what());
  }
  const auto loss = terms.breakdown();
  if (!std::isfinite(loss.total)) fail("non-finite loss");
  model_->project_constraints();
  StepRecord rec{step_, epoch_, loss, result.grad_norm, cfg_.lr};
  advance();
  log_step(rec);
  if (on_step) on_step(rec);
  return rec;
}

void Trainer::log_step(const StepRecord& record) {
  if (out_dir_.empty()) return;
  fs::create_directories(out_dir_);
  std::ofstream(out_dir_ / "train_log.jsonl", std::ios::app) << to_json_line(record) << '\n';
}

std::vector<StepRecord> Trainer::run_until(std::int64_t steps) {
  std::vector<StepRecord> out;
  while (step_ < steps) out.push_back(step());
  return out;
}

std::vector<StepRecord> Trainer::run() {
  const auto ckpt = out_dir_ / "checkpoints";
  if (!out_dir_.empty() && step_ == 0) save(ckpt / "initial.ckpt");
  std::vector<StepRecord> out;
  const auto total = total_steps();
  while (step_ < total) {
    out.push_back(step());
    if (batch_index_ != 0) continue;
    if (!out_dir_.empty() && cfg_.epoch_checkpoints) save(ckpt / fmt::format("epoch_{:03d}.ckpt", epoch_));
    if (!val_faces_.empty()) validate_epoch();
  }
  prefetch_.reset();
  if (!out_dir_.empty() && total > 0) save(ckpt / "final.ckpt");
  return out;
}

void Trainer::set_validation(std::vector<FaceRecord> faces) { val_faces_ = std::move(faces); }

void Trainer::validate_epoch() {
  const auto seed = Rng(cfg_.seed).split("validation").seed();
  const auto scores = eval::score_face_pool(model_, val_faces_, *adapter_, seed, cfg_.samples.synth);
  log::info("epoch {}: validation AUC {:.4f}, mean genuine map {:.4f}", epoch_, scores.auc, scores.mean_map_genuine);
  const bool best = !best_val_auc_ || scores.auc > *best_val_auc_;
  if (best) best_val_auc_ = scores.auc;
  if (out_dir_.empty()) return;
  nlohmann::json rec{{"epoch", epoch_},
                     {"step", step_},
                     {"auc", scores.auc},
                     {"mean_map_genuine", scores.mean_map_genuine},
                     {"mean_map_fake", scores.mean_map_fake}};
  std::ofstream(out_dir_ / "val_log.jsonl", std::ios::app) << rec.dump() << '\n';
  if (best) save(out_dir_ / "checkpoints" / "best.ckpt");
}

void Trainer::save(const fs::path& path) const {
  model::CheckpointMeta meta;
  meta.fingerprint = cfg_.effective_fingerprint();
  meta.epoch = epoch_;
  meta.step = step_;
  meta.rng_state = Rng(cfg_.seed).state();
  meta.extra = nlohmann::json{{"batch_in_epoch", batch_index_}, {"seed", cfg_.seed}}.dump();
  auto model = model_;
  model::save_checkpoint(path, model, meta, optimizer_.get());
}

void Trainer::resume(const fs::path& path, bool force) {
  prefetch_.reset();
  const auto meta = model::load_checkpoint(path, model_, cfg_.effective_fingerprint(), force, optimizer_.get());
  step_ = meta.step;
  epoch_ = meta.epoch;
  try {
    batch_index_ = nlohmann::json::parse(meta.extra).at("batch_in_epoch").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("checkpoint position is unreadable: {}", e.what()));
  }
}

}  // namespace rbi::train
