#include "rbi/cli/commands.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <torch/torch.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/log.hpp"
#include "rbi/core/rng.hpp"
#include "rbi/data/cache.hpp"
#include "rbi/data/desk_corpus.hpp"
#include "rbi/data/manifest.hpp"
#include "rbi/eval/report.hpp"
#include "rbi/eval/scores.hpp"
#include "rbi/eval/sweep.hpp"
#include "rbi/eval/toy_eval.hpp"
#include "rbi/eval/visualize.hpp"
#include "rbi/model/checkpoint.hpp"
#include "rbi/synth/rbi_generator.hpp"
#include "rbi/synth/toy_autoencoder.hpp"
#include "rbi/train/trainer.hpp"

namespace rbi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDeskTrainStream = 1;
constexpr std::uint64_t kDeskTestStream = 2;
constexpr std::uint64_t kDeskValStream = 5;

std::uint64_t seed_of(const config::RunConfig& cfg) { return static_cast<std::uint64_t>(cfg.get_int("seed")); }

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << "\n";
}

std::vector<FaceRecord> desk_faces(const config::RunConfig& cfg, Split split) {
  const bool test = split != Split::kTrain;
  const auto n = static_cast<int>(cfg.get_int(test ? "desk.test_faces" : "desk.faces"));
  data::ToyRenderOptions render;
  render.frame_size = static_cast<int>(cfg.get_int("desk.frame_size"));
  render.noise_sigma = cfg.get_float("desk.noise_sigma");
  const auto stream = split == Split::kTrain ? kDeskTrainStream : split == Split::kVal ? kDeskValStream : kDeskTestStream;
  auto faces = data::make_toy_faces(n, mix_seed(seed_of(cfg), stream), config::crop_options(cfg), render);
  for (auto& f : faces) f.provenance.split = split;
  return faces;
}

std::string hist_key(double alpha) {
  const int bin = std::clamp(static_cast<int>((alpha - 0.5) / 0.05), 0, 9);
  return fmt::format("[{:.2f}, {:.2f}{}", 0.5 + 0.05 * bin, 0.55 + 0.05 * bin, bin == 9 ? "]" : ")");
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kConfig:
      case ErrorKind::kParameter: return kExitConfig;
      case ErrorKind::kData:
      case ErrorKind::kShape:
      case ErrorKind::kSynthesis: return kExitData;
      case ErrorKind::kNumeric: return kExitNumeric;
    }
  }
  return kExitFailure;
}

config::RunConfig resolve(const CommonOptions& options) {
  config::RunConfig cfg;
  for (const auto& f : options.config_files) cfg.merge_file(f);
  for (const auto& p : options.presets) cfg.apply_preset(p);
  for (const auto& o : options.overrides) cfg.set(std::string_view(o));
  if (options.seed) cfg.set("seed", std::to_string(*options.seed));
  if (options.workers) cfg.set("workers", std::to_string(*options.workers));
  if (cfg.get_int("workers") < 1) throw ConfigError("workers must be >= 1");
  return cfg;
}

fs::path default_run_dir(const std::string& command, const config::RunConfig& cfg, const fs::path& base) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return base / fmt::format("{}-{}-{:%Y%m%d-%H%M%S}", command, cfg.fingerprint().substr(0, 12), fmt::gmtime(now));
}

std::vector<FaceRecord> load_faces(const config::RunConfig& cfg, const FaceSource& source) {
  std::vector<FaceRecord> faces;
  if (source.desk) {
    faces = desk_faces(cfg, source.split == "all" ? Split::kTrain : parse_split(source.split));
  } else {
    if (source.manifest.empty()) throw ConfigError("a --manifest (or --desk) is required");
    const auto records = data::load_manifest(source.manifest);
    const auto crop = config::crop_options(cfg);
    auto cache = data::CropCache::from_env();
    const auto root = source.corpus.empty() ? source.manifest.parent_path() : source.corpus;
    for (const auto& r : records) {
      if (r.label != Label::kGenuine || !r.has_face()) continue;
      if (source.split != "all" && r.split != parse_split(source.split)) continue;
      if (auto face = data::load_face(r, root, crop, cache ? &*cache : nullptr)) faces.push_back(std::move(*face));
      if (source.limit >= 0 && static_cast<int>(faces.size()) >= source.limit) break;
    }
  }
  if (source.limit >= 0 && static_cast<int>(faces.size()) > source.limit) faces.resize(static_cast<std::size_t>(source.limit));
  return faces;
}

std::shared_ptr<synth::ReconstructorAdapter> load_adapter(const config::RunConfig& cfg,
                                                          const std::vector<FaceRecord>* fit_pool,
                                                          const fs::path& save_to) {
  const auto kind = config::adapter_kind(cfg);
  fs::path weights = cfg.get("synth.adapter_weights");
  if (kind == synth::AdapterKind::kToyAutoencoder && weights.empty()) {
    if (!save_to.empty() && fs::exists(save_to)) {
      weights = save_to;
    } else if (fit_pool != nullptr && !fit_pool->empty()) {
      std::vector<cv::Mat> images;
      for (const auto& f : *fit_pool) images.push_back(f.image);
      synth::AutoencoderFitOptions fit;
      fit.steps = static_cast<int>(cfg.get_int("desk.autoencoder_steps"));
      fit.seed = mix_seed(seed_of(cfg), 3);
      log::info("fitting toy reconstructor on {} faces ({} steps)", images.size(), fit.steps);
      auto model = synth::fit_toy_autoencoder(images, fit);
      if (!save_to.empty()) synth::save_toy_autoencoder(model, save_to);
      return std::make_shared<synth::ToyAutoencoderAdapter>(model);
    } else {
      throw ConfigError("synth.adapter=toy-autoencoder needs synth.adapter_weights (see `rbi fit-reconstructor`)");
    }
  }
  return std::shared_ptr<synth::ReconstructorAdapter>(synth::make_adapter(kind, weights));
}

model::Mfrn load_model(const config::RunConfig& cfg, const fs::path& checkpoint) {
  if (checkpoint.empty()) throw ConfigError("a --checkpoint is required");
  const auto meta = model::read_checkpoint_meta(checkpoint);
  auto mc = config::model_config(cfg);
  if (!meta.variant.empty() && meta.variant != mc.variant) {
    log::info("checkpoint variant '{}' overrides model.variant '{}'", meta.variant, mc.variant);
    auto other = model::ModelConfig::by_name(meta.variant);
    other.sobel_norm = mc.sobel_norm;
    other.bam_dilation = mc.bam_dilation;
    other.attention = mc.attention;
    mc = other;
  }
  model::Mfrn net(mc);
  model::load_checkpoint(checkpoint, net, meta.fingerprint, false);
  net->eval();
  return net;
}

int cmd_synth(const config::RunConfig& cfg, const SynthArgs& args) {
  if (args.shard_size < 1) throw ConfigError("--shard-size must be >= 1");
  fs::create_directories(args.out);
  cfg.write(args.out / "config.yaml");
  const auto faces = load_faces(cfg, args.source);
  if (faces.empty()) {
    log::error("no genuine faces to synthesise from; nothing written");
    return kExitData;
  }
  const auto adapter = load_adapter(cfg, &faces, args.out / "reconstructor.pt");
  const auto scfg = config::synth_config(cfg);
  const Rng root = Rng(seed_of(cfg)).split("synth");
  const int workers = adapter->concurrent_safe() ? static_cast<int>(cfg.get_int("workers")) : 1;

  struct Outcome {
    std::optional<synth::GenerationLog> log;
    std::string error;
  };
  std::vector<Outcome> outcomes(faces.size());
  std::atomic<std::size_t> next{0};
  std::mutex write_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < faces.size(); i = next++) {
      try {
        Rng rng = root.split(i);
        auto sample = synth::generate_rbi(faces[i], *adapter, rng, scfg);
        const auto dir = args.out / "shards" / fmt::format("shard_{:05d}", i / static_cast<std::size_t>(args.shard_size));
        const auto stem = fmt::format("{:06d}", i);
        json meta;
        meta["index"] = i;
        meta["id"] = sample.id;
        meta["source"] = faces[i].id();
        meta["label"] = "fake";
        meta["generation"] = sample.meta;
        std::lock_guard lock(write_mutex);
        fs::create_directories(dir);
        write_raster16(dir / (stem + ".image.png"), sample.image);
        write_raster16(dir / (stem + ".mask.png"), sample.mask_target);
        write_raster16(dir / (stem + ".edge.png"), sample.edge_target);
        std::ofstream(dir / (stem + ".json")) << meta.dump(2) << "\n";
        outcomes[i].log = sample.meta;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  json summary;
  std::map<std::string, int> alpha_hist, variant_hist;
  int generated = 0, failed = 0, noised = 0, deformed = 0;
  std::ofstream errors;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (!o.log) {
      ++failed;
      if (!errors.is_open()) errors.open(args.out / "errors.jsonl");
      errors << json{{"index", i}, {"id", faces[i].id()}, {"error", o.error}}.dump() << "\n";
      log::error("record {} ({}): {}", i, faces[i].id(), o.error);
      continue;
    }
    ++generated;
    ++alpha_hist[hist_key(o.log->alpha)];
    ++variant_hist[std::string(synth::to_string(o.log->variant))];
    noised += o.log->noise.applied ? 1 : 0;
    deformed += o.log->deform.applied ? 1 : 0;
  }
  summary["requested"] = faces.size();
  summary["generated"] = generated;
  summary["failed"] = failed;
  summary["shard_size"] = args.shard_size;
  summary["adapter"] = adapter->name();
  summary["seed"] = seed_of(cfg);
  summary["fingerprint"] = cfg.fingerprint();
  summary["alpha_histogram"] = alpha_hist;
  summary["variant_histogram"] = variant_hist;
  summary["latent_noise_applied"] = noised;
  summary["deformed"] = deformed;
  write_json(args.out / "summary.json", summary);
  fmt::print("synthesised {} of {} samples into {}\n", generated, faces.size(), args.out.string());
  if (failed == 0) return kExitOk;
  return generated > 0 ? kExitPartial : kExitData;
}

int cmd_train(const config::RunConfig& cfg, const TrainArgs& args) {
  auto pool = load_faces(cfg, args.source);
  if (pool.empty()) throw DataError("no genuine training faces");
  fs::create_directories(args.out);
  cfg.write(args.out / "config.yaml");
  const auto adapter = load_adapter(cfg, &pool, args.out / "reconstructor.pt");
  train::Trainer trainer(config::train_config(cfg), std::move(pool), adapter, args.out);
  if (cfg.get_bool("train.validate")) {
    auto val_source = args.source;
    val_source.split = "val";
    val_source.limit = -1;
    auto val = load_faces(cfg, val_source);
    if (val.empty()) throw DataError("train.validate is set but the val split has no genuine faces");
    trainer.set_validation(std::move(val));
  }
  if (!args.resume.empty()) trainer.resume(args.resume, args.force);
  const auto every = std::max<std::int64_t>(1, trainer.steps_per_epoch() / 4);
  trainer.on_step = [every](const train::StepRecord& r) {
    if (r.step % every == 0) {
      log::info("step {} epoch {}: L={:.5f} L_m={:.5f} L_e={:.5f} L_cls={:.5f}", r.step, r.epoch, r.loss.total,
                r.loss.map, r.loss.edge, r.loss.cls);
    }
  };
  const auto records = trainer.run();
  fmt::print("trained {} steps ({} total) into {}\n", records.size(), trainer.global_step(), args.out.string());
  return kExitOk;
}

int cmd_eval(const config::RunConfig& cfg_in, const EvalArgs& args) {
  auto cfg = cfg_in;
  const auto protocol = cfg.get("eval.protocol");
  if (protocol != "frame" && protocol != "video") throw ConfigError(fmt::format("unknown protocol '{}'", protocol));
  fs::create_directories(args.out);
  auto net = load_model(cfg, args.checkpoint);
  const auto batch = static_cast<int>(cfg.get_int("eval.batch_size"));
  eval::ScoreTable table;
  json extra;
  if (args.source.desk) {
    if (protocol != "frame") throw ConfigError("desk faces are single frames; use --protocol frame");
    const auto sibling = args.checkpoint.parent_path().parent_path() / "reconstructor.pt";
    if (cfg.get("synth.adapter") == "toy-autoencoder" && cfg.get("synth.adapter_weights").empty() &&
        fs::exists(sibling)) {
      cfg.set("synth.adapter_weights", sibling.string());
    }
    auto source = args.source;
    source.split = "test";
    const auto faces = load_faces(cfg, source);
    if (faces.empty()) throw DataError("no evaluation faces");
    const auto train_faces = desk_faces(cfg, Split::kTrain);
    const auto adapter = load_adapter(cfg, &train_faces);
    const auto pooled = eval::score_face_pool(net, faces, *adapter, mix_seed(seed_of(cfg), 4),
                                              config::synth_config(cfg), batch);
    for (std::size_t i = 0; i < pooled.scores.size(); ++i) {
      const bool fake = pooled.labels[i] == 1;
      table.rows.push_back({fmt::format("{}/{}", faces[i / 2].id(), fake ? "rbi" : "genuine"),
                            eval::Granularity::kFrame, pooled.scores[i], pooled.labels[i], "desk",
                            fake ? "rbi" : "genuine", 1});
    }
    extra = {{"auc", pooled.auc}, {"mean_map_genuine", pooled.mean_map_genuine},
             {"mean_map_fake", pooled.mean_map_fake}};
  } else {
    if (args.source.manifest.empty()) throw ConfigError("a --manifest (or --desk) is required");
    auto records = data::load_manifest(args.source.manifest);
    if (args.source.split != "all") records = data::filter_split(records, parse_split(args.source.split));
    if (records.empty()) throw DataError("no manifest records in the requested split");
    auto cache = data::CropCache::from_env();
    eval::ProtocolOptions options;
    options.frames = static_cast<int>(cfg.get_int(protocol == "frame" ? "eval.frame_frames" : "eval.video_frames"));
    options.corpus_root = args.source.corpus.empty() ? args.source.manifest.parent_path() : args.source.corpus;
    options.crop = config::crop_options(cfg);
    options.cache = cache ? &*cache : nullptr;
    const auto scorer = eval::model_scorer(net, batch);
    table = protocol == "frame" ? eval::frame_level_eval(scorer, records, options)
                                : eval::video_level_eval(scorer, records, options);
  }
  cfg.write(args.out / "config.yaml");
  const auto report = eval::build_report(table, protocol, cfg.fingerprint(), seed_of(cfg), cfg.get_bool("eval.pooled"));
  eval::write_report(args.out, report, table);
  if (!extra.empty()) write_json(args.out / "desk_metrics.json", extra);
  fmt::print("{}", eval::format_table(report));
  std::size_t defined = 0, total = report.cells.size();
  for (const auto& c : report.cells) defined += c.auc ? 1 : 0;
  if (total > 0 && defined == 0) return kExitNumeric;
  return defined == total ? kExitOk : kExitPartial;
}

int cmd_sweep(const config::RunConfig& cfg, const SweepArgs& args) {
  auto pool = load_faces(cfg, args.train);
  auto test_source = args.test;
  test_source.split = "test";
  const auto test = load_faces(cfg, test_source);
  if (pool.empty() || test.empty()) throw DataError("the sweep needs training and held-out faces");
  fs::create_directories(args.out);
  cfg.write(args.out / "config.yaml");
  const auto adapter = load_adapter(cfg, &pool, args.out / "reconstructor.pt");
  auto grid = eval::reference_lambda_grid();
  if (args.rows >= 0 && static_cast<std::size_t>(args.rows) < grid.size()) grid.resize(static_cast<std::size_t>(args.rows));
  std::size_t cell = 0;
  const auto report = eval::lambda_sweep(grid, [&](const losses::LossWeights& w) {
    auto cell_cfg = cfg;
    cell_cfg.set("train.lambda_1", fmt::format("{}", w.lambda_map));
    cell_cfg.set("train.lambda_2", fmt::format("{}", w.lambda_edge));
    const auto dir = args.out / fmt::format("cell_{}", cell++);
    cell_cfg.write(dir / "config.yaml");
    train::Trainer trainer(config::train_config(cell_cfg), pool, adapter, dir);
    trainer.run();
    const auto scores = eval::score_face_pool(trainer.model(), test, *adapter, mix_seed(seed_of(cfg), 4),
                                              config::synth_config(cell_cfg),
                                              static_cast<int>(cfg.get_int("eval.batch_size")));
    log::info("lambda ({}, {}): AUC {:.4f}", w.lambda_map, w.lambda_edge, scores.auc);
    return scores.auc;
  });
  write_json(args.out / "sweep.json", report);
  const auto table = eval::format_sweep(report);
  std::ofstream(args.out / "sweep.txt") << table;
  fmt::print("{}", table);
  std::size_t ok = 0;
  for (const auto& c : report.cells) ok += c.auc ? 1 : 0;
  if (ok == 0) return kExitNumeric;
  return ok == report.cells.size() ? kExitOk : kExitPartial;
}

int cmd_visualize(const config::RunConfig& cfg, const VisualizeArgs& args) {
  auto net = load_model(cfg, args.checkpoint);
  auto source = args.source;
  if (source.limit < 0) source.limit = 8;
  const auto faces = load_faces(cfg, source);
  if (faces.empty()) throw DataError("no faces to visualise");
  fs::create_directories(args.out);
  cfg.write(args.out / "config.yaml");
  std::vector<FaceRecord> inputs;
  std::vector<std::string> ids;
  std::shared_ptr<synth::ReconstructorAdapter> adapter;
  if (args.with_rbi) {
    auto run_cfg = cfg;
    const auto sibling = args.checkpoint.parent_path().parent_path() / "reconstructor.pt";
    if (run_cfg.get("synth.adapter") == "toy-autoencoder" && run_cfg.get("synth.adapter_weights").empty() &&
        fs::exists(sibling)) {
      run_cfg.set("synth.adapter_weights", sibling.string());
    }
    adapter = load_adapter(run_cfg, &faces);
  }
  const auto scfg = config::synth_config(cfg);
  const Rng root = Rng(seed_of(cfg)).split("visualize");
  for (std::size_t i = 0; i < faces.size(); ++i) {
    inputs.push_back(faces[i]);
    ids.push_back(faces[i].id() + "-genuine");
    if (adapter) {
      Rng rng = root.split(i);
      auto sample = synth::generate_rbi(faces[i], *adapter, rng, scfg);
      FaceRecord fake = faces[i];
      fake.image = sample.image;
      fake.label = Label::kFake;
      inputs.push_back(std::move(fake));
      ids.push_back(faces[i].id() + "-rbi");
    }
  }
  const auto paths = eval::visualize(net, inputs, ids, args.out);
  fmt::print("wrote {} panels into {}\n", paths.size(), args.out.string());
  return kExitOk;
}

int cmd_manifest(const config::RunConfig& cfg, const ManifestArgs& args) {
  if (args.corpus.empty() || args.out.empty()) throw ConfigError("--corpus and --out are required");
  data::ManifestOptions options;
  options.frames_per_video = static_cast<int>(cfg.get_int("data.frames_per_video"));
  const auto manifest = data::build_manifest(args.corpus, data::SplitSpec::parse(cfg.get("data.splits")), options);
  data::write_manifest(args.out, manifest.records);
  cfg.write(fs::path(args.out.string() + ".config.yaml"));
  for (const auto& s : manifest.skipped) log::warn("skipped video {}: {}", s.video_id, s.reason);
  fmt::print("{} records written to {} ({} videos skipped)\n", manifest.records.size(), args.out.string(),
             manifest.skipped.size());
  return kExitOk;
}

int cmd_desk_corpus(const config::RunConfig& cfg, const DeskCorpusArgs& args) {
  if (args.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(args.out);
  cfg.write(args.out / "desk.config.yaml");
  data::DeskCorpusOptions options;
  options.dataset = args.dataset;
  options.genuine_videos = args.genuine_videos;
  options.fake_videos = args.fake_videos;
  options.frames_per_video = args.frames_per_video;
  options.missing_face_probability = args.missing_face_probability;
  options.seed = seed_of(cfg);
  options.render.frame_size = static_cast<int>(cfg.get_int("desk.frame_size"));
  options.render.noise_sigma = cfg.get_float("desk.noise_sigma");
  options.synth = config::synth_config(cfg);
  std::shared_ptr<synth::ReconstructorAdapter> adapter;
  if (args.fake_videos > 0) {
    const auto pool = desk_faces(cfg, Split::kTrain);
    adapter = load_adapter(cfg, &pool, args.out / "reconstructor.pt");
  }
  const auto summary = data::write_desk_corpus(args.out, options, adapter.get());
  fmt::print("{} videos, {} frames ({} without a face) under {}\n", summary.videos, summary.frames,
             summary.missing_faces, args.out.string());
  return kExitOk;
}

int cmd_fit_reconstructor(const config::RunConfig& cfg, const FitReconstructorArgs& args) {
  if (args.out.empty()) throw ConfigError("--out is required");
  const auto faces = load_faces(cfg, args.source);
  if (faces.empty()) throw DataError("no faces to fit on");
  if (fs::exists(args.out)) fs::remove(args.out);
  auto fit_cfg = cfg;
  fit_cfg.set("synth.adapter", "toy-autoencoder");
  fit_cfg.set("synth.adapter_weights", "");
  load_adapter(fit_cfg, &faces, args.out);
  cfg.write(fs::path(args.out.string() + ".config.yaml"));
  fmt::print("reconstructor weights written to {}\n", args.out.string());
  return kExitOk;
}

int cmd_config_show(const config::RunConfig& cfg, bool with_comments) {
  fmt::print("# fingerprint: {}\n{}", cfg.fingerprint(), cfg.to_yaml(with_comments));
  return kExitOk;
}

}  // namespace rbi::cli
