#include <CLI11.hpp>
#include <fmt/format.h>
#include <torch/torch.h>

#include <iostream>

#include "rbi/cli/commands.hpp"
#include "rbi/core/log.hpp"

namespace rbi::cli {

namespace {

void add_common(CLI::App* app, CommonOptions& common) {
  app->add_option("-c,--config", common.config_files, "YAML config file (repeatable, later wins)");
  app->add_option("--preset", common.presets, "named override bundle, e.g. loss-main-text");
  app->add_option("--set", common.overrides, "key=value override (repeatable)");
  app->add_option("--seed", common.seed, "root seed");
  app->add_option("--workers", common.workers, "parallel workers");
}

void add_source(CLI::App* app, FaceSource& source, const std::string& default_split) {
  source.split = default_split;
  app->add_option("--manifest", source.manifest, "manifest CSV");
  app->add_option("--corpus", source.corpus, "corpus root (default: manifest directory)");
  app->add_option("--split", source.split, "train | val | test | all")->capture_default_str();
  app->add_flag("--desk", source.desk, "use procedural desk faces instead of a manifest");
  app->add_option("--limit", source.limit, "at most this many faces");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Reconstructed-blend forgery synthesis, detector training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  int threads = 0;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  app.add_option("--threads", threads, "intra-op threads for tensor math (0 = library default)");

  CommonOptions common;
  // Shortcuts for frequently swept keys.
  std::map<std::string, std::string> shortcuts;
  auto shortcut = [&](CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [&shortcuts, key](const std::string& v) { shortcuts[key] = v; }, help);
  };

  auto* synth = app.add_subcommand("synth", "materialise RBI sample shards from genuine faces");
  SynthArgs synth_args;
  add_common(synth, common);
  add_source(synth, synth_args.source, "train");
  synth->add_option("-o,--out", synth_args.out, "output directory");
  synth->add_option("--shard-size", synth_args.shard_size, "samples per shard directory")->capture_default_str();
  shortcut(synth, "--adapter", "synth.adapter", "identity | toy-autoencoder | scripted");
  shortcut(synth, "--adapter-weights", "synth.adapter_weights", "reconstructor weights");

  auto* train = app.add_subcommand("train", "train the detector with online RBI synthesis");
  TrainArgs train_args;
  add_common(train, common);
  add_source(train, train_args.source, "train");
  train->add_option("-o,--out", train_args.out, "run directory");
  train->add_option("--resume", train_args.resume, "checkpoint to resume from");
  train->add_flag("--force", train_args.force, "resume despite a config fingerprint mismatch");
  shortcut(train, "--rho", "train.rho", "SAM neighbourhood size (0 = plain optimizer)");
  shortcut(train, "--lr", "train.lr", "learning rate");
  shortcut(train, "--epochs", "train.epochs", "epochs");
  shortcut(train, "--batch-size", "train.batch_size", "samples per batch");
  shortcut(train, "--max-steps", "train.max_steps", "stop after this many steps");
  shortcut(train, "--lambda1", "train.lambda_1", "map-loss weight");
  shortcut(train, "--lambda2", "train.lambda_2", "edge-loss weight");
  shortcut(train, "--variant", "model.variant", "reference | miniature");
  shortcut(train, "--adapter", "synth.adapter", "identity | toy-autoencoder | scripted");
  shortcut(train, "--adapter-weights", "synth.adapter_weights", "reconstructor weights");

  auto* evaluate = app.add_subcommand("eval", "score a checkpoint and report AUCs");
  EvalArgs eval_args;
  add_common(evaluate, common);
  add_source(evaluate, eval_args.source, "test");
  evaluate->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint")->required();
  evaluate->add_option("-o,--out", eval_args.out, "report directory");
  std::string protocol;
  std::optional<int> frames;
  evaluate->add_option("--protocol", protocol, "frame | video")->check(CLI::IsMember({"frame", "video"}));
  evaluate->add_option("--frames", frames, "frames per video for the chosen protocol");
  shortcut(evaluate, "--adapter-weights", "synth.adapter_weights", "reconstructor weights (desk RBIs)");

  auto* sweep = app.add_subcommand("sweep", "train and score every row of the loss-weight grid");
  SweepArgs sweep_args;
  add_common(sweep, common);
  add_source(sweep, sweep_args.train, "train");
  sweep->add_option("-o,--out", sweep_args.out, "sweep directory");
  sweep->add_option("--rows", sweep_args.rows, "only the first n grid rows");
  shortcut(sweep, "--max-steps", "train.max_steps", "steps per cell");
  shortcut(sweep, "--epochs", "train.epochs", "epochs per cell");

  auto* vis = app.add_subcommand("visualize", "input / edge / map panels for a checkpoint");
  VisualizeArgs vis_args;
  add_common(vis, common);
  add_source(vis, vis_args.source, "test");
  vis->add_option("--checkpoint", vis_args.checkpoint, "model checkpoint")->required();
  vis->add_option("-o,--out", vis_args.out, "panel directory");
  bool genuine_only = false;
  vis->add_flag("--genuine-only", genuine_only, "skip the RBI counterpart of each face");

  auto* config_cmd = app.add_subcommand("config", "configuration inspection");
  config_cmd->require_subcommand(1);
  auto* show = config_cmd->add_subcommand("show", "print the resolved config with provenance comments");
  add_common(show, common);
  bool no_comments = false;
  show->add_flag("--no-comments", no_comments, "plain YAML");
  auto* fingerprint = config_cmd->add_subcommand("fingerprint", "print the resolved config fingerprint");
  add_common(fingerprint, common);

  auto* manifest = app.add_subcommand("manifest", "index a corpus into a frame manifest");
  ManifestArgs manifest_args;
  add_common(manifest, common);
  manifest->add_option("--corpus", manifest_args.corpus, "corpus root")->required();
  manifest->add_option("-o,--out", manifest_args.out, "manifest CSV")->required();
  shortcut(manifest, "--splits", "data.splits", "ratios like 8/1/1 or a video_id,split file");
  shortcut(manifest, "--frames", "data.frames_per_video", "frames per video (0 = all)");

  auto* desk = app.add_subcommand("desk-corpus", "write a procedural face corpus");
  DeskCorpusArgs desk_args;
  add_common(desk, common);
  desk->add_option("-o,--out", desk_args.out, "corpus root")->required();
  desk->add_option("--genuine-videos", desk_args.genuine_videos)->capture_default_str();
  desk->add_option("--fake-videos", desk_args.fake_videos)->capture_default_str();
  desk->add_option("--frames", desk_args.frames_per_video)->capture_default_str();
  desk->add_option("--missing-face-probability", desk_args.missing_face_probability)->capture_default_str();
  desk->add_option("--dataset", desk_args.dataset)->capture_default_str();

  auto* fit = app.add_subcommand("fit-reconstructor", "fit the toy autoencoder reconstructor");
  FitReconstructorArgs fit_args;
  add_common(fit, common);
  add_source(fit, fit_args.source, "train");
  fit->add_option("-o,--out", fit_args.out, "weights file")->required();
  shortcut(fit, "--steps", "desk.autoencoder_steps", "optimisation steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  log::set_level(verbose ? log::Level::kDebug : quiet ? log::Level::kWarn : log::Level::kInfo);
  if (threads > 0) torch::set_num_threads(threads);

  try {
    auto cfg = resolve(common);
    for (const auto& [k, v] : shortcuts) cfg.set(k, v);
    auto out_or_default = [&](std::filesystem::path& out, const std::string& name) {
      if (out.empty()) out = default_run_dir(name, cfg);
    };
    if (synth->parsed()) {
      out_or_default(synth_args.out, "synth");
      return cmd_synth(cfg, synth_args);
    }
    if (train->parsed()) {
      out_or_default(train_args.out, "train");
      return cmd_train(cfg, train_args);
    }
    if (evaluate->parsed()) {
      if (!protocol.empty()) cfg.set("eval.protocol", protocol);
      if (frames) {
        cfg.set(cfg.get("eval.protocol") == "frame" ? "eval.frame_frames" : "eval.video_frames",
                std::to_string(*frames));
      }
      out_or_default(eval_args.out, "eval");
      return cmd_eval(cfg, eval_args);
    }
    if (sweep->parsed()) {
      sweep_args.test = sweep_args.train;
      out_or_default(sweep_args.out, "sweep");
      return cmd_sweep(cfg, sweep_args);
    }
    if (vis->parsed()) {
      vis_args.with_rbi = !genuine_only;
      out_or_default(vis_args.out, "visualize");
      return cmd_visualize(cfg, vis_args);
    }
    if (show->parsed()) return cmd_config_show(cfg, !no_comments);
    if (fingerprint->parsed()) {
      fmt::print("{}\n", cfg.fingerprint());
      return kExitOk;
    }
    if (manifest->parsed()) return cmd_manifest(cfg, manifest_args);
    if (desk->parsed()) return cmd_desk_corpus(cfg, desk_args);
    if (fit->parsed()) return cmd_fit_reconstructor(cfg, fit_args);
  } catch (const std::exception& e) {
    log::error("{}", e.what());
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace rbi::cli
