#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbi/config/run_config.hpp"
#include "rbi/model/mfrn.hpp"
#include "rbi/synth/face_record.hpp"
#include "rbi/synth/reconstructor.hpp"

namespace rbi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitPartial = 5,
};

int exit_code_for(const std::exception& e);

// Options shared by every command that resolves a RunConfig.
struct CommonOptions {
  std::vector<std::string> config_files;
  std::vector<std::string> presets;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

// defaults <- files (in order) <- presets <- overrides <- --seed/--workers
config::RunConfig resolve(const CommonOptions& options);

// <base>/<command>-<fingerprint prefix>-<UTC timestamp>
std::filesystem::path default_run_dir(const std::string& command, const config::RunConfig& cfg,
                                      const std::filesystem::path& base = "runs");

// Faces come either from a manifest (+ corpus root) or from the procedural desk generator.
struct FaceSource {
  std::filesystem::path manifest;
  std::filesystem::path corpus;
  std::string split = "train";  // train | val | test | all
  bool desk = false;
  int limit = -1;
};

// Genuine faces of the requested split (desk: desk.faces train faces, or
// desk.test_faces held-out faces when split is test).
std::vector<FaceRecord> load_faces(const config::RunConfig& cfg, const FaceSource& source);

// Reconstructor named by synth.adapter. A toy autoencoder without weights is
// fitted on `fit_pool` (and saved to `save_to`) when a pool is given.
std::shared_ptr<synth::ReconstructorAdapter> load_adapter(const config::RunConfig& cfg,
                                                          const std::vector<FaceRecord>* fit_pool = nullptr,
                                                          const std::filesystem::path& save_to = {});

// Model architecture from the checkpoint's variant and the config's other model keys.
model::Mfrn load_model(const config::RunConfig& cfg, const std::filesystem::path& checkpoint);

struct SynthArgs {
  FaceSource source;
  std::filesystem::path out;
  int shard_size = 256;
};
int cmd_synth(const config::RunConfig& cfg, const SynthArgs& args);

struct TrainArgs {
  FaceSource source;
  std::filesystem::path out;
  std::filesystem::path resume;
  bool force = false;
};
int cmd_train(const config::RunConfig& cfg, const TrainArgs& args);

struct EvalArgs {
  FaceSource source;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
};
int cmd_eval(const config::RunConfig& cfg, const EvalArgs& args);

struct SweepArgs {
  FaceSource train;
  FaceSource test;
  std::filesystem::path out;
  int rows = -1;  // first n rows of the grid; -1 = all
};
int cmd_sweep(const config::RunConfig& cfg, const SweepArgs& args);

struct VisualizeArgs {
  FaceSource source;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  bool with_rbi = true;  // also render an RBI of every face
};
int cmd_visualize(const config::RunConfig& cfg, const VisualizeArgs& args);

struct ManifestArgs {
  std::filesystem::path corpus;
  std::filesystem::path out;
};
int cmd_manifest(const config::RunConfig& cfg, const ManifestArgs& args);

struct DeskCorpusArgs {
  std::filesystem::path out;
  int genuine_videos = 20;
  int fake_videos = 0;
  int frames_per_video = 8;
  double missing_face_probability = 0.0;
  std::string dataset = "desk";
};
int cmd_desk_corpus(const config::RunConfig& cfg, const DeskCorpusArgs& args);

struct FitReconstructorArgs {
  FaceSource source;
  std::filesystem::path out;
};
int cmd_fit_reconstructor(const config::RunConfig& cfg, const FitReconstructorArgs& args);

int cmd_config_show(const config::RunConfig& cfg, bool with_comments);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace rbi::cli
