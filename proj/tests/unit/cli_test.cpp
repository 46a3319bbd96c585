#ifdef RBI_HAVE_CLI

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rbi/cli/commands.hpp"
#include "rbi/config/run_config.hpp"
#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"
#include "rbi/data/desk_corpus.hpp"
#include "rbi/data/manifest.hpp"
#include "rbi/synth/reconstructor.hpp"
#include "test_support.hpp"

using namespace rbi;
namespace fs = std::filesystem;
namespace t = rbi::testing;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rbi");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  const auto sink = log::set_sink([](log::Level, std::string_view) {});
  const int code = cli::run(static_cast<int>(argv.size()), argv.data());
  log::set_sink(sink);
  return code;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// relative path -> content digest, for every file under `dir`
std::map<std::string, std::string> digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = sha256_hex(read_file(e.path()));
  }
  return out;
}

// Ten single-frame genuine videos plus four identity-adapter fakes, with a manifest.
class CliCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new t::TempDir("cli");
    data::DeskCorpusOptions o;
    o.genuine_videos = 10;
    o.fake_videos = 4;
    o.frames_per_video = 3;
    o.render.frame_size = 48;
    o.seed = 5;
    synth::IdentityAdapter adapter;
    data::write_desk_corpus(dir_->path() / "corpus", o, &adapter);
    ASSERT_EQ(run_cli({"manifest", "--corpus", (dir_->path() / "corpus").string(), "-o", manifest().string(),
                       "--frames", "1", "--splits", "1/0/0"}),
              0);
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path manifest() { return dir_->path() / "corpus" / "manifest.csv"; }
  static fs::path path(const std::string& name) { return dir_->path() / name; }

  static t::TempDir* dir_;
};

t::TempDir* CliCorpus::dir_ = nullptr;

}  // namespace

TEST(CliExitCodes, ErrorClassesMapToDistinctCodes) {
  EXPECT_EQ(cli::exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(ParameterError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(DataError("x")), 3);
  EXPECT_EQ(cli::exit_code_for(NumericError("x")), 4);
  EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), 1);
}

TEST(CliExitCodes, BadArgumentsAndKeys) {
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"config", "show", "--set", "train.nope=1"}), 2);
  EXPECT_EQ(run_cli({"config", "show", "--set", "train.lr=abc"}), 2);
  EXPECT_EQ(run_cli({"config", "show", "--preset", "missing"}), 2);
  EXPECT_EQ(run_cli({"synth", "--manifest", "/nonexistent/manifest.csv", "-o", "/tmp/rbi-cli-never"}), 3);
  EXPECT_FALSE(fs::exists("/tmp/rbi-cli-never/shards"));
}

TEST(CliConfig, ShowPrintsEveryDefaultWithComment) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"config", "show"}), 0);
  const auto out = ::testing::internal::GetCapturedStdout();
  for (const auto& e : config::registry()) {
    EXPECT_NE(out.find("# " + e.comment), std::string::npos) << e.key;
  }
  config::RunConfig back;
  back.merge_yaml(out);
  EXPECT_EQ(back.fingerprint(), config::RunConfig().fingerprint());
}

TEST(CliConfig, FingerprintFollowsOverrides) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"config", "fingerprint", "--seed", "7", "--set", "train.lr=0.01"}), 0);
  const auto out = ::testing::internal::GetCapturedStdout();
  config::RunConfig cfg;
  cfg.set("seed", "7");
  cfg.set("train.lr", "0.01");
  EXPECT_EQ(out, cfg.fingerprint() + "\n");
}

TEST_F(CliCorpus, SynthTenFacesWritesTenSamplesAndSummary) {
  const auto out = path("synth10");
  ::testing::internal::CaptureStdout();
  const int code = run_cli({"synth", "--manifest", manifest().string(), "--split", "all", "--adapter", "identity",
                            "--seed", "3", "-o", out.string()});
  ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(code, 0);
  int images = 0, metas = 0;
  for (const auto& e : fs::recursive_directory_iterator(out / "shards")) {
    const auto name = e.path().filename().string();
    images += name.ends_with(".image.png");
    metas += name.ends_with(".json");
  }
  EXPECT_EQ(images, 10);
  EXPECT_EQ(metas, 10);
  const auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  EXPECT_EQ(summary["requested"], 10);
  EXPECT_EQ(summary["generated"], 10);
  EXPECT_EQ(summary["failed"], 0);
  int alpha_total = 0, variant_total = 0;
  for (const auto& [k, v] : summary["alpha_histogram"].items()) alpha_total += v.get<int>();
  for (const auto& [k, v] : summary["variant_histogram"].items()) variant_total += v.get<int>();
  EXPECT_EQ(alpha_total, 10);
  EXPECT_EQ(variant_total, 10);
  EXPECT_FALSE(fs::exists(out / "errors.jsonl"));
}

TEST_F(CliCorpus, SynthSeedSevenIsByteIdentical) {
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"seed7a", "seed7b"}) {
    ::testing::internal::CaptureStdout();
    ASSERT_EQ(run_cli({"synth", "--manifest", manifest().string(), "--split", "all", "--adapter", "identity", "--seed",
                       "7", "--workers", name[5] == 'a' ? "1" : "3", "-o", path(name).string()}),
              0);
    ::testing::internal::GetCapturedStdout();
    runs.push_back(digests(path(name) / "shards"));
  }
  EXPECT_EQ(runs[0].size(), 40u);  // image, mask, edge, json per sample
  EXPECT_EQ(runs[0], runs[1]);
}

TEST_F(CliCorpus, EmptyManifestExitsWithDataCodeAndNoShards) {
  data::write_manifest(path("empty.csv"), {});
  EXPECT_EQ(run_cli({"synth", "--manifest", path("empty.csv").string(), "--adapter", "identity", "-o",
                     path("synth_empty").string()}),
            3);
  EXPECT_FALSE(fs::exists(path("synth_empty") / "shards"));
  EXPECT_FALSE(fs::exists(path("synth_empty") / "summary.json"));
}

TEST_F(CliCorpus, TrainEvalVisualizeWriteResolvedConfig) {
  const auto run = path("train");
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run_cli({"train", "--manifest", manifest().string(), "--split", "all", "--adapter", "identity", "--rho",
                     "0", "--batch-size", "4", "--epochs", "1", "--max-steps", "2", "--lr", "0.01", "-o",
                     run.string()}),
            0);
  ::testing::internal::GetCapturedStdout();
  config::RunConfig saved;
  saved.merge_file(run / "config.yaml");
  EXPECT_EQ(saved.get_float("train.rho"), 0.0);
  EXPECT_EQ(saved.get_int("train.max_steps"), 2);
  EXPECT_EQ(read_file(run / "config.yaml").substr(0, 15 + 64), "# fingerprint: " + saved.fingerprint());
  const auto ckpt = run / "checkpoints" / "final.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  std::ifstream log(run / "train_log.jsonl");
  std::string line;
  int steps = 0;
  while (std::getline(log, line)) ++steps;
  EXPECT_EQ(steps, 2);

  const auto eval_dir = path("eval");
  ::testing::internal::CaptureStdout();
  const int code = run_cli({"eval", "--manifest", manifest().string(), "--split", "all", "--checkpoint", ckpt.string(),
                            "--protocol", "video", "--frames", "32", "-o", eval_dir.string()});
  ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(code, 0);
  config::RunConfig eval_cfg;
  eval_cfg.merge_file(eval_dir / "config.yaml");
  EXPECT_EQ(eval_cfg.get("eval.protocol"), "video");
  EXPECT_EQ(eval_cfg.get_int("eval.video_frames"), 32);
  const auto report = nlohmann::json::parse(read_file(eval_dir / "report.json"));
  EXPECT_EQ(report["protocol"], "video");
  EXPECT_EQ(report["fingerprint"], eval_cfg.fingerprint());
  ASSERT_FALSE(report["cells"].empty());
  EXPECT_EQ(report["cells"][0]["positives"], 4);
  EXPECT_EQ(report["cells"][0]["negatives"], 10);

  const auto vis_dir = path("vis");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"visualize", "--manifest", manifest().string(), "--split", "all", "--limit", "2",
                     "--genuine-only", "--checkpoint", ckpt.string(), "-o", vis_dir.string()}),
            0);
  ::testing::internal::GetCapturedStdout();
  EXPECT_TRUE(fs::exists(vis_dir / "config.yaml"));
  int pngs = 0;
  for (const auto& e : fs::directory_iterator(vis_dir)) pngs += e.path().extension() == ".png";
  EXPECT_EQ(pngs, 2);
}

TEST_F(CliCorpus, TrainRhoZeroRepeatsExactly) {
  std::vector<std::string> logs;
  for (const char* name : {"rho0a", "rho0b"}) {
    ::testing::internal::CaptureStdout();
    ASSERT_EQ(run_cli({"train", "--manifest", manifest().string(), "--split", "all", "--adapter", "identity", "--rho",
                       "0", "--batch-size", "4", "--max-steps", "3", "--seed", "4", "-o", path(name).string()}),
              0);
    ::testing::internal::GetCapturedStdout();
    logs.push_back(read_file(path(name) / "train_log.jsonl"));
  }
  EXPECT_FALSE(logs[0].empty());
  EXPECT_EQ(logs[0], logs[1]);
}

#endif  // RBI_HAVE_CLI
