#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "rbi/config/run_config.hpp"
#include "rbi/core/error.hpp"
#include "test_support.hpp"

using namespace rbi;
using namespace rbi::config;
namespace t = rbi::testing;

TEST(RunConfig, DefaultsCoverRegistry) {
  RunConfig cfg;
  std::set<std::string> keys;
  for (const auto& e : registry()) {
    EXPECT_TRUE(keys.insert(e.key).second) << "duplicate " << e.key;
    EXPECT_FALSE(e.comment.empty()) << e.key;
    EXPECT_EQ(cfg.get(e.key), e.default_value) << e.key;
  }
  EXPECT_EQ(cfg.values().size(), keys.size());
}

TEST(RunConfig, ReportedHyperparametersReachable) {
  RunConfig cfg;
  EXPECT_EQ(cfg.get_float("train.lr"), 0.001);
  EXPECT_EQ(cfg.get_int("train.batch_size"), 32);
  EXPECT_EQ(cfg.get_int("train.epochs"), 80);
  EXPECT_EQ(cfg.get_float("train.rho"), 0.05);
  EXPECT_EQ(cfg.get_float("train.lambda_1"), 50);
  EXPECT_EQ(cfg.get_float("train.lambda_2"), 100);
  EXPECT_EQ(cfg.get_int("data.frames_per_video"), 20);
  EXPECT_EQ(cfg.get_int("eval.frame_frames"), 5);
  EXPECT_EQ(cfg.get_int("eval.video_frames"), 32);
  EXPECT_EQ(cfg.get_range("synth.alpha").lo, 0.5);
  EXPECT_EQ(cfg.get_range("synth.alpha").hi, 1.0);
}

TEST(RunConfig, FingerprintIsStableAndValueSensitive) {
  RunConfig a, b;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint().size(), 64u);
  b.set("train.lr", "1e-3");
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.set("train.lr", "0.0010");
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.set("train.lr", "0.002");
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(RunConfig, FingerprintIsHashOfCanonicalText) {
  RunConfig cfg;
  std::istringstream lines(cfg.canonical());
  std::string line, previous;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    EXPECT_NE(line.find('='), std::string::npos);
    EXPECT_LT(previous, line);
    previous = line;
    ++n;
  }
  EXPECT_EQ(n, registry().size());
}

TEST(RunConfig, UnknownAndMalformedKeysRejected) {
  RunConfig cfg;
  EXPECT_THROW(cfg.set("train.learning_rate", "0.1"), ConfigError);
  EXPECT_THROW(cfg.merge_yaml("train:\n  lrr: 0.1\n"), ConfigError);
  EXPECT_THROW(cfg.set("train.lr", "fast"), ConfigError);
  EXPECT_THROW(cfg.set("train.epochs", "1.5"), ConfigError);
  EXPECT_THROW(cfg.set("synth.alpha", "[0.9, 0.1]"), Error);
  EXPECT_THROW(cfg.set("model.attention", "maybe"), ConfigError);
  EXPECT_THROW(cfg.set(std::string_view("train.lr")), ConfigError);
  EXPECT_THROW(cfg.merge_yaml("[1, 2]"), ConfigError);
  EXPECT_THROW(cfg.merge_yaml("a: [unclosed"), ConfigError);
  EXPECT_THROW(cfg.apply_preset("nope"), ConfigError);
}

TEST(RunConfig, YamlRoundTripPreservesFingerprint) {
  RunConfig cfg;
  cfg.set("train.lr=0.05");
  cfg.set("synth.hull.variants", "full,dilated");
  cfg.set("model.pretrained_backbone", "weights/stem.pt");
  cfg.set("synth.alpha", "[0.6, 0.9]");
  RunConfig back;
  back.merge_yaml(cfg.to_yaml(true));
  EXPECT_EQ(back.canonical(), cfg.canonical());
  RunConfig plain;
  plain.merge_yaml(cfg.to_yaml(false));
  EXPECT_EQ(plain.fingerprint(), cfg.fingerprint());
}

TEST(RunConfig, WrittenFileReloads) {
  t::TempDir dir("cfg");
  RunConfig cfg;
  cfg.set("seed", "7");
  cfg.write(dir / "config.yaml");
  std::ifstream in(dir / "config.yaml");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# fingerprint: " + cfg.fingerprint());
  RunConfig back;
  back.merge_file(dir / "config.yaml");
  EXPECT_EQ(back.fingerprint(), cfg.fingerprint());
  EXPECT_THROW(back.merge_file(dir / "missing.yaml"), ConfigError);
}

TEST(RunConfig, LaterLayersWin) {
  t::TempDir dir("cfg");
  std::ofstream(dir / "a.yaml") << "train:\n  lr: 0.1\n  epochs: 3\n";
  std::ofstream(dir / "b.yaml") << "train:\n  lr: 0.2\n";
  RunConfig cfg;
  cfg.merge_file(dir / "a.yaml");
  cfg.merge_file(dir / "b.yaml");
  EXPECT_EQ(cfg.get_float("train.lr"), 0.2);
  EXPECT_EQ(cfg.get_int("train.epochs"), 3);
  cfg.apply_preset("loss-main-text");
  EXPECT_EQ(cfg.get_float("train.lambda_1"), 100);
  EXPECT_EQ(cfg.get_float("train.lambda_2"), 50);
  cfg.set("train.lambda_1=7");
  EXPECT_EQ(cfg.get_float("train.lambda_1"), 7);
}

TEST(RunConfig, PresetsOnlyUseKnownKeys) {
  for (const auto& [name, values] : presets()) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.apply_preset(name)) << name;
    for (const auto& [k, v] : values) EXPECT_EQ(cfg.get(k), v) << name << " " << k;
  }
  RunConfig best;
  best.apply_preset("loss-best");
  EXPECT_EQ(best.fingerprint(), RunConfig().fingerprint());
}

TEST(Bindings, TrainConfigFollowsKeys) {
  RunConfig cfg;
  cfg.set("train.rho=0");
  cfg.set("train.lr=0.01");
  cfg.set("train.batch_size=8");
  cfg.set("seed=9");
  cfg.set("train.lambda_1=25");
  const auto tc = train_config(cfg);
  EXPECT_EQ(tc.rho, 0.0);
  EXPECT_EQ(tc.lr, 0.01);
  EXPECT_EQ(tc.batch_size, 8);
  EXPECT_EQ(tc.seed, 9u);
  EXPECT_EQ(tc.weights.lambda_map, 25);
  EXPECT_EQ(tc.weights.lambda_edge, 100);
  EXPECT_EQ(tc.fingerprint, cfg.fingerprint());
  EXPECT_EQ(tc.model.input_size, 64);
}

TEST(Bindings, ModelAndSynthConfigs) {
  RunConfig cfg;
  cfg.apply_preset("reference");
  EXPECT_EQ(model_config(cfg).input_size, 380);
  cfg.set("synth.hull.variants", "[full]");
  cfg.set("synth.alpha", "[0.7, 0.8]");
  const auto s = synth_config(cfg);
  ASSERT_EQ(s.hull.variants.size(), 1u);
  EXPECT_EQ(s.alpha.lo, 0.7);
  cfg.set("synth.alpha", "[0.2, 0.8]");
  EXPECT_THROW(synth_config(cfg), ConfigError);
  cfg.set("synth.adapter", "magic");
  EXPECT_THROW(adapter_kind(cfg), ConfigError);
  cfg.set("train.rho", "-1");
  EXPECT_THROW(train_config(cfg), ConfigError);
}
