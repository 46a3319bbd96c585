#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbi/data/cache.hpp"
#include "rbi/data/crop.hpp"
#include "rbi/data/manifest.hpp"
#include "rbi/model/mfrn.hpp"

namespace rbi::eval {

enum class Granularity { kFrame, kVideo };
std::string to_string(Granularity g);

struct ScoreRow {
  std::string unit_id;
  Granularity granularity = Granularity::kFrame;
  double score = 0.5;
  int label = 0;
  std::string dataset;
  std::string manipulation;
  int frames_used = 1;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  // Finite scores in [0, 1], binary labels, unique ids per granularity.
  void validate() const;
  std::vector<double> scores() const;
  std::vector<int> labels() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Fake-class probability for each face.
using FrameScorer = std::function<std::vector<double>(const std::vector<FaceRecord>&)>;

// Inference-mode scorer over batches of `batch_size` faces.
FrameScorer model_scorer(model::Mfrn model, int batch_size = 32);

struct ProtocolOptions {
  int frames = 5;
  std::filesystem::path corpus_root;
  data::CropOptions crop;
  const data::CropCache* cache = nullptr;
};

// Evenly spaced subset of one video's rows (rows must share a video id).
std::vector<data::ManifestRecord> select_video_frames(std::vector<data::ManifestRecord> rows, int n);

// Mean of the available frame scores; 0.5 when there are none.
double aggregate_video_score(std::span<const double> frame_scores);

// One row per scored frame; frames without a face are skipped and logged.
ScoreTable frame_level_eval(const FrameScorer& scorer, const std::vector<data::ManifestRecord>& records,
                            const ProtocolOptions& options);

// One row per video: mean over available frames, 0.5 with none.
ScoreTable video_level_eval(const FrameScorer& scorer, const std::vector<data::ManifestRecord>& records,
                            const ProtocolOptions& options);

}  // namespace rbi::eval
