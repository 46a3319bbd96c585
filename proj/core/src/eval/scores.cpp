#include "rbi/eval/scores.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "rbi/core/error.hpp"
#include "rbi/core/log.hpp"
#include "rbi/core/tensor_bridge.hpp"
#include "rbi/data/frames.hpp"

namespace rbi::eval {

std::string to_string(Granularity g) { return g == Granularity::kFrame ? "frame" : "video"; }

void ScoreTable::validate() const {
  std::set<std::pair<Granularity, std::string>> ids;
  for (const auto& r : rows) {
    if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 1.0) {
      throw NumericError(fmt::format("score of '{}' is not a probability", r.unit_id));
    }
    if (r.label != 0 && r.label != 1) throw DataError(fmt::format("label of '{}' is not binary", r.unit_id));
    if (!ids.emplace(r.granularity, r.unit_id).second) {
      throw DataError(fmt::format("unit '{}' appears twice", r.unit_id));
    }
  }
}

std::vector<double> ScoreTable::scores() const {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.score);
  return out;
}

std::vector<int> ScoreTable::labels() const {
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

void ScoreTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "unit_id,granularity,score,label,dataset,manipulation,frames_used\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", r.unit_id, to_string(r.granularity), r.score, r.label, r.dataset,
                       r.manipulation, r.frames_used);
  }
}

FrameScorer model_scorer(model::Mfrn model, int batch_size) {
  if (batch_size < 1) throw ConfigError("scoring batch size must be positive");
  return [model, batch_size](const std::vector<FaceRecord>& faces) mutable {
    model->eval();
    torch::NoGradGuard guard;
    std::vector<double> out;
    out.reserve(faces.size());
    for (std::size_t i = 0; i < faces.size(); i += static_cast<std::size_t>(batch_size)) {
      std::vector<torch::Tensor> xs;
      for (std::size_t k = i; k < std::min(faces.size(), i + static_cast<std::size_t>(batch_size)); ++k) {
        xs.push_back(to_tensor(faces[k].image));
      }
      const auto p = model->forward(torch::stack(xs)).p_fake.to(torch::kDouble).contiguous();
      out.insert(out.end(), p.data_ptr<double>(), p.data_ptr<double>() + p.numel());
    }
    return out;
  };
}

std::vector<data::ManifestRecord> select_video_frames(std::vector<data::ManifestRecord> rows, int n) {
  if (rows.empty()) return rows;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
  std::vector<data::ManifestRecord> out;
  for (int i : data::sample_frames(static_cast<int>(rows.size()), n)) out.push_back(rows[static_cast<std::size_t>(i)]);
  return out;
}

double aggregate_video_score(std::span<const double> frame_scores) {
  if (frame_scores.empty()) return 0.5;
  return std::accumulate(frame_scores.begin(), frame_scores.end(), 0.0) / static_cast<double>(frame_scores.size());
}

namespace {

std::map<std::string, std::vector<data::ManifestRecord>> by_video(const std::vector<data::ManifestRecord>& records) {
  std::map<std::string, std::vector<data::ManifestRecord>> out;
  for (const auto& r : records) out[r.video_id].push_back(r);
  return out;
}

// Loaded faces paired with their records; extraction failures are dropped.
std::vector<std::pair<data::ManifestRecord, FaceRecord>> load_faces(const std::vector<data::ManifestRecord>& rows,
                                                                    const ProtocolOptions& o) {
  std::vector<std::pair<data::ManifestRecord, FaceRecord>> out;
  for (const auto& r : rows) {
    try {
      auto face = data::load_face(r, o.corpus_root, o.crop, o.cache);
      if (!face) {
        log::info("no face in '{}' frame {}; skipped", r.video_id, r.frame_index);
        continue;
      }
      out.emplace_back(r, std::move(*face));
    } catch (const DataError& e) {
      log::warn("frame '{}' of '{}' could not be loaded: {}", r.frame_index, r.video_id, e.what());
    }
  }
  return out;
}

std::vector<double> score_faces(const FrameScorer& scorer,
                                const std::vector<std::pair<data::ManifestRecord, FaceRecord>>& faces) {
  if (faces.empty()) return {};
  std::vector<FaceRecord> batch;
  for (const auto& [r, f] : faces) batch.push_back(f);
  auto scores = scorer(batch);
  if (scores.size() != faces.size()) throw ShapeError("scorer returned the wrong number of scores");
  return scores;
}

}  // namespace

ScoreTable frame_level_eval(const FrameScorer& scorer, const std::vector<data::ManifestRecord>& records,
                            const ProtocolOptions& options) {
  ScoreTable table;
  for (const auto& [id, rows] : by_video(records)) {
    const auto faces = load_faces(select_video_frames(rows, options.frames), options);
    const auto scores = score_faces(scorer, faces);
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const auto& r = faces[i].first;
      table.rows.push_back({fmt::format("{}/{:06d}", r.video_id, r.frame_index), Granularity::kFrame, scores[i],
                            r.label == Label::kFake ? 1 : 0, r.dataset, r.manipulation(), 1});
    }
  }
  table.validate();
  return table;
}

ScoreTable video_level_eval(const FrameScorer& scorer, const std::vector<data::ManifestRecord>& records,
                            const ProtocolOptions& options) {
  ScoreTable table;
  for (const auto& [id, rows] : by_video(records)) {
    const auto faces = load_faces(select_video_frames(rows, options.frames), options);
    const auto scores = score_faces(scorer, faces);
    if (faces.empty()) log::warn("video '{}' has no extractable faces; scored 0.5", id);
    const auto& r = rows.front();
    table.rows.push_back({id, Granularity::kVideo, aggregate_video_score(scores), r.label == Label::kFake ? 1 : 0,
                          r.dataset, r.manipulation(), static_cast<int>(faces.size())});
  }
  table.validate();
  return table;
}

}  // namespace rbi::eval
