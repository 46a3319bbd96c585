#include "rbi/synth/face_record.hpp"

#include <fmt/format.h>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi {

std::string_view to_string(Label label) {
  return label == Label::kGenuine ? "genuine" : "fake";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Label parse_label(std::string_view text) {
  if (text == "genuine" || text == "real" || text == "0") return Label::kGenuine;
  if (text == "fake" || text == "1") return Label::kFake;
  throw DataError(fmt::format("unknown label '{}'", text));
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw DataError(fmt::format("unknown split '{}'", text));
}

std::string FaceRecord::id() const {
  return fmt::format("{}_{:05d}", provenance.video_id, provenance.frame_index);
}

void FaceRecord::validate() const {
  require_color(image, "face record");
  if (landmarks.size() != static_cast<std::size_t>(kLandmarkCount)) {
    throw DataError(fmt::format("face {}: expected {} landmarks, got {}", id(), kLandmarkCount,
                                landmarks.size()));
  }
  for (const auto& p : landmarks) {
    if (!(p.x >= 0.0f && p.y >= 0.0f && p.x <= image.cols && p.y <= image.rows)) {
      throw DataError(fmt::format("face {}: landmark ({}, {}) outside {}x{} image", id(), p.x, p.y,
                                  image.cols, image.rows));
    }
  }
  if (!bbox.valid()) throw DataError(fmt::format("face {}: degenerate bbox", id()));
}

}  // namespace rbi
