#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/data/detection.hpp"
#include "rbi/synth/face_record.hpp"

namespace rbi::data {

// One sampled frame. A box of (-1, -1, -1, -1) with all-zero landmarks marks a
// frame where no face could be extracted.
struct ManifestRecord {
  std::string video_id;
  std::string path;  // relative to the corpus root
  int frame_index = 0;
  BBox bbox{-1, -1, -1, -1};
  std::vector<cv::Point2f> landmarks;
  Label label = Label::kGenuine;
  std::string dataset;
  Split split = Split::kTrain;

  bool has_face() const { return bbox.valid(); }
  // Category directory of the corpus layout: "genuine" or a manipulation name.
  std::string manipulation() const;
};

// Either explicit `video_id,split` assignments or train/val/test ratios.
struct SplitSpec {
  std::vector<std::pair<std::string, Split>> assignments;
  std::optional<std::array<int, 3>> ratios;

  // "4/1/1" style ratios, or a path to a `video_id,split` file.
  static SplitSpec parse(std::string_view text);
  static SplitSpec from_file(const std::filesystem::path& path);
  static SplitSpec from_ratios(int train, int val, int test);
};

struct ManifestOptions {
  int frames_per_video = 20;  // 0 keeps every frame
  const DetectionAdapter* detector = nullptr;  // defaults to SidecarDetector
};

struct SkippedVideo {
  std::string video_id;
  std::string reason;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<SkippedVideo> skipped;
};

// Corpus layout: <root>/<dataset>/<genuine|manipulation>/<video_id>/<frames>.
// Records are ordered by (video id, frame index).
Manifest build_manifest(const std::filesystem::path& root, const SplitSpec& splits,
                        const ManifestOptions& options = {});

std::string format_record(const ManifestRecord& record);
ManifestRecord parse_record(std::string_view line);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);
// Throws DataError on malformed lines or a video id listed in two splits.
std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path);

// Throws DataError when a video id appears in more than one split.
void check_split_disjoint(const std::vector<ManifestRecord>& records);

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records, Split split);

// Frames of a video directory (png/jpg, masks excluded), sorted by name.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& video_dir);

}  // namespace rbi::data
