#include "rbi/data/manifest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"
#include "rbi/core/log.hpp"
#include "rbi/data/frames.hpp"

namespace rbi::data {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kFieldCount = 3 + 4 + 2 * kLandmarkCount + 3;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DataError(fmt::format("manifest: bad {} '{}'", what, text));
  return value;
}

bool is_frame_file(const fs::path& p) {
  const auto name = p.filename().string();
  if (name.size() >= 9 && name.ends_with(".mask.png")) return false;
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct VideoDir {
  std::string id;
  fs::path dir;
  std::string dataset;
  Label label;
};

}  // namespace

std::string ManifestRecord::manipulation() const {
  const fs::path p(path);
  auto it = p.begin();
  if (it == p.end() || ++it == p.end()) return label == Label::kGenuine ? "genuine" : "fake";
  return it->string();
}

SplitSpec SplitSpec::from_ratios(int train, int val, int test) {
  if (train < 0 || val < 0 || test < 0 || train + val + test == 0) {
    throw ConfigError("split ratios must be non-negative with a positive sum");
  }
  SplitSpec s;
  s.ratios = std::array<int, 3>{train, val, test};
  return s;
}

SplitSpec SplitSpec::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read split file '{}'", path.string()));
  SplitSpec s;
  std::map<std::string, Split> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_fields(line);
    if (f.size() != 2) throw DataError(fmt::format("split file line '{}' needs 'video_id,split'", line));
    const std::string id(f[0]);
    const Split split = parse_split(f[1]);
    if (auto it = seen.find(id); it != seen.end()) {
      if (it->second != split) {
        throw DataError(fmt::format("video '{}' is assigned to both {} and {}", id, to_string(it->second),
                                    to_string(split)));
      }
      continue;
    }
    seen.emplace(id, split);
    s.assignments.emplace_back(id, split);
  }
  return s;
}

SplitSpec SplitSpec::parse(std::string_view text) {
  const auto a = text.find('/');
  const auto b = a == std::string_view::npos ? a : text.find('/', a + 1);
  if (a != std::string_view::npos && b != std::string_view::npos && !fs::exists(fs::path(text))) {
    try {
      return from_ratios(parse_number<int>(text.substr(0, a), "ratio"),
                         parse_number<int>(text.substr(a + 1, b - a - 1), "ratio"),
                         parse_number<int>(text.substr(b + 1), "ratio"));
    } catch (const DataError&) {
      throw ConfigError(fmt::format("bad split ratios '{}'", text));
    }
  }
  return from_file(fs::path(text));
}

std::vector<fs::path> list_frames(const fs::path& video_dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(video_dir)) return frames;
  for (const auto& e : fs::directory_iterator(video_dir)) {
    if (e.is_regular_file() && is_frame_file(e.path())) frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

Manifest build_manifest(const fs::path& root, const SplitSpec& splits, const ManifestOptions& options) {
  if (!fs::is_directory(root)) throw DataError(fmt::format("corpus root '{}' is not a directory", root.string()));
  if (options.frames_per_video < 0) throw ConfigError("frames_per_video must be non-negative");
  SidecarDetector sidecar;
  const DetectionAdapter& detector = options.detector != nullptr ? *options.detector : sidecar;

  std::vector<VideoDir> videos;
  std::set<std::string> ids;
  for (const auto& dataset : sorted_dirs(root)) {
    for (const auto& category : sorted_dirs(dataset)) {
      const Label label = category.filename() == "genuine" ? Label::kGenuine : Label::kFake;
      for (const auto& vdir : sorted_dirs(category)) {
        const auto id = vdir.filename().string();
        if (!ids.insert(id).second) throw DataError(fmt::format("video id '{}' appears twice in the corpus", id));
        videos.push_back({id, vdir, dataset.filename().string(), label});
      }
    }
  }

  std::map<std::string, Split> assignment;
  if (splits.ratios) {
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& v : videos) order.emplace_back(sha256_hex(v.id), v.id);
    std::sort(order.begin(), order.end());
    const auto& r = *splits.ratios;
    const int total = r[0] + r[1] + r[2];
    const auto n = static_cast<long long>(order.size());
    const long long n_train = std::llround(static_cast<double>(n) * r[0] / total);
    const long long n_val = std::min(n - n_train, std::llround(static_cast<double>(n) * r[1] / total));
    for (long long i = 0; i < n; ++i) {
      assignment[order[static_cast<std::size_t>(i)].second] =
          i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    }
  } else {
    std::map<std::string, Split> seen;
    for (const auto& [id, split] : splits.assignments) {
      auto [it, inserted] = seen.emplace(id, split);
      if (!inserted && it->second != split) {
        throw DataError(fmt::format("video '{}' is assigned to two splits", id));
      }
    }
    assignment = std::move(seen);
  }

  Manifest manifest;
  for (const auto& v : videos) {
    auto split_it = assignment.find(v.id);
    if (split_it == assignment.end()) {
      manifest.skipped.push_back({v.id, "not listed in the split specification"});
      continue;
    }
    const auto frames = list_frames(v.dir);
    if (frames.empty()) {
      log::warn("video '{}' has no readable frames; skipped", v.id);
      manifest.skipped.push_back({v.id, "no frames"});
      continue;
    }
    const int count = static_cast<int>(frames.size());
    const auto indices = options.frames_per_video == 0 ? sample_frames(count, count)
                                                       : sample_frames(count, options.frames_per_video);
    std::vector<ManifestRecord> rows;
    try {
      for (int idx : indices) {
        const auto& fpath = frames[static_cast<std::size_t>(idx)];
        const cv::Mat frame = read_image(fpath);
        ManifestRecord rec;
        rec.video_id = v.id;
        rec.path = fs::relative(fpath, root).generic_string();
        rec.frame_index = idx;
        rec.label = v.label;
        rec.dataset = v.dataset;
        rec.split = split_it->second;
        const auto boxes = detector.detect(fpath, frame);
        std::optional<std::size_t> chosen;
        if (!boxes.empty()) {
          cv::Mat mask;
          if (fs::exists(mask_path(fpath))) mask = read_image(mask_path(fpath));
          cv::Mat gray;
          if (!mask.empty()) cv::extractChannel(mask, gray, 0);
          chosen = resolve_multi_face(boxes, gray.empty() ? nullptr : &gray);
        }
        if (chosen) {
          rec.bbox = boxes[*chosen];
          rec.landmarks = detector.landmarks(fpath, frame, rec.bbox);
        } else {
          rec.landmarks.assign(kLandmarkCount, cv::Point2f(0.f, 0.f));
        }
        rows.push_back(std::move(rec));
      }
    } catch (const DataError& e) {
      log::warn("video '{}' skipped: {}", v.id, e.what());
      manifest.skipped.push_back({v.id, e.what()});
      continue;
    }
    for (auto& r : rows) manifest.records.push_back(std::move(r));
  }
  std::stable_sort(manifest.records.begin(), manifest.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.frame_index) < std::tie(b.video_id, b.frame_index);
  });
  check_split_disjoint(manifest.records);
  return manifest;
}

std::string format_record(const ManifestRecord& r) {
  std::string out = fmt::format("{},{},{},{},{},{},{}", r.video_id, r.path, r.frame_index, r.bbox.x0, r.bbox.y0,
                                r.bbox.x1, r.bbox.y1);
  if (r.landmarks.size() != static_cast<std::size_t>(kLandmarkCount)) {
    throw DataError(fmt::format("record '{}' must carry {} landmarks", r.video_id, kLandmarkCount));
  }
  for (const auto& p : r.landmarks) out += fmt::format(",{},{}", p.x, p.y);
  out += fmt::format(",{},{},{}", to_string(r.label), r.dataset, to_string(r.split));
  return out;
}

ManifestRecord parse_record(std::string_view line) {
  const auto f = split_fields(line);
  if (f.size() != kFieldCount) {
    throw DataError(fmt::format("manifest record has {} fields, expected {}", f.size(), kFieldCount));
  }
  ManifestRecord r;
  r.video_id = std::string(f[0]);
  r.path = std::string(f[1]);
  r.frame_index = parse_number<int>(f[2], "frame index");
  r.bbox = {parse_number<int>(f[3], "bbox"), parse_number<int>(f[4], "bbox"), parse_number<int>(f[5], "bbox"),
            parse_number<int>(f[6], "bbox")};
  for (int i = 0; i < kLandmarkCount; ++i) {
    r.landmarks.emplace_back(parse_number<float>(f[7 + 2 * i], "landmark"),
                             parse_number<float>(f[8 + 2 * i], "landmark"));
  }
  const std::size_t tail = 7 + 2 * kLandmarkCount;
  try {
    r.label = parse_label(f[tail]);
    r.dataset = std::string(f[tail + 1]);
    r.split = parse_split(f[tail + 2]);
  } catch (const Error& e) {
    throw DataError(fmt::format("manifest record '{}': {}", r.video_id, e.what()));
  }
  return r;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
  check_split_disjoint(records);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write manifest '{}'", path.string()));
  out << "# video_id,path,frame_idx,x0,y0,x1,y1,landmarks[" << 2 * kLandmarkCount << "],label,dataset,split\n";
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<ManifestRecord> load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read manifest '{}'", path.string()));
  std::vector<ManifestRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      records.push_back(parse_record(line));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  check_split_disjoint(records);
  return records;
}

void check_split_disjoint(const std::vector<ManifestRecord>& records) {
  std::map<std::string, Split> seen;
  for (const auto& r : records) {
    auto [it, inserted] = seen.emplace(r.video_id, r.split);
    if (!inserted && it->second != r.split) {
      throw DataError(fmt::format("video '{}' appears in both {} and {}", r.video_id, to_string(it->second),
                                  to_string(r.split)));
    }
  }
}

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records, Split split) {
  std::vector<ManifestRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const auto& r) { return r.split == split; });
  return out;
}

}  // namespace rbi::data
