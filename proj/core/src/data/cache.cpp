#include "rbi/data/cache.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "rbi/core/digest.hpp"
#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi::data {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'R', 'B', 'I', 'C'};

std::string temp_suffix() {
  static std::atomic<unsigned long long> counter{0};
  return fmt::format(".tmp.{}.{}", std::hash<std::thread::id>{}(std::this_thread::get_id()), counter++);
}

}  // namespace

CropCache::CropCache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::optional<CropCache> CropCache::from_env() {
  const char* env = std::getenv(kCacheRootEnv);
  if (env == nullptr || *env == '\0') return std::nullopt;
  return CropCache(env);
}

std::string CropCache::key(const ManifestRecord& r, const CropOptions& o) {
  return sha256_hex(fmt::format("{}|{}|{}|{},{},{},{}|{}|{}", r.video_id, r.path, r.frame_index, r.bbox.x0, r.bbox.y0,
                                r.bbox.x1, r.bbox.y1, o.size, o.margin));
}

fs::path CropCache::entry_path(const std::string& key) const { return root_ / key.substr(0, 2) / (key + ".crop"); }

std::optional<CachedCrop> CropCache::get(const std::string& key) const {
  std::ifstream in(entry_path(key), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::int32_t rows = 0, cols = 0, count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kMagic, 4) != 0 || rows <= 0 || cols <= 0 || count < 0) {
    throw DataError(fmt::format("corrupt cache entry '{}'", entry_path(key).string()));
  }
  CachedCrop c;
  c.landmarks.resize(static_cast<std::size_t>(count));
  in.read(reinterpret_cast<char*>(c.landmarks.data()), static_cast<std::streamsize>(count * sizeof(cv::Point2f)));
  c.image.create(rows, cols, CV_32FC3);
  in.read(reinterpret_cast<char*>(c.image.data), static_cast<std::streamsize>(c.image.total() * c.image.elemSize()));
  if (!in) throw DataError(fmt::format("truncated cache entry '{}'", entry_path(key).string()));
  return c;
}

void CropCache::put(const std::string& key, const CachedCrop& crop) const {
  require_color(crop.image, "crop cache");
  const cv::Mat image = crop.image.isContinuous() ? crop.image : crop.image.clone();
  const auto path = entry_path(key);
  fs::create_directories(path.parent_path());
  const auto tmp = path.string() + temp_suffix();
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write cache entry '{}'", tmp));
    const std::int32_t rows = image.rows, cols = image.cols, count = static_cast<std::int32_t>(crop.landmarks.size());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(crop.landmarks.data()),
              static_cast<std::streamsize>(count * sizeof(cv::Point2f)));
    out.write(reinterpret_cast<const char*>(image.data), static_cast<std::streamsize>(image.total() * image.elemSize()));
    if (!out) throw DataError(fmt::format("cannot write cache entry '{}'", tmp));
  }
  fs::rename(tmp, path);
}

std::optional<FaceRecord> load_face(const ManifestRecord& record, const fs::path& corpus_root,
                                    const CropOptions& options, const CropCache* cache) {
  if (!record.has_face()) return std::nullopt;
  CachedCrop crop;
  std::string key;
  std::optional<CachedCrop> hit;
  if (cache != nullptr) {
    key = CropCache::key(record, options);
    hit = cache->get(key);
  }
  if (hit) {
    crop = std::move(*hit);
  } else {
    const cv::Mat frame = read_image(corpus_root / record.path);
    auto c = crop_and_resize(frame, record.bbox, record.landmarks, options);
    const auto size = static_cast<float>(options.size);
    for (auto& p : c.landmarks) {
      p.x = std::clamp(p.x, 0.0f, size);
      p.y = std::clamp(p.y, 0.0f, size);
    }
    crop = {c.image, c.landmarks};
    if (cache != nullptr) cache->put(key, crop);
  }
  FaceRecord face;
  face.image = crop.image;
  face.landmarks = crop.landmarks;
  face.bbox = record.bbox;
  face.label = record.label;
  face.provenance = {record.video_id, record.frame_index, record.split, record.dataset};
  return face;
}

}  // namespace rbi::data
