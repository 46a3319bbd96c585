#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "rbi/data/crop.hpp"
#include "rbi/data/manifest.hpp"

namespace rbi::data {

inline constexpr const char* kCacheRootEnv = "RBI_CACHE_ROOT";

struct CachedCrop {
  cv::Mat image;
  std::vector<cv::Point2f> landmarks;
};

// Content-addressed crop store. Writes go to a temporary file that is renamed
// into place, so readers never see a partial entry.
class CropCache {
 public:
  explicit CropCache(std::filesystem::path root);
  // Uses $RBI_CACHE_ROOT; nullopt when unset or empty.
  static std::optional<CropCache> from_env();

  // Keyed by (video, frame, box, crop options).
  static std::string key(const ManifestRecord& record, const CropOptions& options);

  std::optional<CachedCrop> get(const std::string& key) const;
  void put(const std::string& key, const CachedCrop& crop) const;
  std::filesystem::path entry_path(const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// Reads the frame, crops it and packages a FaceRecord. nullopt for
// face-extraction placeholders.
std::optional<FaceRecord> load_face(const ManifestRecord& record, const std::filesystem::path& corpus_root,
                                    const CropOptions& options, const CropCache* cache = nullptr);

}  // namespace rbi::data
