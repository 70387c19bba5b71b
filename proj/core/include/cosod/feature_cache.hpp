#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cosod/feature_map.hpp"

namespace cosod {

/// One manifest row. The payload is row-major [C,H,W] little-endian float32.
struct FeatureCacheEntry {
    std::string image_id; // dataset-unique key, "group/image"
    std::string backend_id;
    std::string config_hash;
    int channels = 0;
    int height = 0;
    int width = 0;
    int image_h = 0;
    int image_w = 0;
    std::string dtype_tag = "f32";
    std::string payload_path; // relative to the backend directory

    std::size_t payload_bytes() const {
        return static_cast<std::size_t>(channels) * height * width * sizeof(float);
    }
};

/// Feature store at `<root>/<backend_id>/manifest.json` plus one `.bin` per
/// image. Reads are safe concurrently; writes to one root must come from a
/// single writer at a time.
class FeatureCache {
  public:
    explicit FeatureCache(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Writes the payload and upserts the manifest entry.
    FeatureCacheEntry save(const std::string& image_id, const std::string& config_hash, const FeatureMap& data);

    /// std::nullopt on a cache miss (no entry, or a stale config hash).
    /// Throws CorruptionError when the payload disagrees with the manifest.
    std::optional<FeatureMap> load(const std::string& image_id, const std::string& backend_id,
                                   const std::string& config_hash) const;

    std::vector<FeatureCacheEntry> entries(const std::string& backend_id) const;

  private:
    std::filesystem::path backend_dir(const std::string& backend_id) const;

    std::filesystem::path root_;
};

} // namespace cosod
