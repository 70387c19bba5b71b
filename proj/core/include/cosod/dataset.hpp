#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "cosod/feature_map.hpp"

namespace cosod {

/// Per-pixel score in [0,1], row-major, at source-image resolution.
/// Used for ground truth, external saliency inputs and predictions.
struct SaliencyMap {
    std::string group_id;
    std::string image_id;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    static SaliencyMap filled(int height, int width, double value);

    ImageSize size() const { return {height, width}; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }

    /// Throws ShapeError if the payload size is wrong or a value leaves [0,1].
    void validate() const;
};

struct ImageRecord {
    std::string image_id;
    std::string group_id;
    std::filesystem::path path;
    cv::Mat pixels; // CV_8UC3, RGB order; empty when scanned without loading
    int height = 0;
    int width = 0;
    std::optional<SaliencyMap> ground_truth;

    ImageSize size() const { return {height, width}; }
    /// "group/image", unique across a dataset.
    std::string key() const { return group_id + "/" + image_id; }
};

struct GroupRecord {
    std::string group_id;
    std::vector<ImageRecord> members;
};

struct ScanOptions {
    std::optional<std::filesystem::path> gt_dir;
    /// Fail when a group has GT for some images but not all.
    bool require_complete_gt = false;
    /// When false only paths are enumerated; call load_group_pixels later.
    bool load_pixels = true;
};

struct ScanResult {
    std::vector<GroupRecord> groups;
    std::vector<std::string> warnings;
};

/// Enumerates `<root>/<group>/<image>.{png,jpg,jpeg}`. Groups and members are
/// sorted lexicographically; empty group directories are skipped with a warning.
ScanResult scan_dataset(const std::filesystem::path& root, const ScanOptions& options = {});

/// Loads pixels (and sizes) for every member that has not been loaded yet.
void load_group_pixels(GroupRecord& group);

/// Reads an image as RGB; throws DatasetError naming the file on failure.
cv::Mat read_rgb_image(const std::filesystem::path& path);

/// Reads an 8-bit grayscale image divided by 255.
SaliencyMap read_saliency_png(const std::filesystem::path& path);

/// Writes `<out_dir>/<group_id>/<image_id>.png` with value round(255 v).
std::filesystem::path write_prediction(const SaliencyMap& map, const std::filesystem::path& out_dir);

/// Quantizes a [0,1] value to 8 bits with round-half-up.
unsigned char quantize_unit(double v);

/// Binarizes at 128/255: values >= 128/255 become 1.
SaliencyMap binarize_ground_truth(const SaliencyMap& gt);

bool is_image_extension(const std::filesystem::path& p);

} // namespace cosod
