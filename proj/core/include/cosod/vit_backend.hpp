#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "cosod/dataset.hpp"
#include "cosod/feature_map.hpp"

namespace cosod {

inline constexpr const char* kVitBackendId = "vit";

/// Preprocessing and token layout of a self-supervised ViT (DINOv2 ViT-B/14
/// by default). `layer` is the 0-based transformer block whose patch tokens
/// become the feature map.
struct VitOptions {
    int input_size = 518;
    int patch_size = 14;
    int layer = 11;
    int prefix_tokens = 1; // CLS (+ register tokens, if any)
    std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
    std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};

    int grid() const { return input_size / patch_size; }
};

/// Inference engine behind the ViT adapter.
class VitModel {
  public:
    virtual ~VitModel() = default;
    /// `blob` is 1x3xSxS float32, normalized. Returns a T x C CV_32F matrix
    /// of tokens from block `layer`, prefix tokens first.
    virtual cv::Mat tokens(const cv::Mat& blob, int layer) = 0;
    virtual std::vector<std::filesystem::path> weight_files() const { return {}; }
};

/// Resizes to input_size x input_size and applies mean/std normalization.
cv::Mat make_vit_blob(const cv::Mat& rgb, const VitOptions& options);

/// Patch tokens of one image reshaped to C x (S/patch) x (S/patch).
FeatureMap extract_vit(const ImageRecord& image, VitModel& model, const VitOptions& options);

} // namespace cosod
