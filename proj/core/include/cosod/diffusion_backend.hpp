#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "cosod/dataset.hpp"
#include "cosod/feature_map.hpp"
#include "cosod/noise.hpp"

namespace cosod {

inline constexpr const char* kDiffusionBackendId = "diffusion";

/// Diffusion-feature settings. Layer indices count the U-Net up-path
/// (decoder-side) output blocks from 0 in execution order; for SD v1.x the
/// twelve blocks run coarse-to-fine, so the default {2, 5, 8} ends at the
/// highest-resolution layer of the three.
struct DiffusionBackendConfig {
    int timestep = 50;
    std::vector<int> unet_decoder_layers{2, 5, 8};
    int pca_dims_per_layer = 256;
    std::string prompt_text;
    std::uint64_t seed = 0;
    int input_size = 512;

    /// Throws ConfigError on an out-of-range timestep or unsorted layers.
    void validate(const NoiseSchedule& schedule) const;
    /// Stable hash of every field that changes the produced features.
    std::string hash() const;
};

struct Latent {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> values; // [C,H,W]
};

/// Inference engine behind the diffusion adapter: a latent encoder and a
/// denoising U-Net whose up-path activations can be captured.
class DiffusionModel {
  public:
    virtual ~DiffusionModel() = default;
    /// `blob` is 1x3xSxS float32 in [-1, 1]; returns the scaled latent z0.
    virtual Latent encode(const cv::Mat& blob) = 0;
    /// One denoising forward pass on z_t; one raw feature map per requested
    /// layer, in request order. Image geometry is filled in by the caller.
    virtual std::vector<FeatureMap> unet_features(const Latent& noisy, int timestep,
                                                  std::span<const int> layers) = 0;
    virtual std::vector<int> valid_layers() const = 0;
    virtual std::vector<std::filesystem::path> weight_files() const { return {}; }
};

/// Resizes to input_size x input_size and maps [0,255] to [-1,1], NCHW.
cv::Mat make_diffusion_blob(const cv::Mat& rgb, int input_size);

/// Encode, noise at cfg.timestep with ε seeded from (cfg.seed, image key),
/// run the U-Net once and return the raw per-layer activations.
std::vector<FeatureMap> extract_diffusion_layers(const ImageRecord& image, const DiffusionBackendConfig& cfg,
                                                 DiffusionModel& model, const NoiseSchedule& schedule);

/// Group-level post-processing: per layer, fits one PCA over every cell of
/// every image, projects to `pca_dims` (clamped to what the group supports),
/// upsamples each layer to the finest layer grid and concatenates channels.
/// `per_image_layers[i][l]` is layer l of image i.
std::vector<FeatureMap> reduce_and_merge_layers(const std::vector<std::vector<FeatureMap>>& per_image_layers,
                                                int pca_dims);

/// Single-image convenience: extract_diffusion_layers + a group of one.
FeatureMap extract_diffusion(const ImageRecord& image, const DiffusionBackendConfig& cfg, DiffusionModel& model,
                             const NoiseSchedule& schedule);

} // namespace cosod
