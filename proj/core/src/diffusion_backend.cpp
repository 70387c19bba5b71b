#include "cosod/diffusion_backend.hpp"

#include <algorithm>
#include <set>

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "cosod/error.hpp"
#include "cosod/hash.hpp"
#include "cosod/pca.hpp"
#include "cosod/resample.hpp"

namespace cosod {

void DiffusionBackendConfig::validate(const NoiseSchedule& schedule) const {
    if (!schedule.contains(timestep)) {
        throw ConfigError("timestep " + std::to_string(timestep) + " outside [0, " +
                          std::to_string(schedule.max_t()) + "]");
    }
    if (unet_decoder_layers.empty()) {
        throw ConfigError("at least one U-Net decoder layer is required");
    }
    for (std::size_t i = 1; i < unet_decoder_layers.size(); ++i) {
        if (unet_decoder_layers[i] <= unet_decoder_layers[i - 1]) {
            throw ConfigError("U-Net decoder layers must be distinct and ascending");
        }
    }
    if (pca_dims_per_layer < 1) {
        throw ConfigError("PCA dimension must be positive");
    }
    if (input_size < 64 || input_size % 64 != 0) {
        throw ConfigError("diffusion input size must be a positive multiple of 64");
    }
}

std::string DiffusionBackendConfig::hash() const {
    Fnv1a h;
    h.update(static_cast<std::uint64_t>(timestep));
    for (int l : unet_decoder_layers) {
        h.update(static_cast<std::uint64_t>(l));
    }
    h.update(static_cast<std::uint64_t>(pca_dims_per_layer));
    h.update(prompt_text);
    h.update(seed);
    h.update(static_cast<std::uint64_t>(input_size));
    return h.hex();
}

cv::Mat make_diffusion_blob(const cv::Mat& rgb, int input_size) {
    if (rgb.empty() || rgb.type() != CV_8UC3) {
        throw ShapeError("diffusion input must be a non-empty 8-bit RGB image");
    }
    cv::Mat resized;
    cv::resize(rgb, resized, {input_size, input_size}, 0, 0, cv::INTER_CUBIC);
    cv::Mat f;
    resized.convertTo(f, CV_32FC3, 1.0 / 127.5, -1.0);
    return cv::dnn::blobFromImage(f);
}

std::vector<FeatureMap> extract_diffusion_layers(const ImageRecord& image, const DiffusionBackendConfig& cfg,
                                                 DiffusionModel& model, const NoiseSchedule& schedule) {
    cfg.validate(schedule);
    const auto valid = model.valid_layers();
    for (int l : cfg.unet_decoder_layers) {
        if (std::find(valid.begin(), valid.end(), l) == valid.end()) {
            std::string msg = "U-Net decoder layer " + std::to_string(l) + " is not available; valid layers:";
            for (int v : valid) {
                msg += " " + std::to_string(v);
            }
            throw ConfigError(msg);
        }
    }

    const cv::Mat blob = make_diffusion_blob(image.pixels, cfg.input_size);
    Latent z0 = model.encode(blob);
    if (z0.values.size() != static_cast<std::size_t>(z0.channels) * z0.height * z0.width || z0.values.empty()) {
        throw BackendError("latent encoder returned an inconsistent latent");
    }
    const auto eps = gaussian_noise(z0.values.size(), derive_seed(cfg.seed, image.key()));
    Latent zt = z0;
    zt.values = add_noise(z0.values, cfg.timestep, eps, schedule);

    auto layers = model.unet_features(zt, cfg.timestep, cfg.unet_decoder_layers);
    if (layers.size() != cfg.unet_decoder_layers.size()) {
        throw BackendError("U-Net returned " + std::to_string(layers.size()) + " layers, expected " +
                           std::to_string(cfg.unet_decoder_layers.size()));
    }
    for (auto& f : layers) {
        f.image_h = image.height;
        f.image_w = image.width;
        f.backend_id = kDiffusionBackendId;
        f.validate();
    }
    return layers;
}

std::vector<FeatureMap> reduce_and_merge_layers(const std::vector<std::vector<FeatureMap>>& per_image_layers,
                                                int pca_dims) {
    if (per_image_layers.empty()) {
        return {};
    }
    const std::size_t n_layers = per_image_layers.front().size();
    if (n_layers == 0) {
        throw ShapeError("no diffusion layers to merge");
    }
    for (const auto& layers : per_image_layers) {
        if (layers.size() != n_layers) {
            throw ShapeError("images disagree on the number of diffusion layers");
        }
    }

    // Finest grid among the layers is the common output resolution.
    GridSize target = per_image_layers.front().front().grid();
    for (const auto& f : per_image_layers.front()) {
        if (f.plane_size() > static_cast<std::size_t>(target.height) * target.width) {
            target = f.grid();
        }
    }

    const std::size_t n_images = per_image_layers.size();
    std::vector<std::vector<FeatureMap>> reduced(n_images);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const FeatureMap& ref = per_image_layers.front()[l];
        const int dims = ref.channels;
        const auto plane = ref.plane_size();
        for (const auto& layers : per_image_layers) {
            if (layers[l].channels != dims || layers[l].grid() != ref.grid()) {
                throw ShapeError("diffusion layer " + std::to_string(l) + " differs in shape across images");
            }
        }
        const auto rows = static_cast<Eigen::Index>(plane * n_images);
        Eigen::MatrixXd X(rows, dims);
        for (std::size_t i = 0; i < n_images; ++i) {
            const auto& f = per_image_layers[i][l];
            for (std::size_t p = 0; p < plane; ++p) {
                for (int c = 0; c < dims; ++c) {
                    X(static_cast<Eigen::Index>(i * plane + p), c) = f.values[c * plane + p];
                }
            }
        }
        const int k = std::min<int>({pca_dims, dims, static_cast<int>(rows) - 1});
        if (k < 1) {
            throw ShapeError("diffusion layer " + std::to_string(l) + " has too few cells for PCA");
        }
        if (k < pca_dims) {
            spdlog::warn("diffusion layer {}: PCA reduced to {} dims (requested {})", l, k, pca_dims);
        }
        const PcaResult pca = reduce_pca(X, k);
        for (std::size_t i = 0; i < n_images; ++i) {
            const auto& src = per_image_layers[i][l];
            FeatureMap f = FeatureMap::zeros(k, src.grid(), src.image(), kDiffusionBackendId);
            for (std::size_t p = 0; p < plane; ++p) {
                for (int c = 0; c < k; ++c) {
                    f.values[c * plane + p] = static_cast<float>(pca.projections(static_cast<Eigen::Index>(i * plane + p), c));
                }
            }
            reduced[i].push_back(upsample_bilinear(f, target));
        }
    }

    std::vector<FeatureMap> out;
    out.reserve(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
        int total = 0;
        for (const auto& f : reduced[i]) {
            total += f.channels;
        }
        FeatureMap merged = FeatureMap::zeros(total, target, reduced[i].front().image(), kDiffusionBackendId);
        auto it = merged.values.begin();
        for (const auto& f : reduced[i]) {
            it = std::copy(f.values.begin(), f.values.end(), it);
        }
        out.push_back(std::move(merged));
    }
    return out;
}

FeatureMap extract_diffusion(const ImageRecord& image, const DiffusionBackendConfig& cfg, DiffusionModel& model,
                             const NoiseSchedule& schedule) {
    std::vector<std::vector<FeatureMap>> layers{extract_diffusion_layers(image, cfg, model, schedule)};
    return std::move(reduce_and_merge_layers(layers, cfg.pca_dims_per_layer).front());
}

} // namespace cosod
