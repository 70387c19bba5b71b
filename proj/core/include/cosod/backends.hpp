#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cosod/dataset.hpp"
#include "cosod/diffusion_backend.hpp"
#include "cosod/feature_map.hpp"
#include "cosod/synthetic.hpp"
#include "cosod/vit_backend.hpp"

namespace cosod {

enum class BackendKind { vit, diffusion, fused, synthetic };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

/// Produces the per-image features consumed by prompt generation for a whole
/// group at once (diffusion PCA is fitted per group). One instance per worker.
class FeatureBackend {
  public:
    virtual ~FeatureBackend() = default;
    virtual std::string id() const = 0;
    /// Hash of every setting that changes the output; part of the cache key.
    virtual std::string config_hash() const = 0;
    /// Features in member order. Members must have pixels loaded.
    virtual std::vector<FeatureMap> extract_group(const GroupRecord& group) = 0;
    virtual std::vector<std::filesystem::path> weight_files() const { return {}; }
};

/// Looks each member up in a synthetic fixture by (group_id, image_id).
/// Output is the raw synthetic grid, not normalized.
class SyntheticBackend final : public FeatureBackend {
  public:
    explicit SyntheticBackend(SyntheticFixture fixture);
    std::string id() const override { return kSyntheticBackendId; }
    std::string config_hash() const override { return hash_; }
    std::vector<FeatureMap> extract_group(const GroupRecord& group) override;

  private:
    SyntheticFixture fixture_;
    std::string hash_;
};

/// ViT patch features, L2-normalized per cell.
class VitBackend final : public FeatureBackend {
  public:
    VitBackend(std::unique_ptr<VitModel> model, VitOptions options);
    std::string id() const override { return kVitBackendId; }
    std::string config_hash() const override;
    std::vector<FeatureMap> extract_group(const GroupRecord& group) override;
    std::vector<std::filesystem::path> weight_files() const override { return model_->weight_files(); }

    /// Unnormalized features of one image.
    FeatureMap extract_raw(const ImageRecord& image);

  private:
    std::unique_ptr<VitModel> model_;
    VitOptions options_;
};

/// Multi-layer diffusion features with group PCA, L2-normalized per cell.
class DiffusionBackend final : public FeatureBackend {
  public:
    DiffusionBackend(std::unique_ptr<DiffusionModel> model, DiffusionBackendConfig config, NoiseSchedule schedule);
    std::string id() const override { return kDiffusionBackendId; }
    std::string config_hash() const override { return config_.hash(); }
    std::vector<FeatureMap> extract_group(const GroupRecord& group) override;
    std::vector<std::filesystem::path> weight_files() const override { return model_->weight_files(); }

    /// PCA-reduced, merged, unnormalized features of the group.
    std::vector<FeatureMap> extract_raw_group(const GroupRecord& group);

  private:
    std::unique_ptr<DiffusionModel> model_;
    DiffusionBackendConfig config_;
    NoiseSchedule schedule_;
};

/// Pixel-wise normalized concatenation of diffusion and ViT features. The
/// coarser grid is bilinearly upsampled to the finer one before fusing.
class FusedBackend final : public FeatureBackend {
  public:
    FusedBackend(std::unique_ptr<VitBackend> vit, std::unique_ptr<DiffusionBackend> diffusion);
    std::string id() const override { return "fused"; }
    std::string config_hash() const override;
    std::vector<FeatureMap> extract_group(const GroupRecord& group) override;
    std::vector<std::filesystem::path> weight_files() const override;

  private:
    std::unique_ptr<VitBackend> vit_;
    std::unique_ptr<DiffusionBackend> diffusion_;
};

} // namespace cosod
