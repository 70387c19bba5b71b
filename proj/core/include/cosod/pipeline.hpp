#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosod/backends.hpp"
#include "cosod/cmp.hpp"
#include "cosod/evaluation.hpp"
#include "cosod/gpg.hpp"
#include "cosod/synthetic.hpp"

namespace cosod {

struct WeightPaths {
    std::filesystem::path vit_onnx;
    std::filesystem::path sd_vae_encoder;
    std::filesystem::path sd_unet;
    std::filesystem::path sd_text_embedding;
    std::filesystem::path sam_encoder;
    std::filesystem::path sam_decoder;
};

struct PipelineConfig {
    std::filesystem::path dataset_root;
    std::optional<std::filesystem::path> gt_root;
    std::filesystem::path output_dir = "predictions";
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> saliency_dir;
    /// Synthetic fixture spec; defaults to `<dataset_root>/synthetic.json`.
    std::optional<std::filesystem::path> synthetic_spec;

    BackendKind backend = BackendKind::fused;
    SegmenterKind segmenter = SegmenterKind::sam_vitb;
    int topk = 2;
    int timestep = 50;
    int pca_dims = 256;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<int> sd_layers{2, 5, 8};
    VitOptions vit;
    WeightPaths weights;
    std::string dataset_id;

    /// Throws ConfigError on an invalid field.
    void validate() const;
    std::filesystem::path synthetic_spec_path() const;
    DiffusionBackendConfig diffusion_config() const;
};

enum class PipelineStage { extract, predict, run };

std::string_view to_string(PipelineStage stage);

struct ImageReport {
    std::string image_id;
    std::vector<PromptPoint> prompts;
    bool truncated = false;
    bool saliency_fallback = false;
    bool saliency_provided = false;
    std::size_t salient_cells = 0;
    std::string prediction; // relative to the output directory
};

struct GroupReport {
    std::string group_id;
    bool ok = false;
    std::string error;
    std::vector<ImageReport> images;
    std::size_t proxy_pixels = 0;
    // Run statistics, kept out of the deterministic report.
    bool features_from_cache = false;
    double extract_ms = 0.0;
    double prompt_ms = 0.0;
    double segment_ms = 0.0;
};

struct RunReport {
    PipelineStage stage = PipelineStage::run;
    std::vector<GroupReport> groups;
    std::vector<std::string> warnings;
    std::optional<EvalResult> metrics;
    std::string metrics_error;
    std::string weights_checksum_before;
    std::string weights_checksum_after;
    double total_ms = 0.0;

    std::size_t failed_groups() const;
    bool weights_unchanged() const { return weights_checksum_before == weights_checksum_after; }
    /// No failed group, evaluation (when requested) succeeded, weights untouched.
    bool ok() const;
};

/// Every weight file the configured backend and segmenter need that is
/// missing, as "<what> (<flag>)" strings.
std::vector<std::string> missing_weights(const PipelineConfig& cfg, PipelineStage stage);

std::unique_ptr<FeatureBackend> make_backend(const PipelineConfig& cfg, const SyntheticFixture* fixture);
std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& cfg, const SyntheticFixture* fixture);

/// Extract (or load cached) features, generate prompts, segment and write
/// predictions for every group; evaluate when stage == run and a GT root is
/// set. Group failures are recorded and do not stop the run. Configuration
/// problems throw ConfigError before any group is processed. Writes
/// report.json and run_stats.json into the output directory.
RunReport run_pipeline(const PipelineConfig& cfg, PipelineStage stage = PipelineStage::run);

/// Deterministic report: no timings, cache hits or absolute paths.
nlohmann::json report_json(const RunReport& report, const PipelineConfig& cfg);
/// Timings and cache statistics.
nlohmann::json stats_json(const RunReport& report);

} // namespace cosod
