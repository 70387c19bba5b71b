#include "cosod/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "cosod/dataset.hpp"
#include "cosod/error.hpp"
#include "cosod/feature_cache.hpp"
#include "cosod/hash.hpp"
#include "cosod/noise.hpp"
#include "cosod/onnx_models.hpp"
#include "cosod/sam_segmenter.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cosod {

void PipelineConfig::validate() const {
    if (dataset_root.empty()) {
        throw ConfigError("dataset root is required");
    }
    if (output_dir.empty()) {
        throw ConfigError("output directory is required");
    }
    if (topk < 1) {
        throw ConfigError("topk must be >= 1");
    }
    if (timestep < 0) {
        throw ConfigError("timestep must be >= 0");
    }
    if (pca_dims < 1) {
        throw ConfigError("pca dims must be >= 1");
    }
    if (workers < 1) {
        throw ConfigError("workers must be >= 1");
    }
    if (backend == BackendKind::diffusion || backend == BackendKind::fused) {
        diffusion_config().validate(NoiseSchedule::stable_diffusion_v1());
    }
}

fs::path PipelineConfig::synthetic_spec_path() const {
    return synthetic_spec ? *synthetic_spec : dataset_root / "synthetic.json";
}

DiffusionBackendConfig PipelineConfig::diffusion_config() const {
    DiffusionBackendConfig d;
    d.timestep = timestep;
    d.unet_decoder_layers = sd_layers;
    d.pca_dims_per_layer = pca_dims;
    d.seed = seed;
    return d;
}

std::string_view to_string(PipelineStage stage) {
    switch (stage) {
    case PipelineStage::extract:
        return "extract";
    case PipelineStage::predict:
        return "predict";
    case PipelineStage::run:
        return "run";
    }
    return "?";
}

std::size_t RunReport::failed_groups() const {
    return static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(), [](const auto& g) { return !g.ok; }));
}

bool RunReport::ok() const {
    return failed_groups() == 0 && metrics_error.empty() && (!metrics || metrics->ok()) && weights_unchanged();
}

std::vector<std::string> missing_weights(const PipelineConfig& cfg, PipelineStage stage) {
    std::vector<std::string> missing;
    auto need = [&](const fs::path& p, const char* what, const char* flag) {
        if (p.empty() || !fs::is_regular_file(p)) {
            missing.push_back(std::string(what) + " (--" + flag + ")");
        }
    };
    if (cfg.backend == BackendKind::vit || cfg.backend == BackendKind::fused) {
        need(cfg.weights.vit_onnx, "ViT weights", "vit-onnx");
    }
    if (cfg.backend == BackendKind::diffusion || cfg.backend == BackendKind::fused) {
        need(cfg.weights.sd_vae_encoder, "diffusion VAE encoder weights", "sd-vae-encoder");
        need(cfg.weights.sd_unet, "diffusion U-Net weights", "sd-unet");
        need(cfg.weights.sd_text_embedding, "diffusion text embedding", "sd-text-embedding");
    }
    if (stage != PipelineStage::extract && cfg.segmenter == SegmenterKind::sam_vitb) {
        need(cfg.weights.sam_encoder, "SAM encoder weights", "sam-encoder");
        need(cfg.weights.sam_decoder, "SAM decoder weights", "sam-decoder");
    }
    return missing;
}

std::unique_ptr<FeatureBackend> make_backend(const PipelineConfig& cfg, const SyntheticFixture* fixture) {
    switch (cfg.backend) {
    case BackendKind::synthetic:
        if (fixture == nullptr) {
            throw ConfigError("synthetic backend needs a synthetic spec");
        }
        return std::make_unique<SyntheticBackend>(*fixture);
    case BackendKind::vit:
        return std::make_unique<VitBackend>(load_onnx_vit(cfg.weights.vit_onnx), cfg.vit);
    case BackendKind::diffusion:
        return std::make_unique<DiffusionBackend>(
            load_onnx_diffusion(cfg.weights.sd_vae_encoder, cfg.weights.sd_unet, cfg.weights.sd_text_embedding),
            cfg.diffusion_config(), NoiseSchedule::stable_diffusion_v1());
    case BackendKind::fused: {
        auto diffusion = std::make_unique<DiffusionBackend>(
            load_onnx_diffusion(cfg.weights.sd_vae_encoder, cfg.weights.sd_unet, cfg.weights.sd_text_embedding),
            cfg.diffusion_config(), NoiseSchedule::stable_diffusion_v1());
        auto vit = std::make_unique<VitBackend>(load_onnx_vit(cfg.weights.vit_onnx), cfg.vit);
        return std::make_unique<FusedBackend>(std::move(vit), std::move(diffusion));
    }
    }
    throw ConfigError("unknown backend");
}

std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& cfg, const SyntheticFixture* fixture) {
    if (cfg.segmenter == SegmenterKind::oracle) {
        if (fixture == nullptr) {
            throw ConfigError("oracle segmenter needs a synthetic spec");
        }
        return std::make_unique<OracleSegmenter>(*fixture);
    }
    return load_sam_segmenter(cfg.weights.sam_encoder, cfg.weights.sam_decoder);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Worker {
    std::unique_ptr<FeatureBackend> backend;
    std::unique_ptr<Segmenter> segmenter;
};

// Serializes writes to the shared cache directory (single-writer contract).
struct SharedCache {
    std::optional<FeatureCache> cache;
    std::mutex write_mutex;
};

std::vector<FeatureMap> load_or_extract(GroupRecord& group, FeatureBackend& backend, SharedCache& shared,
                                        bool& from_cache) {
    from_cache = false;
    const std::string hash = backend.config_hash();
    if (shared.cache) {
        std::vector<FeatureMap> cached;
        for (const auto& m : group.members) {
            auto f = shared.cache->load(m.key(), backend.id(), hash);
            if (!f) {
                break;
            }
            cached.push_back(std::move(*f));
        }
        if (cached.size() == group.members.size()) {
            from_cache = true;
            return cached;
        }
    }
    load_group_pixels(group);
    auto features = backend.extract_group(group);
    if (features.size() != group.members.size()) {
        throw BackendError("backend returned " + std::to_string(features.size()) + " feature maps for " +
                           std::to_string(group.members.size()) + " images");
    }
    if (shared.cache) {
        std::lock_guard lock(shared.write_mutex);
        for (std::size_t i = 0; i < features.size(); ++i) {
            shared.cache->save(group.members[i].key(), hash, features[i]);
        }
    }
    return features;
}

SaliencyMap load_saliency(const PipelineConfig& cfg, const ImageRecord& image, bool& provided) {
    provided = false;
    if (cfg.saliency_dir) {
        const fs::path p = *cfg.saliency_dir / image.group_id / (image.image_id + ".png");
        if (fs::is_regular_file(p)) {
            SaliencyMap s = read_saliency_png(p);
            if (s.size() != image.size()) {
                cv::Mat src(s.height, s.width, CV_64F, s.values.data());
                cv::Mat dst;
                cv::resize(src, dst, {image.width, image.height}, 0, 0, cv::INTER_LINEAR);
                SaliencyMap r = SaliencyMap::filled(image.height, image.width, 0.0);
                for (int y = 0; y < image.height; ++y) {
                    for (int x = 0; x < image.width; ++x) {
                        r.at(y, x) = std::clamp(dst.at<double>(y, x), 0.0, 1.0);
                    }
                }
                s = std::move(r);
            }
            s.group_id = image.group_id;
            s.image_id = image.image_id;
            provided = true;
            return s;
        }
    }
    // Uniform map: the adaptive threshold keeps nothing, so every cell is used.
    SaliencyMap s = SaliencyMap::filled(image.height, image.width, 0.5);
    s.group_id = image.group_id;
    s.image_id = image.image_id;
    return s;
}

GroupReport process_group(GroupRecord group, Worker& worker, SharedCache& cache, const PipelineConfig& cfg,
                          PipelineStage stage) {
    GroupReport report;
    report.group_id = group.group_id;
    auto t0 = Clock::now();
    auto features = load_or_extract(group, *worker.backend, cache, report.features_from_cache);
    report.extract_ms = ms_since(t0);
    if (stage == PipelineStage::extract) {
        report.ok = true;
        for (const auto& m : group.members) {
            ImageReport ir;
            ir.image_id = m.image_id;
            report.images.push_back(std::move(ir));
        }
        return report;
    }
    load_group_pixels(group);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].image() != group.members[i].size()) {
            throw ShapeError("features of " + group.members[i].key() + " describe a different image size");
        }
    }

    t0 = Clock::now();
    std::vector<SaliencyMap> saliency;
    std::vector<bool> provided;
    for (const auto& m : group.members) {
        bool p = false;
        saliency.push_back(load_saliency(cfg, m, p));
        provided.push_back(p);
    }
    const PromptSet prompts = generate_prompts(features, saliency, cfg.topk);
    report.proxy_pixels = prompts.proxy.contributing_pixel_count;
    report.prompt_ms = ms_since(t0);

    t0 = Clock::now();
    for (std::size_t i = 0; i < group.members.size(); ++i) {
        const auto& m = group.members[i];
        const auto& ip = prompts.images[i];
        const SegmenterResult seg = segment(*worker.segmenter, m, ip.points);
        SaliencyMap map = select_mask(seg);
        map.group_id = m.group_id;
        map.image_id = m.image_id;
        write_prediction(map, cfg.output_dir);
        ImageReport ir;
        ir.image_id = m.image_id;
        ir.prompts = ip.points;
        ir.truncated = ip.truncated;
        ir.saliency_fallback = ip.saliency_fallback;
        ir.saliency_provided = provided[i];
        ir.salient_cells = ip.salient_count;
        ir.prediction = m.group_id + "/" + m.image_id + ".png";
        report.images.push_back(std::move(ir));
    }
    report.segment_ms = ms_since(t0);
    report.ok = true;
    return report;
}

std::vector<fs::path> weight_files_of(const Worker& w) {
    std::vector<fs::path> files = w.backend->weight_files();
    if (w.segmenter) {
        auto more = w.segmenter->weight_files();
        files.insert(files.end(), more.begin(), more.end());
    }
    return files;
}

void write_json(const fs::path& file, const json& j) {
    std::ofstream out(file);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace

RunReport run_pipeline(const PipelineConfig& cfg, PipelineStage stage) {
    const auto start = Clock::now();
    cfg.validate();
    if (stage == PipelineStage::extract && !cfg.cache_dir) {
        throw ConfigError("extract needs a cache directory");
    }
    const auto missing = missing_weights(cfg, stage);
    if (!missing.empty()) {
        std::string msg = "missing model weights for backend '" + std::string(to_string(cfg.backend)) + "'";
        if (stage != PipelineStage::extract) {
            msg += " / segmenter '" + std::string(to_string(cfg.segmenter)) + "'";
        }
        msg += ":";
        for (const auto& m : missing) {
            msg += " " + m + ";";
        }
        msg += " point the flags, config file or COSOD_* environment variables at the files";
        throw ConfigError(msg);
    }

    std::optional<SyntheticFixture> fixture;
    if (cfg.backend == BackendKind::synthetic ||
        (stage != PipelineStage::extract && cfg.segmenter == SegmenterKind::oracle)) {
        fixture = load_synthetic_fixture(cfg.synthetic_spec_path());
    }
    const SyntheticFixture* fx = fixture ? &*fixture : nullptr;

    std::vector<Worker> workers;
    for (int i = 0; i < cfg.workers; ++i) {
        Worker w;
        w.backend = make_backend(cfg, fx);
        if (stage != PipelineStage::extract) {
            w.segmenter = make_segmenter(cfg, fx);
        }
        workers.push_back(std::move(w));
    }

    RunReport report;
    report.stage = stage;
    const auto weight_files = weight_files_of(workers.front());
    report.weights_checksum_before = checksum_files(weight_files);

    ScanOptions so;
    so.load_pixels = false;
    ScanResult scan = scan_dataset(cfg.dataset_root, so);
    report.warnings = scan.warnings;
    if (stage != PipelineStage::extract) {
        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        if (ec) {
            throw IoError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
        }
    }

    SharedCache cache;
    if (cfg.cache_dir) {
        cache.cache.emplace(*cfg.cache_dir);
    }

    report.groups.resize(scan.groups.size());
    std::atomic<std::size_t> next{0};
    auto work = [&](Worker& w) {
        for (std::size_t i = next++; i < scan.groups.size(); i = next++) {
            auto& slot = report.groups[i];
            try {
                slot = process_group(scan.groups[i], w, cache, cfg, stage);
            } catch (const std::exception& e) {
                slot = GroupReport{};
                slot.group_id = scan.groups[i].group_id;
                slot.ok = false;
                slot.error = e.what();
                spdlog::error("group {} failed: {}", slot.group_id, e.what());
            }
        }
    };
    if (workers.size() == 1) {
        work(workers.front());
    } else {
        std::vector<std::jthread> pool;
        for (auto& w : workers) {
            pool.emplace_back([&work, &w] { work(w); });
        }
    }

    if (stage == PipelineStage::run && cfg.gt_root) {
        try {
            EvaluateOptions eo;
            eo.dataset_id = cfg.dataset_id.empty() ? cfg.dataset_root.filename().string() : cfg.dataset_id;
            eo.workers = cfg.workers;
            report.metrics = evaluate_dataset(cfg.output_dir, *cfg.gt_root, eo);
        } catch (const std::exception& e) {
            report.metrics_error = e.what();
        }
    }

    report.weights_checksum_after = checksum_files(weight_files);
    if (!report.weights_unchanged()) {
        report.warnings.push_back("model weight files changed during the run");
    }
    report.total_ms = ms_since(start);

    if (stage != PipelineStage::extract) {
        write_json(cfg.output_dir / "report.json", report_json(report, cfg));
        write_json(cfg.output_dir / "run_stats.json", stats_json(report));
        if (report.metrics) {
            write_eval_report(*report.metrics, cfg.output_dir / "evaluation.json", cfg.output_dir / "evaluation.txt");
        }
    }
    return report;
}

json report_json(const RunReport& report, const PipelineConfig& cfg) {
    json groups = json::array();
    for (const auto& g : report.groups) {
        json images = json::array();
        for (const auto& i : g.images) {
            json prompts = json::array();
            for (const auto& p : i.prompts) {
                prompts.push_back({{"x", p.x}, {"y", p.y}, {"score", p.score}});
            }
            images.push_back({{"image_id", i.image_id},
                              {"prompts", prompts},
                              {"prompt_count", i.prompts.size()},
                              {"truncated", i.truncated},
                              {"saliency_provided", i.saliency_provided},
                              {"saliency_fallback", i.saliency_fallback},
                              {"salient_cells", i.salient_cells},
                              {"prediction", i.prediction}});
        }
        groups.push_back({{"group_id", g.group_id},
                          {"status", g.ok ? "ok" : "failed"},
                          {"error", g.error},
                          {"proxy_pixels", g.proxy_pixels},
                          {"images", images}});
    }
    json j{{"stage", to_string(report.stage)},
           {"config",
            {{"backend", to_string(cfg.backend)},
             {"segmenter", to_string(cfg.segmenter)},
             {"topk", cfg.topk},
             {"timestep", cfg.timestep},
             {"pca_dims", cfg.pca_dims},
             {"sd_layers", cfg.sd_layers},
             {"seed", cfg.seed}}},
           {"weights_checksum", report.weights_checksum_before},
           {"weights_unchanged", report.weights_unchanged()},
           {"groups", groups},
           {"failed_groups", report.failed_groups()},
           {"warnings", report.warnings},
           {"ok", report.ok()}};
    if (report.metrics) {
        j["metrics"] = {{"dataset_id", report.metrics->dataset_id},
                        {"num_images", report.metrics->per_image.size()},
                        {"s_measure", report.metrics->s_measure},
                        {"f_measure_mean", report.metrics->f_measure_mean},
                        {"mae", report.metrics->mae},
                        {"failures", report.metrics->failures}};
    } else {
        j["metrics"] = nullptr;
    }
    j["metrics_error"] = report.metrics_error;
    return j;
}

json stats_json(const RunReport& report) {
    json groups = json::array();
    for (const auto& g : report.groups) {
        groups.push_back({{"group_id", g.group_id},
                          {"features_from_cache", g.features_from_cache},
                          {"extract_ms", g.extract_ms},
                          {"prompt_ms", g.prompt_ms},
                          {"segment_ms", g.segment_ms}});
    }
    return {{"total_ms", report.total_ms}, {"groups", groups}};
}

} // namespace cosod
