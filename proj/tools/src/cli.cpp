#include "cosod/cli.hpp"

#include <filesystem>
#include <map>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cosod/error.hpp"
#include "cosod/evaluation.hpp"
#include "cosod/pipeline.hpp"
#include "cosod/synthetic.hpp"

namespace fs = std::filesystem;

namespace cosod::cli {
namespace {

struct Options {
    PipelineConfig cfg;
    std::string dataset_root;
    std::string gt_root;
    std::string output = "predictions";
    std::string cache_dir;
    std::string saliency_dir;
    std::string synthetic_spec;
    std::string backend = "fused";
    std::string segmenter = "sam-vitb";
    std::string log_level = "warn";
    std::string vit_onnx, sd_vae, sd_unet, sd_text, sam_enc, sam_dec;

    // make-fixture
    std::string fixture_root;
    FixtureOptions fixture;
    bool fixture_seed_set = false;
};

void add_shared_options(CLI::App& app, Options& o) {
    app.add_option("--dataset-root", o.dataset_root, "Directory of image groups (<root>/<group>/<image>)");
    app.add_option("--gt-root", o.gt_root, "Ground-truth mask directory with the same layout");
    app.add_option("--output", o.output, "Prediction/report output directory")->capture_default_str();
    app.add_option("--cache-dir", o.cache_dir, "Feature cache directory");
    app.add_option("--saliency-dir", o.saliency_dir, "Unsupervised saliency maps with the dataset layout");
    app.add_option("--synthetic-spec", o.synthetic_spec,
                   "Synthetic fixture spec (default <dataset-root>/synthetic.json)");
    app.add_option("--backend", o.backend, "Feature backend")
        ->check(CLI::IsMember({"vit", "diffusion", "fused", "synthetic"}))
        ->capture_default_str();
    app.add_option("--segmenter", o.segmenter, "Prompt segmenter")
        ->check(CLI::IsMember({"sam-vitb", "oracle"}))
        ->capture_default_str();
    app.add_option("--topk", o.cfg.topk, "Prompt points per image")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--timestep", o.cfg.timestep, "Diffusion timestep")
        ->check(CLI::Range(0, 999))
        ->capture_default_str();
    app.add_option("--pca-dims", o.cfg.pca_dims, "PCA components per U-Net layer")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--sd-layers", o.cfg.sd_layers, "U-Net decoder layers")->delimiter(',')->capture_default_str();
    app.add_option("--seed", o.cfg.seed, "Seed for diffusion noise and the fixture")->capture_default_str();
    app.add_option("--workers", o.cfg.workers, "Worker threads (each owns its own models)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--dataset-id", o.cfg.dataset_id, "Name used in the evaluation report");
    app.add_option("--vit-layer", o.cfg.vit.layer, "ViT block whose tokens are used")->capture_default_str();
    app.add_option("--vit-input-size", o.cfg.vit.input_size, "ViT input resolution")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--vit-onnx", o.vit_onnx, "ViT ONNX model")->envname("COSOD_VIT_ONNX");
    app.add_option("--sd-vae-encoder", o.sd_vae, "Diffusion VAE encoder ONNX model")
        ->envname("COSOD_SD_VAE_ENCODER");
    app.add_option("--sd-unet", o.sd_unet, "Diffusion U-Net ONNX model")->envname("COSOD_SD_UNET");
    app.add_option("--sd-text-embedding", o.sd_text, "Raw float32 text embedding (77x768)")
        ->envname("COSOD_SD_TEXT_EMBEDDING");
    app.add_option("--sam-encoder", o.sam_enc, "SAM image encoder ONNX model")->envname("COSOD_SAM_ENCODER");
    app.add_option("--sam-decoder", o.sam_dec, "SAM prompt decoder ONNX model")->envname("COSOD_SAM_DECODER");
    app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();
    app.set_config("--config", "", "TOML/INI file with option values; explicit flags win");
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return fs::path(s);
}

PipelineConfig finish_config(Options& o) {
    PipelineConfig cfg = o.cfg;
    cfg.dataset_root = o.dataset_root;
    cfg.gt_root = opt_path(o.gt_root);
    cfg.output_dir = o.output;
    cfg.cache_dir = opt_path(o.cache_dir);
    cfg.saliency_dir = opt_path(o.saliency_dir);
    cfg.synthetic_spec = opt_path(o.synthetic_spec);
    cfg.backend = *parse_backend_kind(o.backend);
    cfg.segmenter = *parse_segmenter_kind(o.segmenter);
    cfg.weights = {o.vit_onnx, o.sd_vae, o.sd_unet, o.sd_text, o.sam_enc, o.sam_dec};
    return cfg;
}

void print_groups(const RunReport& r, std::ostream& out, std::ostream& err) {
    for (const auto& g : r.groups) {
        if (!g.ok) {
            err << "group " << g.group_id << " failed: " << g.error << '\n';
        }
    }
    for (const auto& w : r.warnings) {
        err << "warning: " << w << '\n';
    }
    out << "groups: " << r.groups.size() - r.failed_groups() << " ok, " << r.failed_groups() << " failed\n";
}

int do_pipeline(Options& o, PipelineStage stage, std::ostream& out, std::ostream& err) {
    const PipelineConfig cfg = finish_config(o);
    if (cfg.dataset_root.empty()) {
        err << "error: --dataset-root is required\n";
        return kExitUsage;
    }
    if (stage == PipelineStage::extract && !cfg.cache_dir) {
        err << "error: extract needs --cache-dir\n";
        return kExitUsage;
    }
    const RunReport r = run_pipeline(cfg, stage);
    print_groups(r, out, err);
    if (stage != PipelineStage::extract) {
        out << "report: " << (cfg.output_dir / "report.json").string() << '\n';
    }
    if (r.metrics) {
        out << format_table(*r.metrics);
    }
    if (!r.metrics_error.empty()) {
        err << "error: evaluation failed: " << r.metrics_error << '\n';
    }
    if (!r.weights_unchanged()) {
        err << "error: model weight files changed during the run\n";
    }
    return r.ok() ? kExitOk : kExitFailure;
}

int do_evaluate(Options& o, std::ostream& out, std::ostream& err) {
    if (o.gt_root.empty()) {
        err << "error: evaluate needs --gt-root\n";
        return kExitUsage;
    }
    const fs::path gt = o.gt_root;
    const fs::path pred = o.output;
    if (!fs::is_directory(gt)) {
        err << "error: ground-truth directory not found: " << gt.string() << '\n';
        return kExitFailure;
    }
    if (!fs::is_directory(pred)) {
        err << "error: prediction directory not found: " << pred.string() << '\n';
        return kExitFailure;
    }
    EvaluateOptions eo;
    eo.dataset_id = o.cfg.dataset_id.empty() ? gt.filename().string() : o.cfg.dataset_id;
    eo.workers = o.cfg.workers;
    const EvalResult res = evaluate_dataset(pred, gt, eo);
    write_eval_report(res, pred / "evaluation.json", pred / "evaluation.txt");
    out << format_table(res);
    for (const auto& f : res.failures) {
        err << "failed: " << f << '\n';
    }
    return res.ok() ? kExitOk : kExitFailure;
}

int do_make_fixture(Options& o, std::ostream& out) {
    if (o.fixture_seed_set) {
        o.fixture.seed = o.cfg.seed;
    }
    const SyntheticFixture fx = make_synthetic_fixture(o.fixture);
    const FixtureLayout layout = write_synthetic_fixture(fx, o.fixture_root);
    out << "images:   " << layout.images_root.string() << '\n'
        << "gt:       " << layout.gt_root.string() << '\n'
        << "saliency: " << layout.saliency_root.string() << '\n'
        << "spec:     " << layout.spec_path.string() << '\n';
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot co-salient object detection"};
    app.name("cosod");
    app.require_subcommand(1);
    Options o;
    add_shared_options(app, o);

    auto* extract = app.add_subcommand("extract", "Extract and cache features for every group");
    auto* predict = app.add_subcommand("predict", "Write co-saliency predictions");
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions (--output) against --gt-root");
    auto* run_cmd = app.add_subcommand("run", "Predict, then evaluate when --gt-root is set");
    auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic fixture dataset");
    for (auto* sub : {extract, predict, evaluate, run_cmd, fixture}) {
        sub->fallthrough();
    }
    fixture->add_option("root", o.fixture_root, "Output directory")->required();
    fixture->add_option("--groups", o.fixture.groups)->check(CLI::PositiveNumber)->capture_default_str();
    fixture->add_option("--images", o.fixture.images_per_group)->check(CLI::PositiveNumber)->capture_default_str();
    fixture->add_option("--grid", o.fixture.grid)->check(CLI::Range(5, 4096))->capture_default_str();
    fixture->add_option("--channels", o.fixture.channels)->check(CLI::PositiveNumber)->capture_default_str();
    fixture->add_option("--cell-pixels", o.fixture.cell_pixels)->check(CLI::PositiveNumber)->capture_default_str();
    fixture->add_option("--noise", o.fixture.noise_amplitude)->check(CLI::NonNegativeNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    o.fixture_seed_set = app.count("--seed") > 0;
    spdlog::set_level(spdlog::level::from_str(o.log_level));

    try {
        if (extract->parsed()) {
            return do_pipeline(o, PipelineStage::extract, out, err);
        }
        if (predict->parsed()) {
            return do_pipeline(o, PipelineStage::predict, out, err);
        }
        if (run_cmd->parsed()) {
            return do_pipeline(o, PipelineStage::run, out, err);
        }
        if (evaluate->parsed()) {
            return do_evaluate(o, out, err);
        }
        if (fixture->parsed()) {
            return do_make_fixture(o, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace cosod::cli
