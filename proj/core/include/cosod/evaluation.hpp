#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosod/dataset.hpp"

namespace cosod {

/// Mean absolute difference. Maps must have equal dimensions.
double mae(const SaliencyMap& pred, const SaliencyMap& gt);

/// F-measure at the adaptive threshold τ = min(2·mean(pred), 1), keeping
/// pred > τ. `gt` must be binary. Empty GT scores 1 for an empty prediction
/// and 0 otherwise; an empty prediction against non-empty GT scores 0.
double f_measure_mean(const SaliencyMap& pred, const SaliencyMap& gt, double beta_sq = 0.3);

/// Structure measure: α·S_object + (1 − α)·S_region against a binary GT.
/// All-background GT gives 1 − mean(pred), all-foreground GT gives mean(pred).
double s_measure(const SaliencyMap& pred, const SaliencyMap& gt, double alpha = 0.5);

struct ImageMetrics {
    std::string group_id;
    std::string image_id;
    double s_measure = 0.0;
    double f_measure_mean = 0.0;
    double mae = 0.0;
};

struct EvalResult {
    std::string dataset_id;
    double s_measure = 0.0;
    double f_measure_mean = 0.0;
    double mae = 0.0;
    std::vector<ImageMetrics> per_image;
    std::vector<std::string> failures; // images that could not be evaluated

    bool ok() const { return failures.empty(); }
};

/// Metrics for one prediction; GT is binarized at 128/255 and the prediction
/// is bilinearly resized to the GT size when they differ.
ImageMetrics evaluate_pair(const SaliencyMap& pred, const SaliencyMap& gt);

/// Unweighted per-image means (not per-group means).
EvalResult aggregate(std::string dataset_id, std::vector<ImageMetrics> per_image,
                     std::vector<std::string> failures = {});

struct EvaluateOptions {
    std::string dataset_id = "dataset";
    int workers = 1;
};

/// Pairs `<gt_dir>/<group>/<stem>.png` with `<pred_dir>/<group>/<stem>.png`.
/// Throws DatasetError listing every GT stem without a prediction.
EvalResult evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                            const EvaluateOptions& options = {});

nlohmann::json to_json(const EvalResult& result);
std::string format_table(const EvalResult& result);

/// Writes `<stem>.json` and `<stem>.txt` next to each other.
void write_eval_report(const EvalResult& result, const std::filesystem::path& json_path,
                       const std::filesystem::path& text_path);

} // namespace cosod
