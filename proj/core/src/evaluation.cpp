#include "cosod/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <opencv2/imgproc.hpp>

#include "cosod/error.hpp"

namespace fs = std::filesystem;

namespace cosod {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_same_size(const SaliencyMap& pred, const SaliencyMap& gt) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                         " but ground truth is " + std::to_string(gt.height) + "x" + std::to_string(gt.width));
    }
}

void check_binary(const SaliencyMap& gt) {
    for (double v : gt.values) {
        if (v != 0.0 && v != 1.0) {
            throw ShapeError("ground truth " + gt.image_id + " is not binary");
        }
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Foreground-likeness of a set of values: 2x̄ / (x̄² + 1 + σ), σ the sample
// standard deviation.
double object_score(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    const double x = mean_of(values);
    double sq = 0.0;
    for (double v : values) {
        sq += (v - x) * (v - x);
    }
    const double sigma = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const SaliencyMap& pred, const SaliencyMap& gt) {
    std::vector<double> fg;
    std::vector<double> bg;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.values[i] != 0.0) {
            fg.push_back(pred.values[i]);
        } else {
            bg.push_back(1.0 - pred.values[i]);
        }
    }
    const double u = static_cast<double>(fg.size()) / static_cast<double>(gt.values.size());
    return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

// SSIM-style comparison of one block; rows [y0,y1), cols [x0,x1).
double block_ssim(const SaliencyMap& pred, const SaliencyMap& gt, int y0, int y1, int x0, int x1) {
    const auto n = static_cast<double>(y1 - y0) * (x1 - x0);
    if (n <= 0) {
        return 0.0;
    }
    double x = 0.0;
    double y = 0.0;
    for (int r = y0; r < y1; ++r) {
        for (int c = x0; c < x1; ++c) {
            x += pred.at(r, c);
            y += gt.at(r, c);
        }
    }
    x /= n;
    y /= n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (int r = y0; r < y1; ++r) {
        for (int c = x0; c < x1; ++c) {
            const double dx = pred.at(r, c) - x;
            const double dy = gt.at(r, c) - y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    }
    const double denom = n - 1.0 + kEps;
    sxx /= denom;
    syy /= denom;
    sxy /= denom;
    const double a = 4.0 * x * y * sxy;
    const double b = (x * x + y * y) * (sxx + syy);
    if (a != 0.0) {
        return a / (b + kEps);
    }
    return b == 0.0 ? 1.0 : 0.0;
}

double s_region(const SaliencyMap& pred, const SaliencyMap& gt) {
    const int h = gt.height;
    const int w = gt.width;
    // Foreground centroid in 1-based pixel units, rounded half away from zero.
    double total = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double g = gt.at(r, c);
            total += g;
            sx += g * (c + 1);
            sy += g * (r + 1);
        }
    }
    int cx;
    int cy;
    if (total == 0.0) {
        cx = static_cast<int>(std::round(w / 2.0));
        cy = static_cast<int>(std::round(h / 2.0));
    } else {
        cx = static_cast<int>(std::round(sx / total));
        cy = static_cast<int>(std::round(sy / total));
    }
    const double area = static_cast<double>(w) * h;
    const double w1 = static_cast<double>(cx) * cy / area;
    const double w2 = static_cast<double>(w - cx) * cy / area;
    const double w3 = static_cast<double>(cx) * (h - cy) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    return w1 * block_ssim(pred, gt, 0, cy, 0, cx) + w2 * block_ssim(pred, gt, 0, cy, cx, w) +
           w3 * block_ssim(pred, gt, cy, h, 0, cx) + w4 * block_ssim(pred, gt, cy, h, cx, w);
}

SaliencyMap resize_to(const SaliencyMap& pred, ImageSize size) {
    cv::Mat src(pred.height, pred.width, CV_64F, const_cast<double*>(pred.values.data()));
    cv::Mat dst;
    cv::resize(src, dst, {size.width, size.height}, 0, 0, cv::INTER_LINEAR);
    SaliencyMap out = SaliencyMap::filled(size.height, size.width, 0.0);
    out.group_id = pred.group_id;
    out.image_id = pred.image_id;
    for (int y = 0; y < size.height; ++y) {
        for (int x = 0; x < size.width; ++x) {
            out.at(y, x) = std::clamp(dst.at<double>(y, x), 0.0, 1.0);
        }
    }
    return out;
}

} // namespace

double mae(const SaliencyMap& pred, const SaliencyMap& gt) {
    check_same_size(pred, gt);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        acc += std::abs(pred.values[i] - gt.values[i]);
    }
    return acc / static_cast<double>(pred.values.size());
}

double f_measure_mean(const SaliencyMap& pred, const SaliencyMap& gt, double beta_sq) {
    check_same_size(pred, gt);
    check_binary(gt);
    const double tau = std::min(2.0 * mean_of(pred.values), 1.0);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] > tau;
        const bool g = gt.values[i] != 0.0;
        tp += (p && g) ? 1 : 0;
        fp += (p && !g) ? 1 : 0;
        fn += (!p && g) ? 1 : 0;
    }
    if (tp + fn == 0) {
        return tp + fp == 0 ? 1.0 : 0.0;
    }
    if (tp == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall);
}

double s_measure(const SaliencyMap& pred, const SaliencyMap& gt, double alpha) {
    check_same_size(pred, gt);
    check_binary(gt);
    const double y = mean_of(gt.values);
    if (y == 0.0) {
        return std::clamp(1.0 - mean_of(pred.values), 0.0, 1.0);
    }
    if (y == 1.0) {
        return std::clamp(mean_of(pred.values), 0.0, 1.0);
    }
    // Identical maps are a perfect structural match; this sidesteps the
    // epsilon guards that would otherwise leave 1 - O(1e-16).
    if (pred.values == gt.values) {
        return 1.0;
    }
    const double q = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
    return std::clamp(q, 0.0, 1.0);
}

ImageMetrics evaluate_pair(const SaliencyMap& pred_in, const SaliencyMap& gt_in) {
    const SaliencyMap gt = binarize_ground_truth(gt_in);
    const SaliencyMap pred = pred_in.size() == gt.size() ? pred_in : resize_to(pred_in, gt.size());
    ImageMetrics m;
    m.group_id = gt_in.group_id;
    m.image_id = gt_in.image_id;
    m.s_measure = s_measure(pred, gt);
    m.f_measure_mean = f_measure_mean(pred, gt);
    m.mae = mae(pred, gt);
    return m;
}

EvalResult aggregate(std::string dataset_id, std::vector<ImageMetrics> per_image, std::vector<std::string> failures) {
    EvalResult r;
    r.dataset_id = std::move(dataset_id);
    r.failures = std::move(failures);
    if (!per_image.empty()) {
        for (const auto& m : per_image) {
            r.s_measure += m.s_measure;
            r.f_measure_mean += m.f_measure_mean;
            r.mae += m.mae;
        }
        const auto n = static_cast<double>(per_image.size());
        r.s_measure /= n;
        r.f_measure_mean /= n;
        r.mae /= n;
    }
    r.per_image = std::move(per_image);
    return r;
}

EvalResult evaluate_dataset(const fs::path& pred_dir, const fs::path& gt_dir, const EvaluateOptions& options) {
    if (!fs::is_directory(gt_dir)) {
        throw DatasetError("ground-truth root does not exist: " + gt_dir.string());
    }
    if (!fs::is_directory(pred_dir)) {
        throw DatasetError("prediction root does not exist: " + pred_dir.string());
    }

    struct Job {
        std::string group;
        std::string stem;
        fs::path gt;
        fs::path pred;
    };
    std::vector<Job> jobs;
    std::vector<std::string> missing;
    ScanOptions so;
    so.load_pixels = false;
    const ScanResult gts = scan_dataset(gt_dir, so);
    for (const auto& g : gts.groups) {
        for (const auto& m : g.members) {
            Job j{g.group_id, m.image_id, m.path, pred_dir / g.group_id / (m.image_id + ".png")};
            if (!fs::is_regular_file(j.pred)) {
                missing.push_back(g.group_id + "/" + m.image_id);
            }
            jobs.push_back(std::move(j));
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing predictions for " + std::to_string(missing.size()) + " image(s):";
        for (const auto& s : missing) {
            msg += " " + s;
        }
        throw DatasetError(msg);
    }

    std::vector<std::optional<ImageMetrics>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& j = jobs[i];
            try {
                SaliencyMap gt = read_saliency_png(j.gt);
                gt.group_id = j.group;
                gt.image_id = j.stem;
                SaliencyMap pred = read_saliency_png(j.pred);
                pred.group_id = j.group;
                results[i] = evaluate_pair(pred, gt);
            } catch (const std::exception& e) {
                errors[i] = j.group + "/" + j.stem + ": " + e.what();
            }
        }
    };
    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    std::vector<ImageMetrics> per_image;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            per_image.push_back(*results[i]);
        } else {
            failures.push_back(errors[i]);
        }
    }
    return aggregate(options.dataset_id, std::move(per_image), std::move(failures));
}

nlohmann::json to_json(const EvalResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& m : r.per_image) {
        rows.push_back({{"group_id", m.group_id},
                        {"image_id", m.image_id},
                        {"s_measure", m.s_measure},
                        {"f_measure_mean", m.f_measure_mean},
                        {"mae", m.mae}});
    }
    return {{"dataset_id", r.dataset_id},
            {"num_images", r.per_image.size()},
            {"s_measure", r.s_measure},
            {"f_measure_mean", r.f_measure_mean},
            {"mae", r.mae},
            {"failures", r.failures},
            {"per_image", rows}};
}

std::string format_table(const EvalResult& r) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s %8s\n", "dataset", "images", "S_m", "F_mean", "MAE");
    out += line;
    std::snprintf(line, sizeof(line), "%-24s %8zu %8.4f %8.4f %8.4f\n", r.dataset_id.c_str(), r.per_image.size(),
                  r.s_measure, r.f_measure_mean, r.mae);
    out += line;
    if (!r.failures.empty()) {
        out += "failed images:\n";
        for (const auto& f : r.failures) {
            out += "  " + f + "\n";
        }
    }
    out += "\n";
    std::snprintf(line, sizeof(line), "%-40s %8s %8s %8s\n", "image", "S_m", "F_mean", "MAE");
    out += line;
    for (const auto& m : r.per_image) {
        const std::string name = m.group_id + "/" + m.image_id;
        std::snprintf(line, sizeof(line), "%-40s %8.4f %8.4f %8.4f\n", name.c_str(), m.s_measure, m.f_measure_mean,
                      m.mae);
        out += line;
    }
    return out;
}

void write_eval_report(const EvalResult& result, const fs::path& json_path, const fs::path& text_path) {
    for (const auto& p : {json_path, text_path}) {
        if (p.has_parent_path()) {
            fs::create_directories(p.parent_path());
        }
    }
    std::ofstream js(json_path);
    std::ofstream txt(text_path);
    if (!js || !txt) {
        throw IoError("cannot write evaluation report next to " + json_path.string());
    }
    js << to_json(result).dump(2) << '\n';
    txt << format_table(result);
}

} // namespace cosod
