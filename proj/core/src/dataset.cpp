#include "cosod/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "cosod/error.hpp"

namespace fs = std::filesystem;

namespace cosod {

SaliencyMap SaliencyMap::filled(int height, int width, double value) {
    SaliencyMap m;
    m.height = height;
    m.width = width;
    m.values.assign(static_cast<std::size_t>(height) * width, value);
    return m;
}

void SaliencyMap::validate() const {
    if (height < 1 || width < 1 || values.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("saliency map " + image_id + " has inconsistent shape");
    }
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ShapeError("saliency map " + image_id + " has a value outside [0,1]");
        }
    }
}

bool is_image_extension(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

cv::Mat read_rgb_image(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw DatasetError("cannot read image " + path.string());
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return rgb;
}

SaliencyMap read_saliency_png(const fs::path& path) {
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty()) {
        throw DatasetError("cannot read map " + path.string());
    }
    SaliencyMap m = SaliencyMap::filled(gray.rows, gray.cols, 0.0);
    m.image_id = path.stem().string();
    for (int y = 0; y < gray.rows; ++y) {
        const auto* row = gray.ptr<unsigned char>(y);
        for (int x = 0; x < gray.cols; ++x) {
            m.at(y, x) = row[x] / 255.0;
        }
    }
    return m;
}

unsigned char quantize_unit(double v) {
    const double scaled = std::floor(255.0 * std::clamp(v, 0.0, 1.0) + 0.5);
    return static_cast<unsigned char>(scaled);
}

fs::path write_prediction(const SaliencyMap& map, const fs::path& out_dir) {
    map.validate();
    const fs::path dir = out_dir / map.group_id;
    const fs::path file = dir / (map.image_id + ".png");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    cv::Mat img(map.height, map.width, CV_8UC1);
    for (int y = 0; y < map.height; ++y) {
        auto* row = img.ptr<unsigned char>(y);
        for (int x = 0; x < map.width; ++x) {
            row[x] = quantize_unit(map.at(y, x));
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(file.string(), img);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + file.string() + ": " + e.what());
    }
    if (!ok) {
        throw IoError("cannot write " + file.string());
    }
    return file;
}

SaliencyMap binarize_ground_truth(const SaliencyMap& gt) {
    SaliencyMap out = gt;
    for (double& v : out.values) {
        v = v >= 128.0 / 255.0 ? 1.0 : 0.0;
    }
    return out;
}

namespace {

void load_member(ImageRecord& rec) {
    rec.pixels = read_rgb_image(rec.path);
    rec.height = rec.pixels.rows;
    rec.width = rec.pixels.cols;
}

} // namespace

void load_group_pixels(GroupRecord& group) {
    for (auto& m : group.members) {
        if (m.pixels.empty()) {
            load_member(m);
        }
    }
}

ScanResult scan_dataset(const fs::path& root, const ScanOptions& options) {
    if (!fs::is_directory(root)) {
        throw DatasetError("dataset root does not exist: " + root.string());
    }
    if (options.gt_dir && !fs::is_directory(*options.gt_dir)) {
        throw DatasetError("ground-truth root does not exist: " + options.gt_dir->string());
    }

    std::vector<fs::path> group_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            group_dirs.push_back(entry.path());
        }
    }
    std::sort(group_dirs.begin(), group_dirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    ScanResult result;
    for (const auto& dir : group_dirs) {
        GroupRecord group;
        group.group_id = dir.filename().string();

        std::map<std::string, fs::path> by_stem;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || !is_image_extension(entry.path())) {
                continue;
            }
            const auto stem = entry.path().stem().string();
            auto [it, inserted] = by_stem.emplace(stem, entry.path());
            if (!inserted) {
                // Same stem with two extensions: keep the lexicographically first file.
                if (entry.path().filename().string() < it->second.filename().string()) {
                    it->second = entry.path();
                }
                result.warnings.push_back("duplicate image stem " + group.group_id + "/" + stem);
            }
        }
        if (by_stem.empty()) {
            result.warnings.push_back("skipping empty group " + group.group_id);
            spdlog::warn("skipping empty group directory {}", dir.string());
            continue;
        }

        std::vector<std::string> missing_gt;
        for (const auto& [stem, path] : by_stem) {
            ImageRecord rec;
            rec.image_id = stem;
            rec.group_id = group.group_id;
            rec.path = path;
            if (options.load_pixels) {
                load_member(rec);
            }
            if (options.gt_dir) {
                const fs::path gt_path = *options.gt_dir / group.group_id / (stem + ".png");
                if (fs::is_regular_file(gt_path)) {
                    SaliencyMap gt = read_saliency_png(gt_path);
                    gt.group_id = group.group_id;
                    gt.image_id = stem;
                    rec.ground_truth = std::move(gt);
                } else {
                    missing_gt.push_back(stem);
                }
            }
            group.members.push_back(std::move(rec));
        }
        if (options.require_complete_gt && !missing_gt.empty() && missing_gt.size() < group.members.size()) {
            std::string msg = "group " + group.group_id + " is missing ground truth for:";
            for (const auto& s : missing_gt) {
                msg += " " + s;
            }
            throw DatasetError(msg);
        }
        result.groups.push_back(std::move(group));
    }
    return result;
}

} // namespace cosod
