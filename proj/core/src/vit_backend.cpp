#include "cosod/vit_backend.hpp"

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "cosod/error.hpp"

namespace cosod {

cv::Mat make_vit_blob(const cv::Mat& rgb, const VitOptions& options) {
    if (rgb.empty() || rgb.type() != CV_8UC3) {
        throw ShapeError("ViT input must be a non-empty 8-bit RGB image");
    }
    cv::Mat resized;
    cv::resize(rgb, resized, {options.input_size, options.input_size}, 0, 0, cv::INTER_CUBIC);
    cv::Mat f;
    resized.convertTo(f, CV_32FC3, 1.0 / 255.0);
    cv::subtract(f, cv::Scalar(options.mean[0], options.mean[1], options.mean[2]), f);
    cv::divide(f, cv::Scalar(options.stddev[0], options.stddev[1], options.stddev[2]), f);
    return cv::dnn::blobFromImage(f);
}

FeatureMap extract_vit(const ImageRecord& image, VitModel& model, const VitOptions& options) {
    if (options.input_size % options.patch_size != 0) {
        throw ConfigError("ViT input size " + std::to_string(options.input_size) + " is not a multiple of patch " +
                          std::to_string(options.patch_size));
    }
    const cv::Mat blob = make_vit_blob(image.pixels, options);
    cv::Mat tokens = model.tokens(blob, options.layer);
    const int grid = options.grid();
    const int expected = options.prefix_tokens + grid * grid;
    if (tokens.dims != 2 || tokens.type() != CV_32F || tokens.rows != expected || tokens.cols < 1) {
        throw BackendError("ViT returned " + std::to_string(tokens.rows) + " tokens, expected " +
                           std::to_string(expected) + " for a " + std::to_string(grid) + "x" +
                           std::to_string(grid) + " grid");
    }
    FeatureMap f = FeatureMap::zeros(tokens.cols, {grid, grid}, image.size(), kVitBackendId);
    for (int y = 0; y < grid; ++y) {
        for (int x = 0; x < grid; ++x) {
            const float* row = tokens.ptr<float>(options.prefix_tokens + y * grid + x);
            for (int c = 0; c < tokens.cols; ++c) {
                f.at(c, y, x) = row[c];
            }
        }
    }
    f.validate();
    return f;
}

} // namespace cosod
