#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cosod {

struct GridSize {
    int height = 0;
    int width = 0;

    friend bool operator==(const GridSize&, const GridSize&) = default;
};

struct ImageSize {
    int height = 0;
    int width = 0;

    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

std::string to_string(GridSize g);

/// Dense per-image feature grid stored row-major as [C, H, W].
///
/// The grid covers the whole source image; `image_h`/`image_w` record the
/// source geometry so grid cells can be mapped back to pixel coordinates.
struct FeatureMap {
    int channels = 0;
    int grid_h = 0;
    int grid_w = 0;
    int image_h = 0;
    int image_w = 0;
    std::string backend_id;
    std::vector<float> values;

    static FeatureMap zeros(int channels, GridSize grid, ImageSize image, std::string backend_id);

    GridSize grid() const { return {grid_h, grid_w}; }
    ImageSize image() const { return {image_h, image_w}; }
    std::size_t plane_size() const { return static_cast<std::size_t>(grid_h) * grid_w; }

    float& at(int c, int y, int x) { return values[(static_cast<std::size_t>(c) * grid_h + y) * grid_w + x]; }
    float at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * grid_h + y) * grid_w + x];
    }

    /// Channel vector at one grid cell.
    std::vector<float> pixel(int y, int x) const;

    /// Throws ShapeError on inconsistent dimensions or non-finite values.
    void validate() const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

} // namespace cosod
