#include "cosod/feature_map.hpp"

#include <cmath>

#include "cosod/error.hpp"

namespace cosod {

std::string to_string(GridSize g) {
    return std::to_string(g.height) + "x" + std::to_string(g.width);
}

FeatureMap FeatureMap::zeros(int channels, GridSize grid, ImageSize image, std::string backend_id) {
    FeatureMap f;
    f.channels = channels;
    f.grid_h = grid.height;
    f.grid_w = grid.width;
    f.image_h = image.height;
    f.image_w = image.width;
    f.backend_id = std::move(backend_id);
    f.values.assign(static_cast<std::size_t>(channels) * f.plane_size(), 0.0f);
    return f;
}

std::vector<float> FeatureMap::pixel(int y, int x) const {
    std::vector<float> v(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        v[c] = at(c, y, x);
    }
    return v;
}

void FeatureMap::validate() const {
    if (channels < 1 || grid_h < 1 || grid_w < 1) {
        throw ShapeError("feature map has non-positive shape " + std::to_string(channels) + "x" +
                         std::to_string(grid_h) + "x" + std::to_string(grid_w));
    }
    if (image_h < 1 || image_w < 1) {
        throw ShapeError("feature map has non-positive image geometry");
    }
    if (values.size() != static_cast<std::size_t>(channels) * plane_size()) {
        throw ShapeError("feature map payload holds " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(static_cast<std::size_t>(channels) * plane_size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            const auto plane = plane_size();
            const auto c = i / plane;
            const auto y = (i % plane) / grid_w;
            const auto x = i % grid_w;
            throw ShapeError("non-finite feature value at channel " + std::to_string(c) + ", cell (" +
                             std::to_string(y) + "," + std::to_string(x) + ")");
        }
    }
}

} // namespace cosod
