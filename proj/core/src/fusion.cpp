#include "cosod/fusion.hpp"

#include <cmath>

#include "cosod/error.hpp"

namespace cosod {

FeatureMap l2_normalize_pixelwise(const FeatureMap& features) {
    features.validate();
    FeatureMap out = features;
    const auto plane = features.plane_size();
    for (std::size_t p = 0; p < plane; ++p) {
        double sq = 0.0;
        for (int c = 0; c < features.channels; ++c) {
            const double v = features.values[c * plane + p];
            sq += v * v;
        }
        if (sq == 0.0) {
            continue;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (int c = 0; c < features.channels; ++c) {
            auto& v = out.values[c * plane + p];
            v = static_cast<float>(v * inv);
        }
    }
    return out;
}

FusedFeatureMap fuse(const FeatureMap& sd, const FeatureMap& vit) {
    if (sd.grid() != vit.grid()) {
        throw ShapeError("cannot fuse feature grids " + to_string(sd.grid()) + " (diffusion) and " +
                         to_string(vit.grid()) + " (vit); resample first");
    }
    const FeatureMap a = l2_normalize_pixelwise(sd);
    const FeatureMap b = l2_normalize_pixelwise(vit);

    FusedFeatureMap fused;
    fused.sd_channels = a.channels;
    fused.vit_channels = b.channels;
    fused.features = FeatureMap::zeros(a.channels + b.channels, a.grid(), sd.image(), "fused");
    std::copy(a.values.begin(), a.values.end(), fused.features.values.begin());
    std::copy(b.values.begin(), b.values.end(),
              fused.features.values.begin() + static_cast<std::ptrdiff_t>(a.values.size()));
    return fused;
}

FusedFeatureMap fuse_vit_only(const FeatureMap& vit) {
    FusedFeatureMap fused;
    fused.features = l2_normalize_pixelwise(vit);
    fused.sd_channels = 0;
    fused.vit_channels = vit.channels;
    return fused;
}

} // namespace cosod
