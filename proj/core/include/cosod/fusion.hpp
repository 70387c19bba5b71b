#pragma once

#include "cosod/feature_map.hpp"

namespace cosod {

struct FusedFeatureMap {
    FeatureMap features;
    int sd_channels = 0;
    int vit_channels = 0;
};

/// Divides each cell's channel vector by its L2 norm; zero vectors stay zero.
/// Throws ShapeError naming the cell on non-finite input.
FeatureMap l2_normalize_pixelwise(const FeatureMap& features);

/// Concatenates the normalized diffusion features (first) and normalized ViT
/// features (second). Both maps must share the same grid.
FusedFeatureMap fuse(const FeatureMap& sd, const FeatureMap& vit);

/// ViT-only variant: the normalized ViT map with an empty diffusion part.
FusedFeatureMap fuse_vit_only(const FeatureMap& vit);

} // namespace cosod
