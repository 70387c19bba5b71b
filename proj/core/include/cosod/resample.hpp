#pragma once

#include <span>
#include <vector>

#include "cosod/feature_map.hpp"

namespace cosod {

/// Bilinear resize of one h x w plane with pixel-centre sampling
/// (align_corners = false). Source coordinates are clamped to the border.
std::vector<float> resize_plane_bilinear(std::span<const float> plane, GridSize from, GridSize to);

/// Per-channel bilinear resize of a feature map; exact copy when the grid
/// already matches. Image geometry is preserved.
FeatureMap upsample_bilinear(const FeatureMap& features, GridSize target);

} // namespace cosod
