#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "cosod/dataset.hpp"
#include "cosod/feature_map.hpp"

namespace cosod {

struct GridPos {
    int row = 0;
    int col = 0;

    // Lexicographic (row, col) order is row-major linear-index order.
    friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

struct PixelPoint {
    int x = 0; // column
    int y = 0; // row

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct SaliencyThreshold {
    enum class Mode { adaptive, fixed };
    Mode mode = Mode::adaptive;
    double tau = 0.0;

    /// τ = min(2 · mean, 1) over the grid-resolution map.
    static SaliencyThreshold adaptive() { return {}; }
    static SaliencyThreshold fixed(double tau) { return {Mode::fixed, tau}; }
};

struct GridMask {
    GridSize size;
    std::vector<unsigned char> bits; // row-major, 1 = salient
    double threshold = 0.0;
    bool fallback = false; // nothing passed the threshold; every cell kept

    std::size_t count() const;
    bool at(int row, int col) const { return bits[static_cast<std::size_t>(row) * size.width + col] != 0; }
};

/// Area-weighted average of the map over each grid cell's footprint.
std::vector<double> area_downsample(const SaliencyMap& map, GridSize grid);

/// Downsamples to the grid, keeps cells strictly above the threshold and
/// falls back to all cells when none survive.
GridMask binarize_saliency(const SaliencyMap& map, GridSize grid,
                           SaliencyThreshold policy = SaliencyThreshold::adaptive());

/// Salient cells of one image with their embeddings, in row-major order.
struct SalientPixelSet {
    int image_index = 0;
    int channels = 0;
    std::vector<GridPos> positions;
    std::vector<double> embeddings; // positions.size() x channels

    std::size_t size() const { return positions.size(); }
    std::span<const double> embedding(std::size_t i) const {
        return {embeddings.data() + i * channels, static_cast<std::size_t>(channels)};
    }
};

SalientPixelSet gather_salient(const FeatureMap& features, const GridMask& mask, int image_index);

struct GroupCenterProxy {
    std::vector<double> vector;
    std::size_t contributing_pixel_count = 0;
};

/// Unweighted mean over every salient embedding of every image.
GroupCenterProxy compute_center_proxy(std::span<const SalientPixelSet> pixels);

/// Dot product of the proxy with each salient embedding, in set order.
std::vector<double> score_pixels(const GroupCenterProxy& proxy, const SalientPixelSet& pixels);

struct ScoredPos {
    GridPos pos;
    double score = 0.0;
};

struct TopK {
    std::vector<ScoredPos> picks; // descending score, ties by row-major index
    bool truncated = false;       // fewer than K candidates were available
};

TopK select_topk(std::span<const double> scores, std::span<const GridPos> positions, int k);

/// Centre of the grid cell in image pixels: x = floor((col + 0.5) W_img / W).
PixelPoint grid_to_image_coords(GridPos pos, GridSize grid, ImageSize image);

struct PromptPoint {
    int x = 0;
    int y = 0;
    double score = 0.0;
    GridPos cell;
};

struct ImagePrompts {
    std::vector<PromptPoint> points;
    bool truncated = false;
    bool saliency_fallback = false;
    std::size_t salient_count = 0;
};

struct PromptSet {
    int k = 0;
    GroupCenterProxy proxy;
    std::vector<ImagePrompts> images; // aligned with the input features
};

/// Saliency filter → group centre proxy → per-image scoring → TopK → image
/// coordinates. `saliency[i]` must match the source size of `features[i]`.
PromptSet generate_prompts(std::span<const FeatureMap> features, std::span<const SaliencyMap> saliency, int k,
                           SaliencyThreshold policy = SaliencyThreshold::adaptive());

} // namespace cosod
