#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cosod/feature_map.hpp"

namespace cosod {

/// Axis-aligned rectangle in grid cells, inclusive bounds.
struct GridRect {
    int row0 = 0;
    int col0 = 0;
    int row1 = 0;
    int col1 = 0;

    bool contains(int row, int col) const { return row >= row0 && row <= row1 && col >= col0 && col <= col1; }
    int area() const { return (row1 - row0 + 1) * (col1 - col0 + 1); }
    friend bool operator==(const GridRect&, const GridRect&) = default;
};

/// Half-open rectangle in image pixels: x in [x0, x1), y in [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct SyntheticImageSpec {
    std::string image_id;
    GridRect planted;
};

/// Deterministic substrate for tests: every image is background_embedding
/// everywhere and common_embedding inside its planted rectangle, plus seeded
/// uniform noise in [-noise_amplitude, noise_amplitude].
struct SyntheticGroupSpec {
    std::string group_id;
    int grid_h = 16;
    int grid_w = 16;
    int channels = 8;
    int image_h = 64;
    int image_w = 64;
    std::vector<float> common_embedding;
    std::vector<float> background_embedding;
    std::vector<SyntheticImageSpec> images;
    double noise_amplitude = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    const SyntheticImageSpec* find(const std::string& image_id) const;
    /// Image-space footprint of a planted rectangle.
    PixelRect to_pixels(const GridRect& r) const;
};

inline constexpr const char* kSyntheticBackendId = "synthetic";

std::vector<FeatureMap> synthetic_extract(const SyntheticGroupSpec& spec);

struct SyntheticFixture {
    std::vector<SyntheticGroupSpec> groups;

    const SyntheticGroupSpec* find(const std::string& group_id) const;
};

SyntheticFixture load_synthetic_fixture(const std::filesystem::path& file);
void save_synthetic_fixture(const SyntheticFixture& fixture, const std::filesystem::path& file);

struct FixtureOptions {
    int groups = 5;
    int images_per_group = 4;
    int grid = 16;
    int channels = 8;
    int cell_pixels = 4;
    double noise_amplitude = 0.0;
    std::uint64_t seed = 7;
};

SyntheticFixture make_synthetic_fixture(const FixtureOptions& options);

struct FixtureLayout {
    std::filesystem::path images_root;   // <root>/images/<group>/<image>.png
    std::filesystem::path gt_root;       // <root>/gt/<group>/<image>.png
    std::filesystem::path saliency_root; // <root>/saliency/<group>/<image>.png
    std::filesystem::path spec_path;     // <root>/images/synthetic.json
};

/// Writes RGB images, binary GT masks, soft saliency maps and the JSON spec.
FixtureLayout write_synthetic_fixture(const SyntheticFixture& fixture, const std::filesystem::path& root);

} // namespace cosod
