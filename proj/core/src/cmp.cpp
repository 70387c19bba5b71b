#include "cosod/cmp.hpp"

#include <algorithm>

#include "cosod/error.hpp"

namespace cosod {

std::string_view to_string(SegmenterKind kind) {
    return kind == SegmenterKind::sam_vitb ? "sam-vitb" : "oracle";
}

std::optional<SegmenterKind> parse_segmenter_kind(std::string_view name) {
    if (name == "sam-vitb") {
        return SegmenterKind::sam_vitb;
    }
    if (name == "oracle") {
        return SegmenterKind::oracle;
    }
    return std::nullopt;
}

BinaryMask BinaryMask::empty(int height, int width) {
    return {height, width, std::vector<unsigned char>(static_cast<std::size_t>(height) * width, 0)};
}

SegmenterResult segment(Segmenter& segmenter, const ImageRecord& image, std::span<const PromptPoint> prompts) {
    if (prompts.empty()) {
        throw Error("segmentation of " + image.key() + " needs at least one prompt");
    }
    for (const auto& p : prompts) {
        if (p.x < 0 || p.y < 0 || p.x >= image.width || p.y >= image.height) {
            throw ShapeError("prompt (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside image " +
                             image.key());
        }
    }
    SegmenterResult result = segmenter.segment(image, prompts);
    if (result.masks.empty()) {
        throw BackendError("segmenter returned no candidate masks for " + image.key());
    }
    if (result.scores.size() != result.masks.size()) {
        throw BackendError("segmenter returned misaligned quality scores for " + image.key());
    }
    for (const auto& m : result.masks) {
        if (m.height != image.height || m.width != image.width ||
            m.bits.size() != static_cast<std::size_t>(m.height) * m.width) {
            throw BackendError("segmenter mask size does not match image " + image.key());
        }
    }
    return result;
}

SaliencyMap select_mask(const SegmenterResult& result) {
    if (result.masks.empty()) {
        throw BackendError("no candidate masks to select from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.masks.size(); ++i) {
        if (result.scores[i] > result.scores[best]) {
            best = i;
        }
    }
    const BinaryMask& m = result.masks[best];
    SaliencyMap map = SaliencyMap::filled(m.height, m.width, 0.0);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        map.values[i] = m.bits[i] != 0 ? 1.0 : 0.0;
    }
    return map;
}

SegmenterResult oracle_segment(ImageSize image, std::span<const PromptPoint> prompts,
                               std::span<const PixelRect> regions) {
    BinaryMask mask = BinaryMask::empty(image.height, image.width);
    bool hit = false;
    for (const auto& r : regions) {
        const bool contains = std::any_of(prompts.begin(), prompts.end(),
                                          [&](const PromptPoint& p) { return r.contains(p.x, p.y); });
        if (!contains) {
            continue;
        }
        hit = true;
        for (int y = std::max(0, r.y0); y < std::min(image.height, r.y1); ++y) {
            for (int x = std::max(0, r.x0); x < std::min(image.width, r.x1); ++x) {
                mask.bits[static_cast<std::size_t>(y) * image.width + x] = 1;
            }
        }
    }
    SegmenterResult result;
    result.masks.push_back(std::move(mask));
    result.scores.push_back(hit ? 1.0 : 0.0);
    return result;
}

OracleSegmenter::OracleSegmenter(SyntheticFixture fixture) : fixture_(std::move(fixture)) {}

SegmenterResult OracleSegmenter::segment(const ImageRecord& image, std::span<const PromptPoint> prompts) {
    const SyntheticGroupSpec* g = fixture_.find(image.group_id);
    const SyntheticImageSpec* s = g != nullptr ? g->find(image.image_id) : nullptr;
    if (s == nullptr) {
        throw ConfigError("oracle segmenter has no planted region for " + image.key());
    }
    const PixelRect region = g->to_pixels(s->planted);
    return oracle_segment(image.size(), prompts, std::span(&region, 1));
}

} // namespace cosod
