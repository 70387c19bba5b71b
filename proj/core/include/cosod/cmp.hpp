#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosod/dataset.hpp"
#include "cosod/gpg.hpp"
#include "cosod/synthetic.hpp"

namespace cosod {

enum class SegmenterKind { sam_vitb, oracle };

std::string_view to_string(SegmenterKind kind);
std::optional<SegmenterKind> parse_segmenter_kind(std::string_view name);

struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<unsigned char> bits; // row-major, 0 or 1

    static BinaryMask empty(int height, int width);
    bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct SegmenterResult {
    std::vector<BinaryMask> masks;
    std::vector<double> scores; // aligned with masks
};

/// Prompt-based segmenter. All points of one image go in a single call as
/// positive prompts. One instance per worker.
class Segmenter {
  public:
    virtual ~Segmenter() = default;
    virtual SegmenterResult segment(const ImageRecord& image, std::span<const PromptPoint> prompts) = 0;
    virtual std::vector<std::filesystem::path> weight_files() const { return {}; }
};

/// Checks prompt bounds, delegates, then checks the result: at least one
/// candidate, masks sized like the image, scores aligned.
SegmenterResult segment(Segmenter& segmenter, const ImageRecord& image, std::span<const PromptPoint> prompts);

/// Highest-scoring candidate as a {0,1} map; ties keep the first.
SaliencyMap select_mask(const SegmenterResult& result);

/// Test double: one candidate, the union of the regions hit by a prompt
/// (score 1), or an empty mask with score 0 when nothing is hit.
SegmenterResult oracle_segment(ImageSize image, std::span<const PromptPoint> prompts,
                               std::span<const PixelRect> regions);

/// Oracle over the planted rectangles of a synthetic fixture.
class OracleSegmenter final : public Segmenter {
  public:
    explicit OracleSegmenter(SyntheticFixture fixture);
    SegmenterResult segment(const ImageRecord& image, std::span<const PromptPoint> prompts) override;

  private:
    SyntheticFixture fixture_;
};

} // namespace cosod
