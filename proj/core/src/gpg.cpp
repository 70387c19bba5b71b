#include "cosod/gpg.hpp"

#include <algorithm>
#include <numeric>

#include "cosod/error.hpp"

namespace cosod {

std::size_t GridMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), static_cast<unsigned char>(1)));
}

namespace {

// Overlap of output cell i with input pixel j along one axis, as (j, weight).
std::vector<std::vector<std::pair<int, double>>> area_weights(int in, int out) {
    std::vector<std::vector<std::pair<int, double>>> w(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        const double lo = i * scale;
        const double hi = (i + 1) * scale;
        for (int j = static_cast<int>(lo); j < in && j < hi; ++j) {
            const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
            if (overlap > 0.0) {
                w[i].emplace_back(j, overlap);
            }
        }
    }
    return w;
}

} // namespace

std::vector<double> area_downsample(const SaliencyMap& map, GridSize grid) {
    map.validate();
    if (grid.height < 1 || grid.width < 1) {
        throw ShapeError("area downsample needs a positive grid");
    }
    const auto wy = area_weights(map.height, grid.height);
    const auto wx = area_weights(map.width, grid.width);
    std::vector<double> out(static_cast<std::size_t>(grid.height) * grid.width);
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            double acc = 0.0;
            double total = 0.0;
            for (const auto& [y, a] : wy[r]) {
                for (const auto& [x, b] : wx[c]) {
                    acc += a * b * map.at(y, x);
                    total += a * b;
                }
            }
            out[static_cast<std::size_t>(r) * grid.width + c] = acc / total;
        }
    }
    return out;
}

GridMask binarize_saliency(const SaliencyMap& map, GridSize grid, SaliencyThreshold policy) {
    const auto cells = area_downsample(map, grid);
    GridMask mask;
    mask.size = grid;
    if (policy.mode == SaliencyThreshold::Mode::adaptive) {
        const double mean = std::accumulate(cells.begin(), cells.end(), 0.0) / static_cast<double>(cells.size());
        mask.threshold = std::min(2.0 * mean, 1.0);
    } else {
        mask.threshold = policy.tau;
    }
    mask.bits.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        mask.bits[i] = cells[i] > mask.threshold ? 1 : 0;
    }
    if (mask.count() == 0) {
        std::fill(mask.bits.begin(), mask.bits.end(), 1);
        mask.fallback = true;
    }
    return mask;
}

SalientPixelSet gather_salient(const FeatureMap& features, const GridMask& mask, int image_index) {
    if (mask.size != features.grid()) {
        throw ShapeError("saliency mask grid " + to_string(mask.size) + " does not match feature grid " +
                         to_string(features.grid()));
    }
    SalientPixelSet set;
    set.image_index = image_index;
    set.channels = features.channels;
    for (int r = 0; r < features.grid_h; ++r) {
        for (int c = 0; c < features.grid_w; ++c) {
            if (!mask.at(r, c)) {
                continue;
            }
            set.positions.push_back({r, c});
            for (int ch = 0; ch < features.channels; ++ch) {
                set.embeddings.push_back(features.at(ch, r, c));
            }
        }
    }
    return set;
}

GroupCenterProxy compute_center_proxy(std::span<const SalientPixelSet> pixels) {
    std::size_t count = 0;
    int channels = -1;
    for (const auto& set : pixels) {
        if (set.size() == 0) {
            continue;
        }
        if (channels >= 0 && set.channels != channels) {
            throw ShapeError("salient pixel sets disagree on embedding size");
        }
        channels = set.channels;
        count += set.size();
    }
    if (count == 0) {
        throw Error("group centre proxy needs at least one salient pixel");
    }
    std::vector<long double> acc(static_cast<std::size_t>(channels), 0.0L);
    for (const auto& set : pixels) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto e = set.embedding(i);
            for (int c = 0; c < channels; ++c) {
                acc[c] += e[c];
            }
        }
    }
    GroupCenterProxy proxy;
    proxy.contributing_pixel_count = count;
    proxy.vector.resize(acc.size());
    for (std::size_t c = 0; c < acc.size(); ++c) {
        proxy.vector[c] = static_cast<double>(acc[c] / static_cast<long double>(count));
    }
    return proxy;
}

std::vector<double> score_pixels(const GroupCenterProxy& proxy, const SalientPixelSet& pixels) {
    if (pixels.size() > 0 && static_cast<std::size_t>(pixels.channels) != proxy.vector.size()) {
        throw ShapeError("embedding size " + std::to_string(pixels.channels) + " does not match proxy size " +
                         std::to_string(proxy.vector.size()));
    }
    std::vector<double> scores(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto e = pixels.embedding(i);
        double s = 0.0;
        for (std::size_t c = 0; c < e.size(); ++c) {
            s += proxy.vector[c] * e[c];
        }
        scores[i] = s;
    }
    return scores;
}

TopK select_topk(std::span<const double> scores, std::span<const GridPos> positions, int k) {
    if (k < 1) {
        throw ConfigError("TopK needs K >= 1");
    }
    if (scores.size() != positions.size()) {
        throw ShapeError("TopK scores and positions differ in length");
    }
    if (scores.empty()) {
        throw Error("TopK over an empty candidate list");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) {
                              return scores[a] > scores[b];
                          }
                          return positions[a] < positions[b];
                      });
    TopK result;
    result.truncated = take < static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < take; ++i) {
        result.picks.push_back({positions[order[i]], scores[order[i]]});
    }
    return result;
}

PixelPoint grid_to_image_coords(GridPos pos, GridSize grid, ImageSize image) {
    // floor((col + 0.5) * W_img / W) in exact integer arithmetic.
    auto map = [](int cell, int cells, int pixels) {
        const long long v = (2LL * cell + 1) * pixels / (2LL * cells);
        return static_cast<int>(std::clamp<long long>(v, 0, pixels - 1));
    };
    return {map(pos.col, grid.width, image.width), map(pos.row, grid.height, image.height)};
}

PromptSet generate_prompts(std::span<const FeatureMap> features, std::span<const SaliencyMap> saliency, int k,
                           SaliencyThreshold policy) {
    if (features.empty()) {
        throw Error("prompt generation needs a non-empty group");
    }
    if (features.size() != saliency.size()) {
        throw ShapeError("prompt generation needs one saliency map per image");
    }
    if (k < 1) {
        throw ConfigError("TopK needs K >= 1");
    }

    PromptSet set;
    set.k = k;
    std::vector<SalientPixelSet> salient;
    salient.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        f.validate();
        if (f.channels != features.front().channels) {
            throw ShapeError("group features disagree on channel count");
        }
        if (saliency[i].size() != f.image()) {
            throw ShapeError("saliency map " + saliency[i].image_id + " does not match its image size");
        }
        const GridMask mask = binarize_saliency(saliency[i], f.grid(), policy);
        salient.push_back(gather_salient(f, mask, static_cast<int>(i)));
        ImagePrompts prompts;
        prompts.saliency_fallback = mask.fallback;
        prompts.salient_count = salient.back().size();
        set.images.push_back(prompts);
    }

    set.proxy = compute_center_proxy(salient);

    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto scores = score_pixels(set.proxy, salient[i]);
        const TopK top = select_topk(scores, salient[i].positions, k);
        auto& out = set.images[i];
        out.truncated = top.truncated;
        for (const auto& pick : top.picks) {
            const PixelPoint p = grid_to_image_coords(pick.pos, features[i].grid(), features[i].image());
            out.points.push_back({p.x, p.y, pick.score, pick.pos});
        }
    }
    return set;
}

} // namespace cosod
