#include "cosod/resample.hpp"

#include <algorithm>
#include <cmath>

#include "cosod/error.hpp"

namespace cosod {

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> make_taps(int in, int out) {
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, in - 1);
        taps[i] = {lo, hi, src - lo};
    }
    return taps;
}

} // namespace

std::vector<float> resize_plane_bilinear(std::span<const float> plane, GridSize from, GridSize to) {
    if (from.height < 1 || from.width < 1 || to.height < 1 || to.width < 1) {
        throw ShapeError("bilinear resize needs positive sizes, got " + to_string(from) + " -> " + to_string(to));
    }
    if (plane.size() != static_cast<std::size_t>(from.height) * from.width) {
        throw ShapeError("bilinear resize: plane size does not match " + to_string(from));
    }
    if (from == to) {
        return {plane.begin(), plane.end()};
    }
    const auto ty = make_taps(from.height, to.height);
    const auto tx = make_taps(from.width, to.width);
    std::vector<float> out(static_cast<std::size_t>(to.height) * to.width);
    for (int y = 0; y < to.height; ++y) {
        const auto& a = ty[y];
        const float* r0 = plane.data() + static_cast<std::size_t>(a.lo) * from.width;
        const float* r1 = plane.data() + static_cast<std::size_t>(a.hi) * from.width;
        for (int x = 0; x < to.width; ++x) {
            const auto& b = tx[x];
            const double top = r0[b.lo] + (r0[b.hi] - static_cast<double>(r0[b.lo])) * b.frac;
            const double bot = r1[b.lo] + (r1[b.hi] - static_cast<double>(r1[b.lo])) * b.frac;
            out[static_cast<std::size_t>(y) * to.width + x] = static_cast<float>(top + (bot - top) * a.frac);
        }
    }
    return out;
}

FeatureMap upsample_bilinear(const FeatureMap& features, GridSize target) {
    if (features.grid() == target) {
        return features;
    }
    FeatureMap out = FeatureMap::zeros(features.channels, target, features.image(), features.backend_id);
    const auto in_plane = features.plane_size();
    const auto out_plane = out.plane_size();
    for (int c = 0; c < features.channels; ++c) {
        std::span<const float> src(features.values.data() + c * in_plane, in_plane);
        auto resized = resize_plane_bilinear(src, features.grid(), target);
        std::copy(resized.begin(), resized.end(), out.values.begin() + static_cast<std::ptrdiff_t>(c * out_plane));
    }
    return out;
}

} // namespace cosod
