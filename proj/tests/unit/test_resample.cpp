#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "cosod/error.hpp"
#include "cosod/resample.hpp"

using namespace cosod;

namespace {

// Pixel-centre bilinear sampling written out from the definition.
double sample_ref(const std::vector<float>& in, int ih, int iw, int oh, int ow, int i, int j) {
    auto coord = [](int o, int in_n, int out_n) {
        const double s = (o + 0.5) * in_n / out_n - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(in_n - 1));
    };
    const double sy = coord(i, ih, oh);
    const double sx = coord(j, iw, ow);
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, ih - 1);
    const int x1 = std::min(x0 + 1, iw - 1);
    const double fy = sy - y0;
    const double fx = sx - x0;
    auto v = [&](int y, int x) { return static_cast<double>(in[static_cast<std::size_t>(y) * iw + x]); };
    return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) + fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
}

} // namespace

TEST_CASE("2x2 to 4x4 matches the pixel-centre formula") {
    const std::vector<float> in{0, 1, 2, 3};
    const auto out = resize_plane_bilinear(in, {2, 2}, {4, 4});
    const double r[4] = {0.0, 0.25, 0.75, 1.0};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(out[i * 4 + j] == doctest::Approx(sample_ref(in, 2, 2, 4, 4, i, j)).epsilon(1e-7));
            CHECK(out[i * 4 + j] == doctest::Approx(2.0 * r[i] + r[j]).epsilon(1e-7));
        }
    }
}

TEST_CASE("identity, single cell and constant planes") {
    const std::vector<float> in{1.5f, -2.0f, 0.0f, 4.0f, 5.0f, 6.0f};
    CHECK(resize_plane_bilinear(in, {2, 3}, {2, 3}) == in);

    const std::vector<float> one{0.7f};
    for (float v : resize_plane_bilinear(one, {1, 1}, {5, 3})) {
        CHECK(v == 0.7f);
    }
    const std::vector<float> c(12, 0.3f);
    for (float v : resize_plane_bilinear(c, {3, 4}, {7, 9})) {
        CHECK(v == 0.3f);
    }
    CHECK_THROWS_AS(resize_plane_bilinear(in, {2, 2}, {4, 4}), ShapeError);
    CHECK_THROWS_AS(resize_plane_bilinear(in, {2, 3}, {0, 4}), ShapeError);
}

TEST_CASE("random planes agree with the formula and with OpenCV, without overshoot") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(-5.0f, 5.0f);
    for (int trial = 0; trial < 20; ++trial) {
        const int ih = 1 + trial % 5;
        const int iw = 2 + trial % 3;
        const int oh = ih * 2 + trial % 4;
        const int ow = iw * 3 + trial % 2;
        std::vector<float> in(static_cast<std::size_t>(ih) * iw);
        for (auto& v : in) {
            v = u(rng);
        }
        const auto out = resize_plane_bilinear(in, {ih, iw}, {oh, ow});
        const auto [lo, hi] = std::minmax_element(in.begin(), in.end());
        cv::Mat src(ih, iw, CV_32F, in.data());
        cv::Mat ref;
        cv::resize(src, ref, {ow, oh}, 0, 0, cv::INTER_LINEAR);
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                const float v = out[static_cast<std::size_t>(i) * ow + j];
                CHECK(std::abs(v - sample_ref(in, ih, iw, oh, ow, i, j)) < 1e-5);
                CHECK(std::abs(v - ref.at<float>(i, j)) < 1e-4);
                CHECK(v >= *lo);
                CHECK(v <= *hi);
            }
        }
    }
}

TEST_CASE("feature maps are resampled per channel and keep their image geometry") {
    FeatureMap f = FeatureMap::zeros(2, {2, 2}, {64, 48}, "vit");
    f.values = {0, 1, 2, 3, 10, 10, 10, 10};
    const FeatureMap up = upsample_bilinear(f, {4, 4});
    CHECK(up.grid() == GridSize{4, 4});
    CHECK(up.image() == ImageSize{64, 48});
    CHECK(up.backend_id == "vit");
    CHECK(up.at(0, 3, 3) == doctest::Approx(3.0));
    CHECK(up.at(1, 2, 1) == 10.0f);
    CHECK(upsample_bilinear(f, {2, 2}) == f);
}
