#include <doctest.h>

#include <cmath>
#include <limits>

#include "cosod/error.hpp"
#include "cosod/feature_map.hpp"

using namespace cosod;

TEST_CASE("feature map indexing is channel-major") {
    FeatureMap f = FeatureMap::zeros(2, {2, 3}, {20, 30}, "x");
    CHECK(f.values.size() == 12);
    f.at(1, 1, 2) = 7.0f;
    CHECK(f.values[1 * 6 + 1 * 3 + 2] == 7.0f);
    CHECK(f.pixel(1, 2) == std::vector<float>{0.0f, 7.0f});
    CHECK(f.grid() == GridSize{2, 3});
    CHECK(f.image() == ImageSize{20, 30});
    CHECK_NOTHROW(f.validate());
}

TEST_CASE("validate rejects bad shapes and non-finite values") {
    FeatureMap f = FeatureMap::zeros(1, {2, 2}, {4, 4}, "x");
    f.values.pop_back();
    CHECK_THROWS_AS(f.validate(), ShapeError);

    FeatureMap g = FeatureMap::zeros(1, {2, 2}, {4, 4}, "x");
    g.at(0, 1, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(g.validate(), ShapeError);
    g.at(0, 1, 0) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(g.validate(), ShapeError);

    FeatureMap h = FeatureMap::zeros(1, {2, 2}, {0, 4}, "x");
    CHECK_THROWS_AS(h.validate(), ShapeError);
}
