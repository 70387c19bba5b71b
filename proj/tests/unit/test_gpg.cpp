#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cosod/error.hpp"
#include "cosod/gpg.hpp"
#include "cosod/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cosod;

namespace {

SalientPixelSet make_set(int channels, const std::vector<std::vector<double>>& rows, int image_index = 0) {
    SalientPixelSet s;
    s.image_index = image_index;
    s.channels = channels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.positions.push_back({0, static_cast<int>(i)});
        s.embeddings.insert(s.embeddings.end(), rows[i].begin(), rows[i].end());
    }
    return s;
}

std::vector<SaliencyMap> uniform_saliency(const std::vector<FeatureMap>& f) {
    std::vector<SaliencyMap> out;
    for (const auto& m : f) {
        out.push_back(SaliencyMap::filled(m.image_h, m.image_w, 0.5));
    }
    return out;
}

std::vector<GridPos> row_major(int n, int width) {
    std::vector<GridPos> p;
    for (int i = 0; i < n; ++i) {
        p.push_back({i / width, i % width});
    }
    return p;
}

} // namespace

TEST_CASE("adaptive saliency threshold") {
    const auto uniform = SaliencyMap::filled(4, 4, 0.5);
    const GridMask u = binarize_saliency(uniform, {4, 4});
    CHECK(u.threshold == 1.0);
    CHECK(u.fallback);
    CHECK(u.count() == 16);

    auto single = SaliencyMap::filled(4, 4, 0.0);
    single.at(2, 1) = 1.0;
    const GridMask s = binarize_saliency(single, {4, 4});
    CHECK(s.threshold == doctest::Approx(0.125));
    CHECK_FALSE(s.fallback);
    CHECK(s.count() == 1);
    CHECK(s.at(2, 1));

    const GridMask z = binarize_saliency(SaliencyMap::filled(4, 4, 0.0), {4, 4});
    CHECK(z.fallback);
    CHECK(z.count() == 16);

    const GridMask f = binarize_saliency(single, {4, 4}, SaliencyThreshold::fixed(0.9));
    CHECK(f.count() == 1);
}

TEST_CASE("area downsampling averages cell footprints") {
    auto m = SaliencyMap::filled(4, 4, 0.0);
    m.at(0, 0) = 1.0;
    m.at(3, 3) = 0.4;
    const auto d = area_downsample(m, {2, 2});
    CHECK(d == std::vector<double>{0.25, 0.0, 0.0, 0.1});

    // Non-divisible sizes: equal-area cells preserve the mean.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto r = SaliencyMap::filled(7, 5, 0.0);
    for (auto& v : r.values) {
        v = u(rng);
    }
    const auto dr = area_downsample(r, {3, 2});
    const double mean_in = std::accumulate(r.values.begin(), r.values.end(), 0.0) / 35.0;
    const double mean_out = std::accumulate(dr.begin(), dr.end(), 0.0) / 6.0;
    CHECK(mean_out == doctest::Approx(mean_in).epsilon(1e-12));
}

TEST_CASE("group centre proxy is the mean salient embedding") {
    const auto same = make_set(2, {{3, -1}, {3, -1}, {3, -1}});
    const std::vector<SalientPixelSet> one{same};
    CHECK(compute_center_proxy(one).vector == std::vector<double>{3, -1});

    const std::vector<SalientPixelSet> sym{make_set(2, {{0, 2}}), make_set(2, {{2, 0}}, 1)};
    const auto p = compute_center_proxy(sym);
    CHECK(p.vector == std::vector<double>{1, 1});
    CHECK(p.contributing_pixel_count == 2);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<std::vector<double>> rows(100, std::vector<double>(6));
    for (auto& r : rows) {
        for (auto& v : r) {
            v = n(rng);
        }
    }
    std::vector<SalientPixelSet> sets{make_set(6, {rows.begin(), rows.begin() + 30}),
                                      make_set(6, {rows.begin() + 30, rows.begin() + 75}, 1),
                                      make_set(6, {rows.begin() + 75, rows.end()}, 2)};
    const auto proxy = compute_center_proxy(sets);
    CHECK(proxy.contributing_pixel_count == 100);
    for (int c = 0; c < 6; ++c) {
        double s = 0.0;
        for (const auto& r : rows) {
            s += r[c];
        }
        CHECK(std::abs(proxy.vector[c] - s / 100.0) < 1e-9);
    }

    // Any permutation of images or pixels gives the same proxy.
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<SalientPixelSet> shuffled{make_set(6, {rows.begin(), rows.begin() + 50}, 0),
                                          make_set(6, {rows.begin() + 50, rows.end()}, 1)};
    std::reverse(shuffled.begin(), shuffled.end());
    const auto proxy2 = compute_center_proxy(shuffled);
    for (int c = 0; c < 6; ++c) {
        CHECK(std::abs(proxy.vector[c] - proxy2.vector[c]) < 1e-12);
    }

    CHECK_THROWS(compute_center_proxy(std::vector<SalientPixelSet>{}));
}

TEST_CASE("scores are dot products with the proxy") {
    GroupCenterProxy proxy{{1, 0}, 1};
    const auto s = make_set(2, {{0, 1}, {1, 0}});
    CHECK(score_pixels(proxy, s) == std::vector<double>{0, 1});

    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> rows(50, std::vector<double>(5));
    for (auto& r : rows) {
        for (auto& v : r) {
            v = n(rng);
        }
    }
    GroupCenterProxy q{{0.3, -1.2, 2.0, 0.0, 0.7}, 1};
    const auto set = make_set(5, rows);
    const auto scores = score_pixels(q, set);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double d = 0.0;
        for (int c = 0; c < 5; ++c) {
            d += rows[i][c] * q.vector[c];
        }
        CHECK(std::abs(scores[i] - d) < 1e-9);
    }

    GroupCenterProxy q3 = q;
    for (auto& v : q3.vector) {
        v *= 3.0;
    }
    const auto scaled = score_pixels(q3, set);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(scaled[i] == doctest::Approx(3.0 * scores[i]));
    }
    const auto pos = set.positions;
    const auto a = select_topk(scores, pos, 5);
    const auto b = select_topk(scaled, pos, 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(a.picks[i].pos == b.picks[i].pos);
    }

    GroupCenterProxy wrong{{1, 2, 3}, 1};
    CHECK_THROWS_AS(score_pixels(wrong, set), ShapeError);
}

TEST_CASE("topk picks the highest scores with row-major tie-breaking") {
    const std::vector<double> s{0.1, 0.9, 0.5};
    const auto pos = row_major(3, 3);
    const auto one = select_topk(s, pos, 1);
    REQUIRE(one.picks.size() == 1);
    CHECK(one.picks[0].pos == GridPos{0, 1});
    CHECK_FALSE(one.truncated);

    const std::vector<double> flat(6, 2.0);
    const auto tie = select_topk(flat, row_major(6, 3), 2);
    CHECK(tie.picks[0].pos == GridPos{0, 0});
    CHECK(tie.picks[1].pos == GridPos{0, 1});

    const auto trunc = select_topk(s, pos, 5);
    CHECK(trunc.truncated);
    CHECK(trunc.picks.size() == 3);

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> r(50);
    for (auto& v : r) {
        v = u(rng);
    }
    const auto got = select_topk(r, row_major(50, 7), 2);
    const auto want = oracle::stable_topk(r, 2);
    CHECK(got.picks[0].pos == row_major(50, 7)[want[0]]);
    CHECK(got.picks[1].pos == row_major(50, 7)[want[1]]);

    CHECK_THROWS_AS(select_topk(s, pos, 0), ConfigError);
    CHECK_THROWS_AS(select_topk(s, row_major(2, 2), 1), ShapeError);
}

TEST_CASE("grid cells map to their centre pixels") {
    CHECK(grid_to_image_coords({3, 5}, {8, 9}, {8, 9}) == PixelPoint{5, 3});
    CHECK(grid_to_image_coords({0, 0}, {2, 2}, {100, 100}) == PixelPoint{25, 25});
    CHECK(grid_to_image_coords({1, 1}, {2, 2}, {100, 100}) == PixelPoint{75, 75});
    CHECK(grid_to_image_coords({3, 3}, {7, 7}, {71, 71}) == PixelPoint{35, 35});
    CHECK(grid_to_image_coords({18, 18}, {37, 37}, {375, 500}) == PixelPoint{250, 187});
}

TEST_CASE("prompts on noise-free synthetic groups land inside planted rectangles") {
    const auto fx = make_synthetic_fixture({});
    for (const auto& g : fx.groups) {
        const auto feats = synthetic_extract(g);
        const auto sal = uniform_saliency(feats);
        const PromptSet ps = generate_prompts(feats, sal, 2);
        REQUIRE(ps.images.size() == g.images.size());
        for (std::size_t i = 0; i < g.images.size(); ++i) {
            const auto& ip = ps.images[i];
            CHECK(ip.saliency_fallback);
            REQUIRE(ip.points.size() == 2);
            const PixelRect r = g.to_pixels(g.images[i].planted);
            for (const auto& p : ip.points) {
                CHECK(g.images[i].planted.contains(p.cell.row, p.cell.col));
                CHECK(r.contains(p.x, p.y));
            }
        }
    }
}

TEST_CASE("prompt count is min(K, salient cells)") {
    SyntheticGroupSpec g;
    g.group_id = "g";
    g.grid_h = g.grid_w = 4;
    g.channels = 2;
    g.image_h = g.image_w = 4;
    g.common_embedding = {1.0f, 0.0f};
    g.background_embedding = {0.0f, 1.0f};
    g.images = {{"a", {0, 0, 0, 0}}};
    const auto feats = synthetic_extract(g);
    auto sal = SaliencyMap::filled(4, 4, 0.0);
    sal.at(0, 0) = 1.0;
    sal.at(3, 3) = 1.0;
    const std::vector<SaliencyMap> maps{sal};
    for (int k : {1, 2, 3, 5}) {
        const auto ps = generate_prompts(feats, maps, k);
        CHECK(ps.images[0].salient_count == 2);
        CHECK(ps.images[0].points.size() == static_cast<std::size_t>(std::min(k, 2)));
        CHECK(ps.images[0].truncated == (k > 2));
        CHECK(ps.images[0].points[0].cell == GridPos{0, 0});
    }
}

TEST_CASE("single-image groups rank against their own salient mean") {
    FeatureMap f = FeatureMap::zeros(2, {1, 4}, {1, 4}, "x");
    // cells: (2,0) (1,0) (0,1) (1.5,0) -> mean (1.125, 0.25)
    f.values = {2, 1, 0, 1.5f, 0, 0, 1, 0};
    const std::vector<FeatureMap> feats{f};
    const std::vector<SaliencyMap> sal{SaliencyMap::filled(1, 4, 0.5)};
    const auto ps = generate_prompts(feats, sal, 2);
    CHECK(ps.proxy.vector[0] == doctest::Approx(1.125));
    CHECK(ps.images[0].points[0].cell == GridPos{0, 0});
    CHECK(ps.images[0].points[1].cell == GridPos{0, 3});
}

TEST_CASE("permuting the image order leaves per-image prompts unchanged") {
    FixtureOptions opts;
    opts.noise_amplitude = 0.05;
    const auto g = make_synthetic_fixture(opts).groups[0];
    auto feats = synthetic_extract(g);
    const auto base = generate_prompts(feats, uniform_saliency(feats), 2);
    std::vector<std::size_t> perm{2, 0, 3, 1};
    std::vector<FeatureMap> shuffled;
    for (auto i : perm) {
        shuffled.push_back(feats[i]);
    }
    const auto other = generate_prompts(shuffled, uniform_saliency(shuffled), 2);
    for (std::size_t j = 0; j < perm.size(); ++j) {
        const auto& a = base.images[perm[j]].points;
        const auto& b = other.images[j].points;
        REQUIRE(a.size() == b.size());
        for (std::size_t p = 0; p < a.size(); ++p) {
            CHECK(a[p].x == b[p].x);
            CHECK(a[p].y == b[p].y);
        }
    }
}

TEST_CASE("prompt generation input checks") {
    const auto fx = make_synthetic_fixture({});
    const auto feats = synthetic_extract(fx.groups[0]);
    std::vector<SaliencyMap> wrong{SaliencyMap::filled(3, 3, 0.5)};
    CHECK_THROWS_AS(generate_prompts(std::span(feats).first(1), wrong, 2), ShapeError);
    CHECK_THROWS_AS(generate_prompts(feats, uniform_saliency(feats), 0), ConfigError);
    const auto sal = uniform_saliency(feats);
    CHECK_THROWS_AS(generate_prompts(feats, std::span(sal).first(2), 2), ShapeError);
}
