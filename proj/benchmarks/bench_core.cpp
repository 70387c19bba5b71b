#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cosod/evaluation.hpp"
#include "cosod/gpg.hpp"
#include "cosod/pca.hpp"
#include "cosod/resample.hpp"
#include "cosod/synthetic.hpp"

namespace {

using namespace cosod;

SaliencyMap random_map(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto m = SaliencyMap::filled(h, w, 0.0);
    for (auto& v : m.values) {
        v = u(rng);
    }
    return m;
}

void BM_ReducePca(benchmark::State& state) {
    const auto rows = static_cast<int>(state.range(0));
    const auto cols = static_cast<int>(state.range(1));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = n(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduce_pca(x, 64));
    }
}
BENCHMARK(BM_ReducePca)->Args({1024, 256})->Args({4096, 512})->Unit(benchmark::kMillisecond);

void BM_SMeasure(benchmark::State& state) {
    const auto side = static_cast<int>(state.range(0));
    const auto pred = random_map(side, side, 2);
    auto gt = SaliencyMap::filled(side, side, 0.0);
    for (int y = side / 4; y < 3 * side / 4; ++y) {
        for (int x = side / 3; x < 2 * side / 3; ++x) {
            gt.at(y, x) = 1.0;
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(s_measure(pred, gt));
    }
}
BENCHMARK(BM_SMeasure)->Arg(256)->Arg(512);

void BM_SelectTopk(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> bucket(0, 15);
    std::vector<double> scores(n);
    std::vector<GridPos> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = bucket(rng) * 0.1;
        pos[i] = {static_cast<int>(i / 64), static_cast<int>(i % 64)};
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_topk(scores, pos, 2));
    }
}
BENCHMARK(BM_SelectTopk)->Arg(1024)->Arg(4096);

void BM_UpsampleBilinear(benchmark::State& state) {
    auto f = FeatureMap::zeros(static_cast<int>(state.range(0)), {32, 32}, {512, 512}, "bench");
    std::mt19937_64 rng(4);
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (auto& v : f.values) {
        v = n(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(upsample_bilinear(f, {64, 64}));
    }
}
BENCHMARK(BM_UpsampleBilinear)->Arg(256)->Arg(768)->Unit(benchmark::kMillisecond);

void BM_SyntheticGroupPrompts(benchmark::State& state) {
    FixtureOptions opts;
    opts.groups = 1;
    opts.images_per_group = static_cast<int>(state.range(0));
    opts.grid = 32;
    opts.channels = 64;
    opts.noise_amplitude = 0.1;
    const auto fx = make_synthetic_fixture(opts);
    const auto& g = fx.groups.front();
    const auto feats = synthetic_extract(g);
    std::vector<SaliencyMap> sal;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        sal.push_back(random_map(g.image_h, g.image_w, 10 + i));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_prompts(feats, sal, 2));
    }
}
BENCHMARK(BM_SyntheticGroupPrompts)->Arg(4)->Arg(16);

} // namespace
BENCHMARK_MAIN();
