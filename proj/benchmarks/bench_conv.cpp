#include <benchmark/benchmark.h>

#include "inpaint/conv.hpp"
#include "inpaint/rng.hpp"

using namespace inpaint;

static void BM_Conv2d(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const int hw = static_cast<int>(state.range(1));
    Rng rng(1);
    Tensor x({c, hw, hw});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    Tensor w({c, c, 3, 3});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, 0.05);
    for (auto _ : state) {
        Tensor y = conv2d(x, w, ConvGeom{1, 1, 1});
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c) * c * 9 * hw * hw);
}
BENCHMARK(BM_Conv2d)->Args({16, 64})->Args({64, 16})->Args({128, 8});

static void BM_Conv2dBwdInput(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const int hw = static_cast<int>(state.range(1));
    Rng rng(2);
    Tensor g({c, hw / 2, hw / 2});
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform();
    Tensor w({c, c, 3, 3});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, 0.05);
    for (auto _ : state) {
        Tensor y = conv2d_bwd_input(g, w, ConvGeom{2, 1, 1}, hw, hw);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_Conv2dBwdInput)->Args({32, 32})->Args({64, 16});
