#include <benchmark/benchmark.h>

#include "inpaint/frequency.hpp"
#include "inpaint/losses.hpp"
#include "inpaint/rng.hpp"

using namespace inpaint;

namespace {

Tensor random_image(int res, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({3, res, res});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    return x;
}

}  // namespace

static void BM_Ffl(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    const Tensor x = random_image(res, 1);
    const Tensor xhat = random_image(res, 2);
    for (auto _ : state) {
        LossValue v = ffl(x, xhat, 1.0);
        benchmark::DoNotOptimize(v.value);
    }
}
BENCHMARK(BM_Ffl)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_Perceptual(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    const Tensor x = random_image(res, 3);
    const Tensor xhat = random_image(res, 4);
    const FeatureExtractor extractor;
    for (auto _ : state) {
        LossValue v = perceptual(x, xhat, extractor);
        benchmark::DoNotOptimize(v.value);
    }
}
BENCHMARK(BM_Perceptual)->Arg(64)->Unit(benchmark::kMillisecond);
