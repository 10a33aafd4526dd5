#include <benchmark/benchmark.h>

#include "inpaint/fft.hpp"
#include "inpaint/rng.hpp"

using namespace inpaint;

static void BM_Fft2(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor x({n, n});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    for (auto _ : state) {
        ComplexGrid g = fft2(x);
        benchmark::DoNotOptimize(g.re.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Fft2)->Arg(8)->Arg(32)->Arg(64)->Arg(128);

static void BM_Ifft2RoundTrip(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(2);
    Tensor x({n, n});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    for (auto _ : state) {
        Tensor back = ifft2(fft2(x));
        benchmark::DoNotOptimize(back.data());
    }
}
BENCHMARK(BM_Ifft2RoundTrip)->Arg(32)->Arg(64);
