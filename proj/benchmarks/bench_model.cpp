#include <benchmark/benchmark.h>

#include "inpaint/model.hpp"
#include "inpaint/rng.hpp"

using namespace inpaint;

namespace {

Tensor random_image(int res, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({3, res, res});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    return x;
}

Mask stripe_mask(int res) {
    Mask m(res, res);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) m.at(y, x) = (x / 8) % 2;
    return m;
}

}  // namespace

static void BM_GeneratorForward(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    FfcConfig cfg;
    ParamSet params = init_generator_params(cfg, 1);
    const Tensor x = random_image(res, 7);
    const Mask m = stripe_mask(res);
    for (auto _ : state) {
        Tensor y = generator_forward(x, m, params, cfg);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_GeneratorForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_GeneratorBackward(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    FfcConfig cfg;
    ParamSet params = init_generator_params(cfg, 1);
    const Tensor x = random_image(res, 7);
    const Mask m = stripe_mask(res);
    for (auto _ : state) {
        VarMap vm = lift_params(params, true);
        ad::Var out = generator_forward(ad::constant(x), m, vm, cfg);
        ad::GradMap gm = ad::backward(ad::mean(ad::mul(out, out)));
        benchmark::DoNotOptimize(gm.grads_.size());
    }
}
BENCHMARK(BM_GeneratorBackward)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_DiscriminatorForward(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    DiscConfig cfg;
    ParamSet params = init_discriminator_params(cfg, 2);
    const Tensor x = random_image(res, 9);
    for (auto _ : state) {
        auto out = discriminator_forward(x, params, cfg);
        benchmark::DoNotOptimize(out.first.data());
    }
}
BENCHMARK(BM_DiscriminatorForward)->Arg(64)->Unit(benchmark::kMillisecond);
