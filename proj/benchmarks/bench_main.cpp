#include <benchmark/benchmark.h>

#include "srdiff/image.hpp"
#include "srdiff/kernels.hpp"
#include "srdiff/model.hpp"
#include "srdiff/rng.hpp"
#include "srdiff/sampler.hpp"
#include "srdiff/schedule.hpp"

using namespace srdiff;

namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.data.patch = 64;
    cfg.data.scale = 4;
    cfg.train.T = 100;
    cfg.train.c = 16;
    cfg.train.seed = 7;
    cfg.encoder.num_rrdb_blocks = 2;
    cfg.encoder.scale = 4;
    return cfg;
}

void BM_Conv2dForward(benchmark::State& state) {
    const int ch = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor x = rng.normal_tensor({1, ch, 64, 64});
    Tensor k = rng.normal_tensor({ch, ch, 3, 3});
    Tensor b({ch});
    Tensor y({1, ch, 64, 64});
    for (auto _ : state) {
        kern::conv2d_forward(x.data.data(), 1, ch, 64, 64, k.data.data(), ch, 3, b.data.data(),
                             1, 1, y.data.data());
        benchmark::DoNotOptimize(y.data.data());
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64);

void BM_BicubicResize(benchmark::State& state) {
    ImagePlane img(256, 256);
    Rng rng(2);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    for (auto _ : state) {
        ImagePlane out = bicubic_resize(img, 64, 64, true);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_BicubicResize);

void BM_ReverseStep(benchmark::State& state) {
    ModelBundle model = ModelBundle::create(small_config());
    Rng rng(3);
    Tensor x_t = rng.normal_tensor({3, 64, 64});
    Tensor x_e = model.encoder->encode(rng.normal_tensor({3, 16, 16}));
    const int t = model.schedule.T / 2;
    for (auto _ : state) {
        Tensor eps_hat = model.predictor->predict(x_t, x_e, t);
        Tensor z = rng.normal_tensor(x_t.shape);
        Tensor next = reverse_step(x_t, eps_hat, t, &z, model.schedule);
        benchmark::DoNotOptimize(next.data.data());
    }
}
BENCHMARK(BM_ReverseStep);

}  // namespace

BENCHMARK_MAIN();
