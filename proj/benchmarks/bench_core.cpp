#include <benchmark/benchmark.h>

#include "hystop/fft.hpp"
#include "hystop/gemm.hpp"
#include "hystop/material.hpp"
#include "hystop/metrics.hpp"
#include "hystop/models.hpp"
#include "hystop/rng.hpp"
#include "hystop/train.hpp"

using namespace hystop;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

void BM_Rdft500(benchmark::State& state) {
    const RealDft& plan = rdft_plan(500);
    Tensor x = random_tensor({500}, 1);
    std::vector<double> spec(2 * plan.bins());
    for (auto _ : state) {
        plan.forward(x.data.data(), spec.data());
        benchmark::DoNotOptimize(spec.data());
    }
}
BENCHMARK(BM_Rdft500);

void BM_GemmChannelMix(benchmark::State& state) {
    // the pointwise W path of one 64-wide layer at L=500
    Tensor a = random_tensor({64, 64}, 2);
    Tensor b = random_tensor({64, 500}, 3);
    Tensor c({64, 500});
    for (auto _ : state) {
        gemm_nn(64, 500, 64, a.data.data(), b.data.data(), c.data.data());
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * 64 * 64 * 500);
}
BENCHMARK(BM_GemmChannelMix);

void BM_SpectralConv(benchmark::State& state) {
    Param r("r", random_tensor({64, 64, 16, 2}, 4));
    Tensor x = random_tensor({64, 500}, 5);
    for (auto _ : state) {
        Tape tape;
        Var y = tape.spectral_conv_fused(tape.constant(x), tape.param(r), 16);
        benchmark::DoNotOptimize(tape.value(y).data.data());
    }
}
BENCHMARK(BM_SpectralConv);

void BM_FnoForward(benchmark::State& state) {
    ModelParams mp = init_fno(FnoConfig{}, 6);
    Tensor x = random_tensor({1, 2, 500}, 7);
    for (auto _ : state) {
        Tape tape;
        Var y = fno_forward(tape, mp, tape.constant(x));
        benchmark::DoNotOptimize(tape.value(y).data.data());
    }
}
BENCHMARK(BM_FnoForward);

void BM_FnoTrainStep(benchmark::State& state) {
    ModelParams mp = init_fno(FnoConfig{}, 8);
    Tensor x = random_tensor({4, 2, 500}, 9);
    Tensor target = random_tensor({4, 500}, 10);
    for (auto _ : state) {
        mp.zero_grads();
        Tape tape;
        Var pred = fno_forward(tape, mp, tape.constant(x));
        Var loss = l2_loss(tape, pred, tape.constant(target));
        tape.backward(loss);
        benchmark::DoNotOptimize(mp.params.front().grad.data.data());
    }
}
BENCHMARK(BM_FnoTrainStep);

void BM_LoopGeneration(benchmark::State& state) {
    MaterialParams mp = MaterialParams::go_steel_default();
    ExcitationSpec spec;
    spec.freq = 50.0;
    spec.b_peak = 1.5;
    for (auto _ : state) {
        LoopRecord rec = generate_loop(spec, mp);
        benchmark::DoNotOptimize(rec.h.data());
    }
}
BENCHMARK(BM_LoopGeneration);

void BM_CoreLoss(benchmark::State& state) {
    MaterialParams mp = MaterialParams::go_steel_default();
    ExcitationSpec spec;
    spec.freq = 50.0;
    spec.b_peak = 1.5;
    LoopRecord rec = generate_loop(spec, mp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(core_loss(rec.b, rec.h, rec.freq));
    }
}
BENCHMARK(BM_CoreLoss);

} // namespace

BENCHMARK_MAIN();
