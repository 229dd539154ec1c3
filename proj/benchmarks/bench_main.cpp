#include <benchmark/benchmark.h>

#include <random>

#include "adaptmask/heatmap.hpp"
#include "adaptmask/masking.hpp"
#include "adaptmask/mixup.hpp"
#include "adaptmask/model.hpp"

using namespace adaptmask;

static KeypointSet make_keypoints(int k) {
    KeypointSet kps(k);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(4.0, 60.0);
    for (int i = 0; i < k; ++i) {
        kps.coords[i] = {u(rng), u(rng)};
        kps.visibility[i] = Visibility::LabeledVisible;
    }
    return kps;
}

static void BM_SynthesizeTargets(benchmark::State& state) {
    auto kps = make_keypoints(16);
    for (auto _ : state) {
        auto stack = synthesize_targets(kps, 2.0, 32, 32, 2);
        benchmark::DoNotOptimize(stack);
    }
}
BENCHMARK(BM_SynthesizeTargets);

static void BM_ModelForward(benchmark::State& state) {
    BackboneConfig bc;
    std::mt19937_64 rng(11);
    Model model(bc, rng);
    Tensor x(static_cast<int>(state.range(0)), bc.in_channels, bc.input_h, bc.input_w);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : x.raw()) v = u(rng);
    for (auto _ : state) {
        Tensor out = model.forward(x, nullptr, false);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(8);

static void BM_MaskApplication(benchmark::State& state) {
    auto kps = make_keypoints(16);
    Tensor img(1, 3, 64, 64);
    std::mt19937_64 fill(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : img.raw()) v = u(fill);
    MaskPolicy policy;
    MaskBudget budget;
    budget.count = 4;
    std::mt19937_64 rng(5);
    for (auto _ : state) {
        auto [masked, ids] = apply_keypoint_masks(img, kps, budget, policy, rng);
        benchmark::DoNotOptimize(masked);
        benchmark::DoNotOptimize(ids);
    }
}
BENCHMARK(BM_MaskApplication);

static void BM_MixTensors(benchmark::State& state) {
    Tensor a(8, 16, 16, 16), b(8, 16, 16, 16);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : a.raw()) v = u(rng);
    for (auto& v : b.raw()) v = u(rng);
    for (auto _ : state) {
        Tensor out = mix_tensors(a, b, 0.4);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_MixTensors);

BENCHMARK_MAIN();
