#include <benchmark/benchmark.h>

#include <random>

#include "antifor/attack.hpp"
#include "antifor/color.hpp"
#include "antifor/detector.hpp"
#include "antifor/quality.hpp"

using namespace antifor;

namespace {

RgbImage random_image(int res, std::uint64_t seed) {
    RgbImage img(res, res);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    for (float& p : img.pix) p = u(rng);
    return img;
}

Tensor random_tensor(const std::vector<int>& shape, std::uint64_t seed) {
    Tensor t(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (float& v : t.data) v = u(rng);
    return t;
}

DetectorModel noisy_model(std::uint64_t seed, int res = 64) {
    DetectorModel m = DetectorModel::init(DetectorArch::preset("a1", res), seed);
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<float> nd(0.0f, 0.05f);
    for (auto& p : m.params) {
        for (float& v : p.data) v += nd(rng);
    }
    return m;
}

void BM_conv2d_forward(benchmark::State& state) {
    const Tensor x = random_tensor({8, 3, 64, 64}, 1);
    const Tensor k = random_tensor({16, 3, 3, 3}, 2);
    for (auto _ : state) {
        Tape tape;
        Var out = tape.conv2d(tape.leaf(x), tape.leaf(k), 1, 1);
        benchmark::DoNotOptimize(tape.value(out).data.data());
    }
}
BENCHMARK(BM_conv2d_forward);

void BM_conv2d_forward_backward(benchmark::State& state) {
    const Tensor x = random_tensor({8, 3, 64, 64}, 3);
    const Tensor k = random_tensor({16, 3, 3, 3}, 4);
    for (auto _ : state) {
        Tape tape;
        Var xv = tape.leaf(x);
        Var out = tape.conv2d(xv, tape.leaf(k), 1, 1);
        tape.backward(tape.sum(tape.square(out)));
        benchmark::DoNotOptimize(tape.grad(xv).data.data());
    }
}
BENCHMARK(BM_conv2d_forward_backward);

void BM_detector_forward_batch64(benchmark::State& state) {
    const DetectorModel model = noisy_model(5);
    std::vector<RgbImage> images;
    for (int i = 0; i < 64; ++i) images.push_back(random_image(64, 100 + static_cast<std::uint64_t>(i)));
    const Tensor batch = batch_from_images(images);
    for (auto _ : state) {
        Tape tape;
        Var out = model.forward(tape, tape.leaf(batch));
        benchmark::DoNotOptimize(tape.value(out).data.data());
    }
}
BENCHMARK(BM_detector_forward_batch64);

void BM_attack_iteration(benchmark::State& state) {
    const DetectorModel model = noisy_model(6);
    EnsembleSource src{{&model}};
    const RgbImage x = random_image(64, 7);
    for (auto _ : state) {
        const RgbImage g = ensemble_input_gradient(src, x, 1);
        benchmark::DoNotOptimize(g.pix.data());
    }
}
BENCHMARK(BM_attack_iteration);

void BM_rgb_to_ycc(benchmark::State& state) {
    const RgbImage x = random_image(64, 8);
    for (auto _ : state) {
        const YccImage y = rgb_to_ycc(x);
        benchmark::DoNotOptimize(y.pix.data());
    }
}
BENCHMARK(BM_rgb_to_ycc);

void BM_quality_report(benchmark::State& state) {
    const RgbImage x = random_image(64, 9);
    RgbImage y = x;
    std::mt19937_64 rng(10);
    std::normal_distribution<float> nd(0.0f, 2.0f);
    for (float& p : y.pix) p = std::clamp(p + nd(rng), 0.0f, 255.0f);
    for (auto _ : state) {
        const QualityReport q = quality_report(x, y);
        benchmark::DoNotOptimize(&q);
    }
}
BENCHMARK(BM_quality_report);

}  // namespace

BENCHMARK_MAIN();
