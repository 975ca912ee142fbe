#include <benchmark/benchmark.h>

#include <random>

#include "hseg/autodiff.hpp"
#include "hseg/clustering.hpp"
#include "hseg/data.hpp"
#include "hseg/guides.hpp"
#include "hseg/metrics.hpp"

using namespace hseg;

namespace {

Tensor<float> random_tensor(Shape shape, std::uint64_t seed) {
  Tensor<float> t(shape);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto s = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({c, s, s}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ad::conv2d_forward(x, w, b, 1, 1));
  }
}
BENCHMARK(BM_ConvForward)->Args({16, 128})->Args({64, 32});

void BM_ConvBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto s = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({c, s, s}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) {
    ad::Tape<float> tape;
    const auto vx = tape.leaf(x), vw = tape.leaf(w), vb = tape.leaf(b);
    tape.backward(ad::sum(tape, ad::conv2d(tape, vx, vw, vb)));
    benchmark::DoNotOptimize(tape.grad(vw));
  }
}
BENCHMARK(BM_ConvBackward)->Args({16, 128})->Args({64, 32});

void BM_MeanShift(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> pts(count * 12);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t d = 0; d < 12; ++d) pts[i * 12 + d] = static_cast<double>(i % 8) + noise(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_shift(pts, 12, MeanShiftOptions{}));
  }
}
BENCHMARK(BM_MeanShift)->Arg(256)->Arg(1024);

void BM_GuidedEmbedding(benchmark::State& state) {
  PixelSet set{{}, {128, 128}};
  for (int y = 20; y < 60; ++y) {
    for (int x = 30; x < 70; ++x) set.pixels.push_back({x, y});
  }
  const GuideSet guides = sample_guides(12, 0.5, 0.0, 50.0, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(guided_embedding(set, guides));
  }
}
BENCHMARK(BM_GuidedEmbedding);

void BM_Sbd(benchmark::State& state) {
  SynthConfig config;
  config.num_images = 2;
  config.count_min = config.count_max = 20;
  const auto samples = synth(config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sbd(samples[0].label, samples[1].label));
  }
}
BENCHMARK(BM_Sbd);

}  // namespace

BENCHMARK_MAIN();
